// Copyright 2026-present the gsq project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gsq/metrics.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace gsq {

UsageHistogram::UsageHistogram(const QuantizerConfig& config) {
    for (std::size_t t = 0; t < config.table_count(); ++t) {
        counts.emplace_back(config.entries_in_table(t), 0);
    }
}

UsageHistogram
UsageHistogram::from_counts(std::vector<std::uint64_t> raw) {
    UsageHistogram h;
    h.rows = std::accumulate(raw.begin(), raw.end(), std::uint64_t{0});
    h.counts.push_back(std::move(raw));
    return h;
}

void
UsageHistogram::add(const CodeAssignment& assignment, const QuantizerConfig& config) {
    if (counts.size() != config.table_count() || assignment.groups != config.groups) {
        fail(ErrorCode::DimensionMismatch, "histogram shape does not match the assignment");
    }
    for (std::size_t i = 0; i < assignment.count; ++i) {
        for (std::size_t g = 0; g < assignment.groups; ++g) {
            counts[config.table_for_group(g)][assignment.index(i, g)] += 1;
        }
    }
    rows += assignment.count;
}

void
UsageHistogram::merge(const UsageHistogram& other) {
    if (counts.empty()) {
        *this = other;
        return;
    }
    if (other.counts.size() != counts.size()) {
        fail(ErrorCode::DimensionMismatch, "cannot merge histograms of different table counts");
    }
    for (std::size_t t = 0; t < counts.size(); ++t) {
        if (other.counts[t].size() != counts[t].size()) {
            fail(ErrorCode::DimensionMismatch, "cannot merge histograms of different vocab");
        }
        for (std::size_t j = 0; j < counts[t].size(); ++j) {
            counts[t][j] += other.counts[t][j];
        }
    }
    rows += other.rows;
}

std::uint64_t
UsageHistogram::total() const noexcept {
    std::uint64_t sum = 0;
    for (const auto& table : counts) {
        sum = std::accumulate(table.begin(), table.end(), sum);
    }
    return sum;
}

double
usage_percent(const UsageHistogram& h) {
    std::size_t used = 0;
    std::size_t entries = 0;
    for (const auto& table : h.counts) {
        entries += table.size();
        for (auto c : table) {
            used += c > 0 ? 1 : 0;
        }
    }
    if (entries == 0) {
        fail(ErrorCode::InvalidArgument, "usage of an empty histogram");
    }
    return 100.0 * static_cast<double>(used) / static_cast<double>(entries);
}

namespace {

double
perplexity_of(std::span<const std::uint64_t> counts) {
    const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(),
                                                             std::uint64_t{0}));
    if (total == 0.0) {
        return 1.0;
    }
    double entropy = 0.0;
    for (auto c : counts) {
        if (c > 0) {
            const double p = static_cast<double>(c) / total;
            entropy -= p * std::log(p);
        }
    }
    return std::exp(entropy);
}

}  // namespace

double
perplexity(const UsageHistogram& h) {
    if (h.counts.empty()) {
        fail(ErrorCode::InvalidArgument, "perplexity of an empty histogram");
    }
    if (h.counts.size() == 1) {
        return perplexity_of(h.counts.front());
    }
    std::size_t width = 0;
    for (const auto& table : h.counts) {
        width = std::max(width, table.size());
    }
    std::vector<std::uint64_t> pooled(width, 0);
    for (const auto& table : h.counts) {
        for (std::size_t j = 0; j < table.size(); ++j) {
            pooled[j] += table[j];
        }
    }
    return perplexity_of(pooled);
}

double
perplexity_per_group_mean(const UsageHistogram& h) {
    if (h.counts.empty()) {
        fail(ErrorCode::InvalidArgument, "perplexity of an empty histogram");
    }
    double sum = 0.0;
    for (const auto& table : h.counts) {
        sum += perplexity_of(table);
    }
    return sum / static_cast<double>(h.counts.size());
}

double
mse(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        fail(ErrorCode::DimensionMismatch, "mse operands differ in size");
    }
    if (a.empty()) {
        fail(ErrorCode::InvalidArgument, "mse of empty inputs");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc / static_cast<double>(a.size());
}

double
psnr_from_mse(double mse_value, double max_value) {
    if (mse_value <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(max_value * max_value / mse_value);
}

double
psnr(std::span<const double> a, std::span<const double> b, double max_value) {
    return psnr_from_mse(mse(a, b), max_value);
}

namespace {

std::vector<double>
gaussian_kernel(std::size_t size, double sigma) {
    std::vector<double> k(size);
    const double centre = (static_cast<double>(size) - 1.0) / 2.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < size; ++i) {
        const double x = static_cast<double>(i) - centre;
        k[i] = std::exp(-x * x / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) {
        v /= sum;
    }
    return k;
}

/// Separable "valid" filtering of a single-channel plane.
std::vector<double>
filter_valid(const std::vector<double>& plane, std::size_t width, std::size_t height,
             const std::vector<double>& kernel) {
    const std::size_t n = kernel.size();
    const std::size_t out_w = width - n + 1;
    const std::size_t out_h = height - n + 1;
    std::vector<double> rows(out_w * height);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                acc += kernel[k] * plane[y * width + x + k];
            }
            rows[y * out_w + x] = acc;
        }
    }
    std::vector<double> out(out_w * out_h);
    for (std::size_t y = 0; y < out_h; ++y) {
        for (std::size_t x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                acc += kernel[k] * rows[(y + k) * out_w + x];
            }
            out[y * out_w + x] = acc;
        }
    }
    return out;
}

}  // namespace

double
ssim(const Image& a, const Image& b, double max_value, const SsimOptions& options) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
        fail(ErrorCode::DimensionMismatch, "ssim operands differ in shape");
    }
    if (a.data.size() != a.width * a.height * a.channels ||
        b.data.size() != b.width * b.height * b.channels) {
        fail(ErrorCode::DimensionMismatch, "ssim image storage does not match its shape");
    }
    if (a.width < options.window || a.height < options.window) {
        fail(ErrorCode::InvalidArgument, "ssim needs images of at least " +
                                             std::to_string(options.window) + " pixels per side");
    }
    const double c1 = (options.k1 * max_value) * (options.k1 * max_value);
    const double c2 = (options.k2 * max_value) * (options.k2 * max_value);
    const auto kernel = gaussian_kernel(options.window, options.sigma);
    const std::size_t plane_size = a.width * a.height;

    double total = 0.0;
    for (std::size_t c = 0; c < a.channels; ++c) {
        std::vector<double> x(plane_size), y(plane_size), xx(plane_size), yy(plane_size),
            xy(plane_size);
        for (std::size_t i = 0; i < plane_size; ++i) {
            x[i] = a.data[i * a.channels + c];
            y[i] = b.data[i * b.channels + c];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mu_x = filter_valid(x, a.width, a.height, kernel);
        const auto mu_y = filter_valid(y, a.width, a.height, kernel);
        const auto e_xx = filter_valid(xx, a.width, a.height, kernel);
        const auto e_yy = filter_valid(yy, a.width, a.height, kernel);
        const auto e_xy = filter_valid(xy, a.width, a.height, kernel);
        double channel_sum = 0.0;
        for (std::size_t i = 0; i < mu_x.size(); ++i) {
            const double mx = mu_x[i];
            const double my = mu_y[i];
            const double vx = e_xx[i] - mx * mx;
            const double vy = e_yy[i] - my * my;
            const double cov = e_xy[i] - mx * my;
            channel_sum += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                           ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
        total += channel_sum / static_cast<double>(mu_x.size());
    }
    return total / static_cast<double>(a.channels);
}

}  // namespace gsq
