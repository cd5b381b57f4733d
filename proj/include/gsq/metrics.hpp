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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gsq/quantizer.hpp"

namespace gsq {

/**
 * Code-usage counts. One count vector per codebook table: a shared codebook
 * pools every group into table 0, an unshared one keeps a vector per group.
 * `rows` is the number of input vectors observed (the measurement window).
 */
struct UsageHistogram {
    std::vector<std::vector<std::uint64_t>> counts;
    std::uint64_t rows = 0;

    UsageHistogram() = default;
    explicit UsageHistogram(const QuantizerConfig& config);

    /// Single-table histogram from raw counts; rows is set to the count total.
    static UsageHistogram
    from_counts(std::vector<std::uint64_t> counts);

    void
    add(const CodeAssignment& assignment, const QuantizerConfig& config);

    /// Associative and commutative; shapes must agree.
    void
    merge(const UsageHistogram& other);

    std::uint64_t
    total() const noexcept;
};

/// 100 * (codes with count > 0) / (total table entries).
double
usage_percent(const UsageHistogram& h);

/// exp of the entropy of code usage pooled across tables by code index.
double
perplexity(const UsageHistogram& h);

/// Mean over tables of each table's own perplexity.
double
perplexity_per_group_mean(const UsageHistogram& h);

double
mse(std::span<const double> a, std::span<const double> b);

/// 10 log10(max^2 / mse); +infinity when mse == 0.
double
psnr_from_mse(double mse_value, double max_value);

double
psnr(std::span<const double> a, std::span<const double> b, double max_value);

/// Interleaved image, channel-minor: data[(y * width + x) * channels + c].
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 1;
    std::vector<double> data;

    double
    at(std::size_t x, std::size_t y, std::size_t c = 0) const noexcept {
        return data[(y * width + x) * channels + c];
    }
    double&
    at(std::size_t x, std::size_t y, std::size_t c = 0) noexcept {
        return data[(y * width + x) * channels + c];
    }
};

struct SsimOptions {
    std::size_t window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
};

/// Mean SSIM over every fully-contained Gaussian window, averaged over channels.
double
ssim(const Image& a, const Image& b, double max_value = 1.0, const SsimOptions& options = {});

}  // namespace gsq
