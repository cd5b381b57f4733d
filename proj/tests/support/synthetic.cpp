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

#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "gsq/persistence.hpp"

namespace gsq::testing {

Image
synthetic_image(std::uint64_t seed, std::size_t width, std::size_t height) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);

    Image image;
    image.width = width;
    image.height = height;
    image.channels = 3;
    image.data.assign(width * height * 3, 0.0);

    // Background: per-channel linear gradient plus two low-frequency waves.
    struct Wave {
        double fx, fy, phase, amp;
    };
    double base[3], gx[3], gy[3];
    Wave waves[3][2];
    for (int c = 0; c < 3; ++c) {
        base[c] = 0.25 + 0.5 * u(rng);
        gx[c] = 0.3 * (u(rng) - 0.5);
        gy[c] = 0.3 * (u(rng) - 0.5);
        for (auto& w : waves[c]) {
            w = {0.5 + 4.0 * u(rng), 0.5 + 4.0 * u(rng), 2.0 * std::numbers::pi * u(rng),
                 0.05 + 0.1 * u(rng)};
        }
    }
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double nx = static_cast<double>(x) / static_cast<double>(width);
            const double ny = static_cast<double>(y) / static_cast<double>(height);
            for (int c = 0; c < 3; ++c) {
                double v = base[c] + gx[c] * nx + gy[c] * ny;
                for (const auto& w : waves[c]) {
                    v += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * nx + w.fy * ny) + w.phase);
                }
                image.at(x, y, static_cast<std::size_t>(c)) = v;
            }
        }
    }

    // Filled shapes: ellipses and oriented stripe patches.
    const int shapes = 12 + static_cast<int>(u(rng) * 12);
    for (int s = 0; s < shapes; ++s) {
        const double cx = u(rng) * static_cast<double>(width);
        const double cy = u(rng) * static_cast<double>(height);
        const double rx = 4.0 + u(rng) * static_cast<double>(width) / 6.0;
        const double ry = 4.0 + u(rng) * static_cast<double>(height) / 6.0;
        const double angle = u(rng) * std::numbers::pi;
        const bool stripes = u(rng) < 0.3;
        const double period = 3.0 + 8.0 * u(rng);
        double colour[3];
        for (double& c : colour) {
            c = u(rng);
        }
        const double ca = std::cos(angle), sa = std::sin(angle);
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) {
                const double dx = static_cast<double>(x) - cx;
                const double dy = static_cast<double>(y) - cy;
                const double a = (ca * dx + sa * dy) / rx;
                const double b = (-sa * dx + ca * dy) / ry;
                if (a * a + b * b > 1.0) {
                    continue;
                }
                double mix = 1.0;
                if (stripes) {
                    mix = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * (ca * dx + sa * dy) / period);
                }
                for (std::size_t c = 0; c < 3; ++c) {
                    double& px = image.at(x, y, c);
                    px = (1.0 - mix) * px + mix * colour[c];
                }
            }
        }
    }

    for (double& v : image.data) {
        v = std::clamp(v + 0.02 * g(rng), 0.0, 1.0);
    }
    return image;
}

std::vector<std::filesystem::path>
write_synthetic_corpus(const std::filesystem::path& dir, std::size_t count, std::size_t width,
                       std::size_t height, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> paths;
    for (std::size_t i = 0; i < count; ++i) {
        auto path = dir / ("img_" + std::to_string(i) + ".ppm");
        write_ppm(synthetic_image(seed * 1000003ULL + i, width, height), path);
        paths.push_back(path);
    }
    return paths;
}

VectorBatch
heavy_tailed_mixture(std::uint64_t seed, std::size_t count, std::size_t dim) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    constexpr double weights[3] = {0.6, 0.3, 0.1};
    constexpr double amplitude[3] = {1.0, 3.0, 10.0};
    std::vector<std::vector<double>> scale(3, std::vector<double>(dim));
    std::vector<std::vector<double>> mean(3, std::vector<double>(dim));
    for (int k = 0; k < 3; ++k) {
        for (std::size_t j = 0; j < dim; ++j) {
            scale[k][j] = amplitude[k] * std::exp(0.8 * g(rng));
            mean[k][j] = 0.5 * g(rng);
        }
    }
    VectorBatch out(count, dim);
    for (std::size_t i = 0; i < count; ++i) {
        const double r = u(rng);
        const int k = r < weights[0] ? 0 : (r < weights[0] + weights[1] ? 1 : 2);
        auto row = out.row(i);
        for (std::size_t j = 0; j < dim; ++j) {
            row[j] = mean[k][j] + scale[k][j] * g(rng);
        }
    }
    return out;
}

PlantedClusters
planted_clusters(std::uint64_t seed, std::size_t clusters, std::size_t dim, std::size_t per_cluster,
                 double spread, double noise) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    PlantedClusters out;
    out.centers = VectorBatch(clusters, dim);
    for (double& v : out.centers.values) {
        v = spread * g(rng);
    }
    out.points = VectorBatch(clusters * per_cluster, dim);
    out.labels.resize(clusters * per_cluster);
    for (std::size_t i = 0; i < out.points.count; ++i) {
        const auto k = static_cast<std::uint32_t>(i % clusters);
        out.labels[i] = k;
        for (std::size_t j = 0; j < dim; ++j) {
            out.points.row(i)[j] = out.centers.row(k)[j] + noise * g(rng);
        }
    }
    return out;
}

std::vector<ScalingObservation>
scaling_observations(const ScalingFit& truth, double noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<ScalingObservation> out;
    for (int bits = 6; bits <= 22; bits += 4) {
        for (double dim : {1.0, 8.0, 64.0, 512.0}) {
            const double vocab = std::ldexp(1.0, bits);
            const double clean = scaling_eval(truth, vocab, dim);
            out.push_back({vocab, dim, clean * (1.0 + noise * g(rng))});
        }
    }
    return out;
}

std::filesystem::path
scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("gsq_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace gsq::testing
