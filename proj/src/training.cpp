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

#include "gsq/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "finite_grid.hpp"

namespace gsq {

EmaState
EmaState::init(const Codebook& codebook, double decay, double smoothing) {
    if (!(decay > 0.0 && decay < 1.0)) {
        fail(ErrorCode::InvalidArgument, "EMA decay must lie in (0, 1)");
    }
    if (!(smoothing > 0.0)) {
        fail(ErrorCode::InvalidArgument, "EMA smoothing must be positive");
    }
    EmaState state;
    state.decay = decay;
    state.smoothing = smoothing;
    for (std::size_t t = 0; t < codebook.tables.size(); ++t) {
        state.cluster_size.emplace_back(codebook.entries(t), 1.0);
        state.cluster_sum.push_back(codebook.tables[t]);
    }
    return state;
}

double
EmaState::total_size(std::size_t t) const {
    return std::accumulate(cluster_size[t].begin(), cluster_size[t].end(), 0.0);
}

VectorBatch
to_lookup_space(const VectorBatch& batch, const QuantizerConfig& config) {
    if (batch.dim != config.latent_dim) {
        fail(ErrorCode::DimensionMismatch, "batch dim " + std::to_string(batch.dim) +
                                               " does not match latent_dim " +
                                               std::to_string(config.latent_dim));
    }
    VectorBatch out = batch;
    if (config.is_finite()) {
        for (double& x : out.values) {
            x = detail::sigmoid(x);
        }
    } else if (config.l2_lookup) {
        for (std::size_t i = 0; i < out.count; ++i) {
            auto row = out.row(i);
            for (std::size_t g = 0; g < config.groups; ++g) {
                l2_normalize_inplace(row.subspan(g * config.group_dim, config.group_dim));
            }
        }
    }
    return out;
}

double
commitment_loss(const VectorBatch& batch, const CodeAssignment& assignment,
                const QuantizerConfig& config) {
    if (batch.count != assignment.count || batch.dim != assignment.dequantized.dim ||
        assignment.dequantized.count != batch.count) {
        fail(ErrorCode::DimensionMismatch, "batch and assignment shapes differ");
    }
    if (batch.count == 0) {
        return 0.0;
    }
    const VectorBatch lookup = to_lookup_space(batch, config);
    double total = 0.0;
    for (std::size_t i = 0; i < batch.count; ++i) {
        total += detail::squared_distance(lookup.row(i), assignment.dequantized.row(i));
    }
    return total / static_cast<double>(batch.count);
}

namespace {

void
check_state(const EmaState& state, const Codebook& codebook) {
    if (state.cluster_size.size() != codebook.tables.size() ||
        state.cluster_sum.size() != codebook.tables.size()) {
        fail(ErrorCode::DimensionMismatch, "EMA state does not match the codebook tables");
    }
    for (std::size_t t = 0; t < codebook.tables.size(); ++t) {
        if (state.cluster_size[t].size() != codebook.entries(t) ||
            state.cluster_sum[t].size() != codebook.tables[t].size()) {
            fail(ErrorCode::DimensionMismatch, "EMA state does not match codebook table " +
                                                   std::to_string(t));
        }
    }
}

}  // namespace

TrainReport
ema_step(const VectorBatch& batch, Codebook& codebook, EmaState& state,
         const QuantizerConfig& config) {
    if (config.fixed_codebook) {
        fail(ErrorCode::FixedCodebook, "fixed codebooks cannot be trained");
    }
    check_state(state, codebook);

    TrainReport report;
    report.usage = UsageHistogram(config);
    state.steps += 1;
    report.steps = state.steps;
    if (batch.count == 0) {
        if (batch.dim != config.latent_dim) {
            fail(ErrorCode::DimensionMismatch, "empty batch has the wrong dim");
        }
        return report;
    }

    const CodeAssignment assignment = quantize(batch, codebook, config);
    const VectorBatch lookup = to_lookup_space(batch, config);
    report.usage.add(assignment, config);

    const std::size_t G = config.groups;
    const std::size_t d = config.group_dim;
    std::vector<std::vector<double>> counts(codebook.tables.size());
    std::vector<std::vector<double>> sums(codebook.tables.size());
    for (std::size_t t = 0; t < codebook.tables.size(); ++t) {
        counts[t].assign(codebook.entries(t), 0.0);
        sums[t].assign(codebook.tables[t].size(), 0.0);
    }
    double distance_total = 0.0;
    for (std::size_t i = 0; i < batch.count; ++i) {
        auto row = lookup.row(i);
        for (std::size_t g = 0; g < G; ++g) {
            const std::size_t t = config.table_for_group(g);
            const std::size_t j = assignment.index(i, g);
            counts[t][j] += 1.0;
            for (std::size_t k = 0; k < d; ++k) {
                sums[t][j * d + k] += row[g * d + k];
            }
            distance_total += assignment.distance(i, g);
        }
    }

    const double decay = state.decay;
    const double gain = 1.0 - decay;
    std::vector<double> entry(d);
    for (std::size_t t = 0; t < codebook.tables.size(); ++t) {
        auto& size = state.cluster_size[t];
        auto& sum = state.cluster_sum[t];
        for (std::size_t j = 0; j < size.size(); ++j) {
            size[j] = decay * size[j] + gain * counts[t][j];
            const double denom = size[j] + state.smoothing;
            for (std::size_t k = 0; k < d; ++k) {
                sum[j * d + k] = decay * sum[j * d + k] + gain * sums[t][j * d + k];
                entry[k] = sum[j * d + k] / denom;
            }
            if (config.l2_lookup) {
                double norm_sq = 0.0;
                for (double x : entry) {
                    norm_sq += x * x;
                }
                if (d >= 2 && !(std::sqrt(norm_sq) > kNormEpsilon)) {
                    continue;
                }
                l2_normalize_inplace(entry);
            }
            std::copy(entry.begin(), entry.end(),
                      codebook.tables[t].begin() + static_cast<std::ptrdiff_t>(j * d));
        }
    }

    const double assignments = static_cast<double>(batch.count * G);
    report.mean_quantization_error = distance_total / assignments;
    report.commitment = distance_total / static_cast<double>(batch.count);
    return report;
}

namespace {

void
revive_dead_codes(const VectorBatch& lookup_batch, Codebook& codebook, EmaState& state,
                  const QuantizerConfig& config, double threshold, std::mt19937_64& rng) {
    if (lookup_batch.count == 0) {
        return;
    }
    const std::size_t d = config.group_dim;
    std::uniform_int_distribution<std::size_t> pick_row(0, lookup_batch.count - 1);
    std::uniform_int_distribution<std::size_t> pick_group(0, config.groups - 1);
    for (std::size_t t = 0; t < codebook.tables.size(); ++t) {
        for (std::size_t j = 0; j < codebook.entries(t); ++j) {
            if (state.cluster_size[t][j] >= threshold) {
                continue;
            }
            const std::size_t g = config.shared_codebook ? pick_group(rng) : t;
            auto src = lookup_batch.row(pick_row(rng)).subspan(g * d, d);
            for (std::size_t k = 0; k < d; ++k) {
                codebook.tables[t][j * d + k] = src[k];
                state.cluster_sum[t][j * d + k] = src[k];
            }
            state.cluster_size[t][j] = 1.0;
        }
    }
}

}  // namespace

TrainResult
train(const VectorBatch& corpus, const QuantizerConfig& config, std::uint64_t seed,
      const TrainOptions& options, const ReportCallback& on_report) {
    config.validate();
    if (config.fixed_codebook) {
        fail(ErrorCode::FixedCodebook, "fixed codebooks cannot be trained");
    }
    return train(corpus, config, init_codebook(config, seed), seed, options, on_report);
}

TrainResult
train(const VectorBatch& corpus, const QuantizerConfig& config, Codebook initial,
      std::uint64_t seed, const TrainOptions& options, const ReportCallback& on_report) {
    config.validate();
    if (config.fixed_codebook) {
        fail(ErrorCode::FixedCodebook, "fixed codebooks cannot be trained");
    }
    if (options.steps == 0) {
        fail(ErrorCode::InvalidArgument, "training needs at least one step");
    }
    if (options.batch_size == 0) {
        fail(ErrorCode::InvalidArgument, "batch size must be positive");
    }
    if (corpus.dim != config.latent_dim) {
        fail(ErrorCode::DimensionMismatch, "corpus dim " + std::to_string(corpus.dim) +
                                               " does not match latent_dim " +
                                               std::to_string(config.latent_dim));
    }
    if (corpus.count == 0) {
        fail(ErrorCode::InsufficientData, "training corpus is empty");
    }
    check_codebook(initial, config);

    TrainResult result;
    result.codebook = std::move(initial);
    result.state = EmaState::init(result.codebook, options.decay, options.smoothing);
    result.error_trace.reserve(options.steps);

    // Separate stream from init_codebook's so the sampling order does not
    // depend on how many draws initialization consumed.
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(corpus.count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t cursor = 0;

    const std::size_t batch_size = std::min(options.batch_size, corpus.count);
    VectorBatch batch(batch_size, corpus.dim);
    UsageHistogram window(config);
    double window_error = 0.0;
    double window_commit = 0.0;
    std::size_t window_steps = 0;

    for (std::size_t step = 0; step < options.steps; ++step) {
        for (std::size_t b = 0; b < batch_size; ++b) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            auto src = corpus.row(order[cursor++]);
            std::copy(src.begin(), src.end(), batch.row(b).begin());
        }
        TrainReport report = ema_step(batch, result.codebook, result.state, config);
        if (options.revive_below > 0.0) {
            revive_dead_codes(to_lookup_space(batch, config), result.codebook, result.state,
                              config, options.revive_below, rng);
        }
        result.error_trace.push_back(report.mean_quantization_error);
        window.merge(report.usage);
        window_error += report.mean_quantization_error;
        window_commit += report.commitment;
        ++window_steps;

        const bool last = step + 1 == options.steps;
        const bool snapshot = options.report_every > 0 && (step + 1) % options.report_every == 0;
        if (snapshot || last) {
            TrainReport summary;
            summary.steps = report.steps;
            summary.usage = window;
            summary.mean_quantization_error = window_error / static_cast<double>(window_steps);
            summary.commitment = window_commit / static_cast<double>(window_steps);
            if (snapshot) {
                result.snapshots.push_back(summary);
                if (on_report) {
                    on_report(summary);
                }
            }
            if (last) {
                result.final_report = summary;
            }
            window = UsageHistogram(config);
            window_error = 0.0;
            window_commit = 0.0;
            window_steps = 0;
        }
    }
    return result;
}

UsageHistogram
evaluate_usage(const VectorBatch& corpus, const Codebook& codebook, const QuantizerConfig& config) {
    UsageHistogram h(config);
    h.add(quantize(corpus, codebook, config), config);
    return h;
}

}  // namespace gsq
