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
#include <functional>
#include <vector>

#include "gsq/metrics.hpp"
#include "gsq/quantizer.hpp"

namespace gsq {

inline constexpr double kDefaultEmaDecay = 0.999;
inline constexpr double kDefaultEmaSmoothing = 1e-5;
inline constexpr double kCommitmentWeight = 0.25;

/**
 * Exponential-moving-average cluster statistics, one slot per table entry.
 * A fresh state holds one pseudo-observation per codeword located at the
 * codeword itself, so codewords stay put until real data reaches them.
 */
struct EmaState {
    std::vector<std::vector<double>> cluster_size;  // per table, V entries
    std::vector<std::vector<double>> cluster_sum;   // per table, V x d entries
    double decay = kDefaultEmaDecay;
    double smoothing = kDefaultEmaSmoothing;
    std::uint64_t steps = 0;

    static EmaState
    init(const Codebook& codebook, double decay = kDefaultEmaDecay,
         double smoothing = kDefaultEmaSmoothing);

    /// Sum of cluster_size over table t.
    double
    total_size(std::size_t t) const;
};

struct TrainReport {
    std::uint64_t steps = 0;
    /// Mean over rows and groups of the squared lookup-space distance.
    double mean_quantization_error = 0.0;
    UsageHistogram usage;
    /// Mean over rows of the squared lookup-space distance summed over groups.
    double commitment = 0.0;
};

/**
 * One EMA update. The batch is assigned with quantize(); each table's
 * statistics decay by `decay` and absorb (1 - decay) times the counts and
 * sums of its assigned vectors (normalized vectors under l2 lookup; every
 * group feeds table 0 when shared). Codeword j becomes
 * cluster_sum_j / (cluster_size_j + smoothing), re-projected to the sphere
 * under l2 lookup. An empty batch only advances the step counter.
 */
TrainReport
ema_step(const VectorBatch& batch, Codebook& codebook, EmaState& state,
         const QuantizerConfig& config);

/// Mean over rows of |lookup(z) - dequantized|^2 summed over the latent.
double
commitment_loss(const VectorBatch& batch, const CodeAssignment& assignment,
                const QuantizerConfig& config);

struct TrainOptions {
    std::size_t steps = 0;
    std::size_t batch_size = 256;
    double decay = kDefaultEmaDecay;
    double smoothing = kDefaultEmaSmoothing;
    /// Snapshot cadence in steps; 0 disables snapshots.
    std::size_t report_every = 0;
    /// Replace codewords whose EMA cluster size falls below this value with
    /// random batch vectors. 0 (the default) disables revival.
    double revive_below = 0.0;
};

struct TrainResult {
    Codebook codebook;
    EmaState state;
    /// Last step's report; usage covers the final reporting window.
    TrainReport final_report;
    std::vector<TrainReport> snapshots;
    /// mean_quantization_error of every step, in order.
    std::vector<double> error_trace;
};

using ReportCallback = std::function<void(const TrainReport&)>;

/**
 * Run `steps` EMA updates on minibatches drawn from the corpus. Minibatches
 * walk a seeded permutation of the corpus, reshuffled every epoch; the
 * initial codebook comes from init_codebook(config, seed). Deterministic for
 * a given seed and corpus order.
 */
TrainResult
train(const VectorBatch& corpus, const QuantizerConfig& config, std::uint64_t seed,
      const TrainOptions& options, const ReportCallback& on_report = {});

/// As above, continuing from an existing codebook.
TrainResult
train(const VectorBatch& corpus, const QuantizerConfig& config, Codebook initial,
      std::uint64_t seed, const TrainOptions& options, const ReportCallback& on_report = {});

/// Quantize the whole corpus once and histogram every assignment.
UsageHistogram
evaluate_usage(const VectorBatch& corpus, const Codebook& codebook, const QuantizerConfig& config);

/// The input mapped into lookup space (group slices normalized under l2 lookup).
VectorBatch
to_lookup_space(const VectorBatch& batch, const QuantizerConfig& config);

}  // namespace gsq
