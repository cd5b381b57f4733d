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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsq/objectives.hpp"
#include "gsq/persistence.hpp"
#include "gsq/quantizer.hpp"
#include "gsq/training.hpp"

namespace gsq {

/// Metrics of one codebook on one set of vectors.
struct RunMetrics {
    std::size_t rows = 0;
    double usage_pct = 0.0;
    /// Perplexity pooled over tables.
    double ppl = 0.0;
    double ppl_per_group_mean = 0.0;
    /// Per-element squared error of the reconstruction against the input.
    double mse = 0.0;
    double psnr_db = 0.0;
    /// Only for image corpora.
    std::optional<double> ssim;
    double commitment = 0.0;
    /// Mean squared lookup-space distance per (row, group).
    double quant_error = 0.0;
    EntropyTerms entropy;
};

struct EvalOptions {
    /// Peak signal value for PSNR and SSIM.
    double peak = 1.0;
    /// Entropy terms use the first entropy_rows vectors; 0 means all.
    std::size_t entropy_rows = 8192;
    double temperature = 1.0;
};

/// Metrics of an existing assignment; mse compares the dequantized vectors with `vectors`.
RunMetrics
evaluate_assignment(const VectorBatch& vectors, const CodeAssignment& assignment,
                    const Codebook& codebook, const QuantizerConfig& config,
                    const EvalOptions& options = {});

RunMetrics
evaluate_codebook(const VectorBatch& vectors, const Codebook& codebook,
                  const QuantizerConfig& config, const EvalOptions& options = {});

/**
 * Replace mse and psnr_db with pixel-space values of `reconstructed` against
 * the corpus patches, and set ssim from the re-assembled images (requires a
 * corpus loaded with keep_images).
 */
void
apply_pixel_metrics(const PatchCorpus& corpus, const VectorBatch& reconstructed, double peak,
                    RunMetrics& metrics);

/// One CSV row: the full configuration, geometry, training settings and metrics.
struct RunRecord {
    std::string run_id;
    std::string command;
    std::string phase;
    std::optional<std::uint64_t> step;
    std::string preset = "gsq";
    std::uint64_t seed = 0;
    QuantizerConfig config;
    std::optional<CompressionGeometry> geometry;
    std::size_t patch_size = 0;
    std::size_t stride = 0;
    std::size_t steps = 0;
    std::size_t batch_size = 0;
    std::optional<double> decay;
    std::string status = "ok";
    std::string reason;
    std::optional<RunMetrics> metrics;
    std::optional<double> wall_time_s;
};

std::vector<std::string>
run_record_header(bool with_timing);

std::vector<std::string>
run_record_fields(const RunRecord& record, bool with_timing);

void
write_run_records(std::ostream& out, std::span<const RunRecord> records, bool with_timing);

enum class Toggle { Auto, On, Off };

/// Auto defers to the preset rule for group dimension d.
bool
resolve_toggle(Toggle toggle, bool automatic) noexcept;

/**
 * Grid of training runs over patch size, latent width, group count and
 * vocabulary. The latent axis is given either as total widths D
 * (latent_dims) or as per-group widths d (group_dims, D = G d), never both.
 * Patches are projected to D channels with a PatchEncoder fitted on the
 * corpus (identity when D = 3 p^2) and decoded back for pixel metrics.
 * A tensor corpus is used as-is: patch sizes are ignored and recorded as 0.
 * Cells that cannot run are reported with status "skipped" and a reason.
 * Records come back in grid order (patch size, latent, G, V) regardless of
 * jobs, and every cell trains from the same seed.
 */
struct SweepSpec {
    std::filesystem::path corpus;
    std::vector<std::size_t> patch_sizes{8};
    std::vector<std::size_t> latent_dims;
    std::vector<std::size_t> group_dims;
    std::vector<std::size_t> groups;
    std::vector<std::size_t> vocabs;
    std::size_t steps = 2000;
    std::size_t batch_size = 256;
    double decay = kDefaultEmaDecay;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    Toggle shared = Toggle::Off;
    Toggle l2 = Toggle::Off;
    InitKind init = InitKind::SphericalGaussian;
    EvalOptions eval;
    bool timing = false;
};

std::vector<RunRecord>
run_sweep(const SweepSpec& spec);

}  // namespace gsq
