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

#include "gsq/sweep.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <thread>

#include "gsq/corpus.hpp"
#include "gsq/csv.hpp"
#include "gsq/error.hpp"
#include "gsq/metrics.hpp"
#include "gsq/patch_encoder.hpp"

namespace gsq {

RunMetrics
evaluate_assignment(const VectorBatch& vectors, const CodeAssignment& assignment,
                    const Codebook& codebook, const QuantizerConfig& config,
                    const EvalOptions& options) {
    if (vectors.count == 0) {
        fail(ErrorCode::InvalidArgument, "cannot evaluate on an empty corpus");
    }
    if (assignment.count != vectors.count || assignment.dequantized.dim != vectors.dim) {
        fail(ErrorCode::DimensionMismatch, "assignment does not match the evaluated vectors");
    }
    RunMetrics m;
    m.rows = vectors.count;

    UsageHistogram usage(config);
    usage.add(assignment, config);
    m.usage_pct = usage_percent(usage);
    m.ppl = perplexity(usage);
    m.ppl_per_group_mean = perplexity_per_group_mean(usage);

    m.mse = mse(vectors.values, assignment.dequantized.values);
    m.psnr_db = psnr_from_mse(m.mse, options.peak);
    m.commitment = commitment_loss(vectors, assignment, config);

    double total = 0.0;
    for (double dist : assignment.distances) {
        total += dist;
    }
    m.quant_error = total / static_cast<double>(assignment.distances.size());

    if (options.entropy_rows == 0 || options.entropy_rows >= vectors.count) {
        m.entropy = entropy_loss(vectors, codebook, config, options.temperature);
    } else {
        const std::size_t n = options.entropy_rows;
        VectorBatch head(n, vectors.dim,
                         std::vector<double>(vectors.values.begin(),
                                             vectors.values.begin() +
                                                 static_cast<std::ptrdiff_t>(n * vectors.dim)));
        m.entropy = entropy_loss(head, codebook, config, options.temperature);
    }
    return m;
}

RunMetrics
evaluate_codebook(const VectorBatch& vectors, const Codebook& codebook,
                  const QuantizerConfig& config, const EvalOptions& options) {
    const auto assignment = quantize(vectors, codebook, config);
    return evaluate_assignment(vectors, assignment, codebook, config, options);
}

void
apply_pixel_metrics(const PatchCorpus& corpus, const VectorBatch& reconstructed, double peak,
                    RunMetrics& metrics) {
    if (reconstructed.count != corpus.patches.count || reconstructed.dim != corpus.patches.dim) {
        fail(ErrorCode::DimensionMismatch, "reconstruction does not match the patch corpus");
    }
    metrics.mse = mse(corpus.patches.values, reconstructed.values);
    metrics.psnr_db = psnr_from_mse(metrics.mse, peak);
    metrics.ssim.reset();
    if (corpus.images.size() != corpus.image_sizes.size()) {
        return;
    }
    const auto rebuilt = assemble_patches(corpus, reconstructed);
    double total = 0.0;
    std::size_t counted = 0;
    SsimOptions opts;
    for (std::size_t i = 0; i < rebuilt.size(); ++i) {
        if (rebuilt[i].width < opts.window || rebuilt[i].height < opts.window) {
            continue;
        }
        const Image reference = crop_image(corpus.images[i], rebuilt[i].width, rebuilt[i].height);
        total += ssim(reference, rebuilt[i], peak, opts);
        ++counted;
    }
    if (counted > 0) {
        metrics.ssim = total / static_cast<double>(counted);
    }
}

namespace {

std::string
yes_no(bool v) {
    return v ? "1" : "0";
}

std::string
levels_text(const QuantizerConfig& c) {
    if (!c.finite_levels) {
        return {};
    }
    std::string out;
    for (std::size_t i = 0; i < c.finite_levels->size(); ++i) {
        if (i > 0) {
            out += ';';
        }
        out += std::to_string((*c.finite_levels)[i]);
    }
    return out;
}

// Metrics that were not measured are carried as NaN and written empty.
std::string
metric_text(double v) {
    return std::isnan(v) ? std::string() : format_double(v);
}

std::string
count_text(std::size_t v) {
    return v == 0 ? std::string() : std::to_string(v);
}

}  // namespace

std::vector<std::string>
run_record_header(bool with_timing) {
    std::vector<std::string> h{
        "schema_version", "run_id", "command", "phase", "step", "preset", "seed", "latent_dim",
        "groups", "group_dim", "vocab", "shared", "l2_lookup", "fixed", "finite_levels", "init",
        "effective_bits", "patch_size", "stride", "image_height", "image_width", "downsample",
        "latent_height", "latent_width", "compression_ratio", "steps", "batch_size", "decay",
        "status", "reason", "rows", "usage_pct", "ppl", "ppl_pooled", "ppl_per_group_mean",
        "mse", "psnr_db", "ssim", "commitment", "quant_error", "entropy_per_sample",
        "entropy_codebook", "entropy_loss"};
    if (with_timing) {
        h.push_back("wall_time_s");
    }
    return h;
}

std::vector<std::string>
run_record_fields(const RunRecord& r, bool with_timing) {
    const auto& c = r.config;
    std::vector<std::string> f{std::to_string(kCsvSchemaVersion),
                               r.run_id,
                               r.command,
                               r.phase,
                               r.step ? std::to_string(*r.step) : std::string(),
                               r.preset,
                               std::to_string(r.seed),
                               count_text(c.latent_dim),
                               count_text(c.groups),
                               count_text(c.group_dim),
                               count_text(c.vocab),
                               yes_no(c.shared_codebook),
                               yes_no(c.l2_lookup),
                               yes_no(c.fixed_codebook),
                               levels_text(c),
                               std::string(init_kind_name(c.init))};
    double bits = 0.0;
    bool have_bits = false;
    try {
        bits = effective_vocab_bits(c);
        have_bits = true;
    } catch (const Error&) {
    }
    f.push_back(have_bits ? format_double(bits) : std::string());
    f.push_back(count_text(r.patch_size));
    f.push_back(count_text(r.stride));
    if (r.geometry) {
        const auto& g = *r.geometry;
        f.push_back(std::to_string(g.image_height));
        f.push_back(std::to_string(g.image_width));
        f.push_back(std::to_string(g.downsample));
        f.push_back(std::to_string(g.latent_height));
        f.push_back(std::to_string(g.latent_width));
        f.push_back(format_double(g.compression_ratio()));
    } else {
        f.insert(f.end(), 6, std::string());
    }
    f.push_back(count_text(r.steps));
    f.push_back(count_text(r.batch_size));
    f.push_back(format_optional(r.decay));
    f.push_back(r.status);
    f.push_back(r.reason);
    if (r.metrics) {
        const auto& m = *r.metrics;
        f.push_back(std::to_string(m.rows));
        for (double v : {m.usage_pct, m.ppl, m.ppl, m.ppl_per_group_mean, m.mse, m.psnr_db}) {
            f.push_back(metric_text(v));
        }
        f.push_back(format_optional(m.ssim));
        for (double v : {m.commitment, m.quant_error, m.entropy.per_sample_entropy,
                         m.entropy.codebook_entropy, m.entropy.loss}) {
            f.push_back(metric_text(v));
        }
    } else {
        f.insert(f.end(), 13, std::string());
    }
    if (with_timing) {
        f.push_back(format_optional(r.wall_time_s));
    }
    return f;
}

void
write_run_records(std::ostream& out, std::span<const RunRecord> records, bool with_timing) {
    CsvWriter writer(out, run_record_header(with_timing));
    for (const auto& r : records) {
        writer.row(run_record_fields(r, with_timing));
    }
}

bool
resolve_toggle(Toggle toggle, bool automatic) noexcept {
    switch (toggle) {
        case Toggle::On:
            return true;
        case Toggle::Off:
            return false;
        case Toggle::Auto:
            break;
    }
    return automatic;
}

namespace {

struct Cell {
    std::size_t source = 0;  // index into the prepared corpora
    std::size_t latent_dim = 0;
    QuantizerConfig config;
    bool runnable = false;
};

struct PreparedSource {
    std::size_t patch_size = 0;
    std::optional<LoadedCorpus> corpus;
    std::string error;
    std::map<std::size_t, PatchEncoder> encoders;
    std::map<std::size_t, VectorBatch> latents;
};

void
check_spec(const SweepSpec& spec) {
    if (spec.latent_dims.empty() == spec.group_dims.empty()) {
        fail(ErrorCode::InvalidArgument,
             "a sweep needs exactly one of latent dims (D) or group dims (d)");
    }
    if (spec.groups.empty() || spec.vocabs.empty()) {
        fail(ErrorCode::InvalidArgument, "a sweep needs at least one group count and vocab size");
    }
    if (spec.steps == 0 || spec.batch_size == 0) {
        fail(ErrorCode::InvalidArgument, "sweep steps and batch size must be positive");
    }
    if (spec.jobs == 0) {
        fail(ErrorCode::InvalidArgument, "sweep jobs must be positive");
    }
}

bool
is_tensor_path(const std::filesystem::path& path) {
    return !std::filesystem::is_directory(path) && path.extension() != ".ppm";
}

}  // namespace

std::vector<RunRecord>
run_sweep(const SweepSpec& spec) {
    check_spec(spec);
    const bool tensor = is_tensor_path(spec.corpus);
    std::vector<std::size_t> patch_sizes = tensor ? std::vector<std::size_t>{0} : spec.patch_sizes;
    if (patch_sizes.empty()) {
        fail(ErrorCode::InvalidArgument, "a sweep over images needs at least one patch size");
    }

    std::vector<PreparedSource> sources(patch_sizes.size());
    for (std::size_t s = 0; s < patch_sizes.size(); ++s) {
        sources[s].patch_size = patch_sizes[s];
        try {
            if (!tensor && patch_sizes[s] == 0) {
                fail(ErrorCode::InvalidArgument, "patch size must be positive");
            }
            CorpusOptions opts;
            opts.patch_size = patch_sizes[s];
            opts.stride = patch_sizes[s];
            opts.keep_images = true;
            sources[s].corpus = load_corpus(spec.corpus, tensor ? CorpusOptions{} : opts);
            if (sources[s].corpus->vectors().count == 0) {
                fail(ErrorCode::InsufficientData, "corpus holds no vectors");
            }
        } catch (const Error& e) {
            if (tensor) {
                throw;
            }
            sources[s].error = e.what();
        }
    }

    const bool by_total = !spec.latent_dims.empty();
    const auto& latent_axis = by_total ? spec.latent_dims : spec.group_dims;
    std::vector<RunRecord> records;
    std::vector<Cell> cells;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        for (std::size_t width : latent_axis) {
            for (std::size_t groups : spec.groups) {
                for (std::size_t vocab : spec.vocabs) {
                    RunRecord r;
                    r.command = "sweep";
                    r.phase = "final";
                    r.run_id = "sweep-" + std::to_string(records.size());
                    r.seed = spec.seed;
                    r.patch_size = sources[s].patch_size;
                    r.stride = sources[s].patch_size;
                    r.steps = spec.steps;
                    r.batch_size = spec.batch_size;
                    r.decay = spec.decay;
                    Cell cell;
                    cell.source = s;
                    const std::size_t D = by_total ? width : width * groups;
                    cell.latent_dim = D;
                    r.config.latent_dim = D;
                    r.config.groups = groups;
                    r.config.vocab = vocab;
                    r.config.init = spec.init;
                    r.status = "skipped";
                    if (groups == 0 || D == 0) {
                        r.reason = "groups and latent_dim must be positive";
                    } else if (D % groups != 0) {
                        r.reason = "groups " + std::to_string(groups) +
                                   " do not divide latent_dim " + std::to_string(D);
                    } else if (!sources[s].error.empty()) {
                        r.config.group_dim = D / groups;
                        r.reason = sources[s].error;
                    } else {
                        const std::size_t d = D / groups;
                        r.config.group_dim = d;
                        const std::size_t raw = sources[s].corpus->vectors().dim;
                        if (D > raw) {
                            r.reason = "latent_dim " + std::to_string(D) +
                                       " exceeds the input dim " + std::to_string(raw);
                        } else {
                            try {
                                r.config = make_config(D, groups, vocab,
                                                       resolve_toggle(spec.l2, default_l2_lookup(d)),
                                                       resolve_toggle(spec.shared, d > 2));
                                r.config.init = spec.init;
                                r.config.validate();
                                r.status = "ok";
                                cell.runnable = true;
                            } catch (const Error& e) {
                                r.reason = e.what();
                            }
                        }
                    }
                    cell.config = r.config;
                    if (sources[s].corpus && sources[s].corpus->is_image() && D > 0) {
                        try {
                            r.geometry = patch_geometry(*sources[s].corpus->patches, D);
                        } catch (const Error&) {
                        }
                    }
                    records.push_back(std::move(r));
                    cells.push_back(std::move(cell));
                }
            }
        }
    }

    // Encoders and latents are shared by every cell of a (source, D) pair.
    for (const auto& cell : cells) {
        if (!cell.runnable) {
            continue;
        }
        auto& src = sources[cell.source];
        if (src.latents.count(cell.latent_dim) != 0) {
            continue;
        }
        const VectorBatch& raw = src.corpus->vectors();
        if (cell.latent_dim == raw.dim) {
            src.latents.emplace(cell.latent_dim, raw);
        } else {
            auto enc = PatchEncoder::fit(raw, cell.latent_dim);
            src.latents.emplace(cell.latent_dim, enc.encode(raw));
            src.encoders.emplace(cell.latent_dim, std::move(enc));
        }
    }

    auto run_cell = [&](std::size_t i) {
        const Cell& cell = cells[i];
        RunRecord& r = records[i];
        const auto start = std::chrono::steady_clock::now();
        try {
            const auto& src = sources[cell.source];
            const VectorBatch& latents = src.latents.at(cell.latent_dim);
            TrainOptions opts;
            opts.steps = spec.steps;
            opts.batch_size = spec.batch_size;
            opts.decay = spec.decay;
            const auto result = train(latents, cell.config, spec.seed, opts);
            const auto assignment = quantize(latents, result.codebook, cell.config);
            RunMetrics m =
                evaluate_assignment(latents, assignment, result.codebook, cell.config, spec.eval);
            const auto enc = src.encoders.find(cell.latent_dim);
            const bool projected = enc != src.encoders.end();
            const VectorBatch recon =
                projected ? enc->second.decode(assignment.dequantized) : assignment.dequantized;
            if (src.corpus->is_image()) {
                apply_pixel_metrics(*src.corpus->patches, recon, spec.eval.peak, m);
            } else if (projected) {
                m.mse = mse(src.corpus->vectors().values, recon.values);
                m.psnr_db = psnr_from_mse(m.mse, spec.eval.peak);
            }
            r.metrics = m;
        } catch (const Error& e) {
            r.status = "failed";
            r.reason = e.what();
        }
        if (spec.timing) {
            r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                                .count();
        }
    };

    std::vector<std::size_t> work;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].runnable) {
            work.push_back(i);
        }
    }
    const std::size_t workers = std::min(spec.jobs, std::max<std::size_t>(work.size(), 1));
    if (workers <= 1) {
        for (std::size_t i : work) {
            run_cell(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t k = next++; k < work.size(); k = next++) {
                    run_cell(work[k]);
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    return records;
}

}  // namespace gsq
