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

#include "gsq/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "gsq/analysis.hpp"
#include "gsq/corpus.hpp"
#include "gsq/csv.hpp"
#include "gsq/error.hpp"
#include "gsq/persistence.hpp"
#include "gsq/sweep.hpp"
#include "gsq/training.hpp"
#include "gsq/zoo.hpp"

namespace gsq {

namespace {

/// Raised for invocations that are wrong before any work starts.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr double kNotMeasured = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::string> kToggleValues{"auto", "on", "off"};

Toggle
parse_toggle(const std::string& text) {
    if (text == "on") {
        return Toggle::On;
    }
    if (text == "off") {
        return Toggle::Off;
    }
    return Toggle::Auto;
}

InitKind
parse_init(const std::string& text) {
    return text == "uniform" ? InitKind::UniformInterval : InitKind::SphericalGaussian;
}

/// Flat `key = value` lines; blank lines and lines starting with # or ; are ignored.
std::vector<std::pair<std::string, std::string>>
read_flat_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot read config file " + path);
    }
    auto trim = [](std::string s) {
        const auto first = s.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            return std::string();
        }
        const auto last = s.find_last_not_of(" \t\r");
        s = s.substr(first, last - first + 1);
        if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
            s = s.substr(1, s.size() - 2);
        }
        return s;
    };
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#' || t.front() == ';') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path + ":" + std::to_string(number) + ": expected key = value");
        }
        entries.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return entries;
}

/// Fill options absent from the command line with config-file values.
void
apply_config_file(CLI::App& sub, const std::string& path) {
    for (const auto& [key, value] : read_flat_config(path)) {
        if (key == "config") {
            throw UsageError("config files cannot include other config files");
        }
        CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (opt == nullptr) {
            throw UsageError("unknown config key '" + key + "' for " + sub.get_name());
        }
        if (opt->count() == 0) {
            opt->add_result(value);
            opt->run_callback();
        }
    }
}

std::uint64_t
resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) {
        return *flag;
    }
    if (const char* env = std::getenv("GSQ_SEED"); env != nullptr && *env != '\0') {
        std::uint64_t value = 0;
        const std::string text(env);
        const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
        if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
            throw UsageError("GSQ_SEED is not an unsigned integer: '" + text + "'");
        }
        return value;
    }
    return 0;
}

struct ConfigFlags {
    std::string preset = "gsq";
    std::size_t latent_dim = 0;
    std::optional<std::size_t> groups;
    std::optional<std::size_t> vocab;
    std::vector<std::uint32_t> levels;
    std::string shared = "auto";
    std::string l2 = "auto";
    std::string init = "spherical";
};

void
add_config_flags(CLI::App& sub, ConfigFlags& f) {
    sub.add_option("--preset", f.preset, "Quantizer preset")
        ->check(CLI::IsMember({"vq", "vqgan-vit", "lfq", "fsq", "bsq", "gsq"}))
        ->capture_default_str();
    sub.add_option("-D,--latent-dim", f.latent_dim, "Latent dimension D");
    sub.add_option("-G,--groups", f.groups, "Group count G (gsq)");
    sub.add_option("-V,--vocab", f.vocab, "Codewords per table V");
    sub.add_option("--levels", f.levels, "Finite levels per group (fsq); one value broadcasts")
        ->delimiter(',');
    sub.add_option("--shared", f.shared, "Shared codebook: auto follows the preset")
        ->check(CLI::IsMember(kToggleValues))
        ->capture_default_str();
    sub.add_option("--l2", f.l2, "l2-normalized lookup: auto follows the preset")
        ->check(CLI::IsMember(kToggleValues))
        ->capture_default_str();
    sub.add_option("--init", f.init, "Codebook initialization")
        ->check(CLI::IsMember({"spherical", "uniform"}))
        ->capture_default_str();
}

ZooPreset
resolve_preset(const ConfigFlags& f) {
    if (f.latent_dim == 0) {
        throw UsageError("--latent-dim is required");
    }
    try {
        PresetRequest req;
        req.name = parse_preset_name(f.preset);
        req.latent_dim = f.latent_dim;
        req.vocab = f.vocab;
        req.groups = f.groups;
        if (!f.levels.empty()) {
            req.levels = f.levels;
        }
        ZooPreset p = preset(req);
        const bool fixed = p.config.fixed_codebook;
        if (fixed && (f.shared != "auto" || f.l2 != "auto")) {
            throw UsageError("--shared and --l2 cannot override the fixed preset " + f.preset);
        }
        if (!fixed) {
            if (f.shared != "auto") {
                p.config.shared_codebook = f.shared == "on";
            }
            if (f.l2 != "auto") {
                p.config.l2_lookup = f.l2 == "on";
            }
            p.config.init = parse_init(f.init);
        }
        p.config.validate();
        return p;
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

std::string
levels_text(const QuantizerConfig& c) {
    std::string out;
    if (c.finite_levels) {
        for (std::size_t i = 0; i < c.finite_levels->size(); ++i) {
            out += (i > 0 ? ";" : "") + std::to_string((*c.finite_levels)[i]);
        }
    }
    return out;
}

void
echo_config(std::ostream& out, const QuantizerConfig& c, std::string_view preset_name = {}) {
    if (!preset_name.empty()) {
        out << "preset=" << preset_name << '\n';
    }
    out << "latent_dim=" << c.latent_dim << '\n'
        << "groups=" << c.groups << '\n'
        << "group_dim=" << c.group_dim << '\n'
        << "vocab=" << c.vocab << '\n'
        << "shared=" << (c.shared_codebook ? 1 : 0) << '\n'
        << "l2_lookup=" << (c.l2_lookup ? 1 : 0) << '\n'
        << "fixed=" << (c.fixed_codebook ? 1 : 0) << '\n'
        << "finite_levels=" << levels_text(c) << '\n'
        << "init=" << init_kind_name(c.init) << '\n'
        << "effective_bits=" << format_double(effective_vocab_bits(c)) << '\n';
}

/// Write with save(), reload with load() and require equality.
void
save_codebook_verified(const Codebook& cb, const QuantizerConfig& config, const std::string& path) {
    save_codebook(cb, config, path);
    const auto back = load_codebook(path);
    if (!(back.config == config) || back.codebook.tables.size() != cb.tables.size()) {
        fail(ErrorCode::IoError, "codebook written to " + path + " did not read back identically");
    }
    // Payload is stored as float32.
    for (std::size_t t = 0; t < cb.tables.size(); ++t) {
        for (std::size_t j = 0; j < cb.tables[t].size(); ++j) {
            if (static_cast<float>(cb.tables[t][j]) != back.codebook.tables[t][j]) {
                fail(ErrorCode::IoError, "codebook written to " + path + " did not read back");
            }
        }
    }
}

struct CorpusFlags {
    std::string path;
    std::size_t patch_size = 8;
    std::optional<std::size_t> stride;
};

CLI::Option*
add_corpus_flags(CLI::App& sub, CorpusFlags& f, const std::string& name, const std::string& help) {
    CLI::Option* source = sub.add_option(name, f.path, help);
    sub.add_option("--patch-size", f.patch_size, "Square patch size for image corpora")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub.add_option("--stride", f.stride, "Patch stride for image corpora (default: patch size)")
        ->check(CLI::PositiveNumber);
    return source;
}

LoadedCorpus
load_flag_corpus(const CorpusFlags& f, bool keep_images) {
    CorpusOptions opts;
    opts.patch_size = f.patch_size;
    opts.stride = f.stride.value_or(f.patch_size);
    opts.keep_images = keep_images;
    return load_corpus(f.path, opts);
}

void
require_dim(const VectorBatch& vectors, const QuantizerConfig& config) {
    if (vectors.dim != config.latent_dim) {
        fail(ErrorCode::DimensionMismatch, "corpus vectors have dim " +
                                               std::to_string(vectors.dim) +
                                               " but the quantizer expects " +
                                               std::to_string(config.latent_dim));
    }
}

/// Open --csv target or fall back to stdout; flush and check on completion.
class CsvSink {
public:
    CsvSink(const std::string& path, std::ostream& fallback) : path_(path), fallback_(fallback) {
        if (!path_.empty()) {
            file_.open(path_, std::ios::binary | std::ios::trunc);
            if (!file_) {
                fail(ErrorCode::IoError, "cannot write " + path_);
            }
        }
    }
    std::ostream&
    stream() {
        return path_.empty() ? fallback_ : file_;
    }
    void
    finish() {
        stream().flush();
        if (!stream()) {
            fail(ErrorCode::IoError, "failed writing " + (path_.empty() ? "csv" : path_));
        }
    }

private:
    std::string path_;
    std::ostream& fallback_;
    std::ofstream file_;
};

RunRecord
base_record(const std::string& command, const QuantizerConfig& config, std::uint64_t seed) {
    RunRecord r;
    r.command = command;
    r.run_id = command + "-0";
    r.config = config;
    r.seed = seed;
    r.preset.clear();
    return r;
}

void
attach_geometry(RunRecord& r, const LoadedCorpus& corpus, const CorpusFlags& f) {
    if (!corpus.is_image()) {
        return;
    }
    r.patch_size = f.patch_size;
    r.stride = f.stride.value_or(f.patch_size);
    r.geometry = patch_geometry(*corpus.patches, r.config.latent_dim);
}

/// Metrics on a corpus; pixel metrics when the codewords live in patch space.
RunMetrics
corpus_metrics(const LoadedCorpus& corpus, const Codebook& cb, const QuantizerConfig& config,
               const EvalOptions& opts) {
    const VectorBatch& vectors = corpus.vectors();
    const auto assignment = quantize(vectors, cb, config);
    RunMetrics m = evaluate_assignment(vectors, assignment, cb, config, opts);
    if (corpus.is_image()) {
        apply_pixel_metrics(*corpus.patches, assignment.dequantized, opts.peak, m);
    }
    return m;
}

// ---------------------------------------------------------------- init

struct InitCmd {
    ConfigFlags config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int
run_init(const InitCmd& c, std::ostream& out) {
    const ZooPreset p = resolve_preset(c.config);
    const std::uint64_t seed = resolve_seed(c.seed);
    const Codebook cb = p.fixed_codebook ? *p.fixed_codebook : init_codebook(p.config, seed);
    save_codebook_verified(cb, p.config, c.out);
    echo_config(out, p.config, c.config.preset);
    out << "seed=" << seed << '\n' << "wrote=" << c.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainCmd {
    ConfigFlags config;
    CorpusFlags corpus;
    std::string codebook;
    std::optional<std::uint64_t> seed;
    std::size_t steps = 0;
    std::size_t batch_size = 256;
    double decay = kDefaultEmaDecay;
    double smoothing = kDefaultEmaSmoothing;
    std::size_t report_every = 0;
    double revive_below = 0.0;
    std::size_t entropy_rows = 8192;
    std::string out;
    std::string report_csv;
};

int
run_train(const TrainCmd& c, std::ostream& out) {
    if (c.steps == 0) {
        throw UsageError("--steps must be at least 1");
    }
    if (!(c.decay > 0.0 && c.decay < 1.0)) {
        throw UsageError("--decay must lie in (0, 1)");
    }
    if (!(c.smoothing > 0.0)) {
        throw UsageError("--smoothing must be positive");
    }
    if (c.batch_size == 0) {
        throw UsageError("--batch-size must be positive");
    }
    const std::uint64_t seed = resolve_seed(c.seed);

    QuantizerConfig config;
    std::optional<Codebook> initial;
    std::string preset_name;
    if (!c.codebook.empty()) {
        auto loaded = load_codebook(c.codebook);
        config = loaded.config;
        initial = std::move(loaded.codebook);
    } else {
        const ZooPreset p = resolve_preset(c.config);
        config = p.config;
        preset_name = c.config.preset;
    }
    if (config.fixed_codebook) {
        throw UsageError("codebook is fixed and cannot be trained" +
                         (preset_name.empty() ? std::string() : " (preset " + preset_name + ")"));
    }

    const LoadedCorpus corpus = load_flag_corpus(c.corpus, !c.report_csv.empty());
    const VectorBatch& vectors = corpus.vectors();
    require_dim(vectors, config);

    TrainOptions opts;
    opts.steps = c.steps;
    opts.batch_size = c.batch_size;
    opts.decay = c.decay;
    opts.smoothing = c.smoothing;
    opts.report_every = c.report_every;
    opts.revive_below = c.revive_below;
    const TrainResult result = initial ? train(vectors, config, *initial, seed, opts)
                                       : train(vectors, config, seed, opts);
    save_codebook_verified(result.codebook, config, c.out);

    if (!c.report_csv.empty()) {
        std::vector<RunRecord> rows;
        auto make = [&](const std::string& phase, std::uint64_t step) {
            RunRecord r = base_record("train", config, seed);
            r.preset = preset_name;
            r.phase = phase;
            r.step = step;
            r.steps = c.steps;
            r.batch_size = c.batch_size;
            r.decay = c.decay;
            attach_geometry(r, corpus, c.corpus);
            r.run_id = "train-" + std::to_string(rows.size());
            return r;
        };
        for (const auto& snap : result.snapshots) {
            RunRecord r = make("train", snap.steps);
            RunMetrics m;
            m.rows = snap.usage.rows;
            m.usage_pct = usage_percent(snap.usage);
            m.ppl = perplexity(snap.usage);
            m.ppl_per_group_mean = perplexity_per_group_mean(snap.usage);
            m.mse = m.psnr_db = kNotMeasured;
            m.commitment = snap.commitment;
            m.quant_error = snap.mean_quantization_error;
            m.entropy = {kNotMeasured, kNotMeasured, kNotMeasured};
            r.metrics = m;
            rows.push_back(std::move(r));
        }
        RunRecord final_row = make("final", result.state.steps);
        EvalOptions eval;
        eval.entropy_rows = c.entropy_rows;
        final_row.metrics = corpus_metrics(corpus, result.codebook, config, eval);
        rows.push_back(std::move(final_row));

        CsvSink sink(c.report_csv, out);
        write_run_records(sink.stream(), rows, false);
        sink.finish();
    }
    echo_config(out, config, preset_name);
    out << "seed=" << seed << '\n'
        << "steps=" << result.state.steps << '\n'
        << "final_window_usage_pct=" << format_double(usage_percent(result.final_report.usage))
        << '\n'
        << "wrote=" << c.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- encode / decode

struct EncodeCmd {
    std::string codebook;
    CorpusFlags corpus;
    std::string out;
};

int
run_encode(const EncodeCmd& c, std::ostream& out) {
    const auto loaded = load_codebook(c.codebook);
    const LoadedCorpus corpus = load_flag_corpus(c.corpus, false);
    require_dim(corpus.vectors(), loaded.config);
    const auto assignment = quantize(corpus.vectors(), loaded.codebook, loaded.config);
    IndexMatrix m;
    m.count = static_cast<std::uint32_t>(assignment.count);
    m.groups = static_cast<std::uint32_t>(assignment.groups);
    m.vocab = static_cast<std::uint32_t>(loaded.config.vocab);
    m.indices = assignment.indices;
    save_indices(m, c.out);
    const IndexMatrix back = load_indices(c.out);
    if (back.count != m.count || back.groups != m.groups || back.indices != m.indices) {
        fail(ErrorCode::IoError, "index file " + c.out + " did not read back identically");
    }
    echo_config(out, loaded.config);
    out << "rows=" << m.count << '\n' << "wrote=" << c.out << '\n';
    return kExitOk;
}

struct DecodeCmd {
    std::string codebook;
    std::string in;
    std::string out;
};

int
run_decode(const DecodeCmd& c, std::ostream& out) {
    const auto loaded = load_codebook(c.codebook);
    const IndexMatrix m = load_indices(c.in);
    if (m.groups != loaded.config.groups || m.vocab != loaded.config.vocab) {
        fail(ErrorCode::DimensionMismatch,
             "index file is " + std::to_string(m.groups) + " groups x V " +
                 std::to_string(m.vocab) + " but the codebook is " +
                 std::to_string(loaded.config.groups) + " groups x V " +
                 std::to_string(loaded.config.vocab));
    }
    const VectorBatch values = dequantize(m.indices, m.count, loaded.codebook, loaded.config);
    save_tensor(values, c.out);
    const VectorBatch back = load_tensor(c.out);
    if (back.count != values.count || back.dim != values.dim) {
        fail(ErrorCode::IoError, "tensor " + c.out + " did not read back");
    }
    echo_config(out, loaded.config);
    out << "rows=" << m.count << '\n' << "wrote=" << c.out << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalCmd {
    std::string codebook;
    CorpusFlags corpus;
    std::string csv;
    std::optional<std::uint64_t> seed;
    double peak = 1.0;
    std::size_t entropy_rows = 8192;
    double temperature = 1.0;
};

int
run_eval(const EvalCmd& c, std::ostream& out) {
    const std::uint64_t seed = resolve_seed(c.seed);
    const auto loaded = load_codebook(c.codebook);
    const LoadedCorpus corpus = load_flag_corpus(c.corpus, true);
    require_dim(corpus.vectors(), loaded.config);
    EvalOptions opts;
    opts.peak = c.peak;
    opts.entropy_rows = c.entropy_rows;
    opts.temperature = c.temperature;
    RunRecord r = base_record("eval", loaded.config, seed);
    r.phase = "final";
    attach_geometry(r, corpus, c.corpus);
    r.metrics = corpus_metrics(corpus, loaded.codebook, loaded.config, opts);
    CsvSink sink(c.csv, out);
    write_run_records(sink.stream(), std::span<const RunRecord>(&r, 1), false);
    sink.finish();
    return kExitOk;
}

// ---------------------------------------------------------------- sweep

struct SweepCmd {
    std::string corpus;
    std::vector<std::size_t> patch_sizes{8};
    std::vector<std::size_t> dims;
    std::vector<std::size_t> group_dims;
    std::vector<std::size_t> groups;
    std::vector<std::size_t> vocabs;
    std::size_t steps = 2000;
    std::size_t batch_size = 256;
    double decay = kDefaultEmaDecay;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    std::string shared = "auto";
    std::string l2 = "off";
    std::string init = "spherical";
    std::size_t entropy_rows = 8192;
    bool with_timing = false;
    std::string csv;
};

int
run_sweep_cmd(const SweepCmd& c, std::ostream& out) {
    if (c.dims.empty() == c.group_dims.empty()) {
        throw UsageError("give exactly one of --dims or --group-dims");
    }
    if (c.steps == 0) {
        throw UsageError("--steps must be at least 1");
    }
    if (!(c.decay > 0.0 && c.decay < 1.0)) {
        throw UsageError("--decay must lie in (0, 1)");
    }
    SweepSpec spec;
    spec.corpus = c.corpus;
    spec.patch_sizes = c.patch_sizes;
    spec.latent_dims = c.dims;
    spec.group_dims = c.group_dims;
    spec.groups = c.groups;
    spec.vocabs = c.vocabs;
    spec.steps = c.steps;
    spec.batch_size = c.batch_size;
    spec.decay = c.decay;
    spec.seed = resolve_seed(c.seed);
    spec.jobs = c.jobs;
    spec.shared = parse_toggle(c.shared);
    spec.l2 = parse_toggle(c.l2);
    spec.init = parse_init(c.init);
    spec.eval.entropy_rows = c.entropy_rows;
    spec.timing = c.with_timing;
    const auto records = run_sweep(spec);
    CsvSink sink(c.csv, out);
    write_run_records(sink.stream(), records, c.with_timing);
    sink.finish();
    return kExitOk;
}

// ---------------------------------------------------------------- dist-stats

struct DistStatsCmd {
    std::vector<std::size_t> dims;
    std::vector<double> sigmas{1.0};
    bool normalized = false;
    std::size_t samples = 1000000;
    std::optional<std::uint64_t> seed;
    std::string csv;
};

int
run_dist_stats(const DistStatsCmd& c, std::ostream& out) {
    const std::uint64_t seed = resolve_seed(c.seed);
    std::vector<DistanceStatsReport> reports;
    for (std::size_t n : c.dims) {
        for (double sigma : c.sigmas) {
            try {
                reports.push_back(distance_stats(n, sigma, c.normalized, c.samples, seed));
            } catch (const Error& e) {
                if (e.code() == ErrorCode::DegenerateDim || e.code() == ErrorCode::InvalidArgument) {
                    throw UsageError(e.what());
                }
                throw;
            }
        }
    }
    CsvSink sink(c.csv, out);
    CsvWriter w(sink.stream(),
                {"schema_version", "n", "sigma", "normalized", "samples", "seed", "sample_mean",
                 "sample_var", "predicted_mean", "predicted_var", "exact_var", "mean_stderr",
                 "var_stderr", "mean_z", "var_z", "var_z_exact"});
    for (const auto& r : reports) {
        const double mean_z = (r.sample_mean - r.predicted_mean) / r.mean_stderr;
        const double var_z = (r.sample_var - r.predicted_var) / r.var_stderr;
        const double var_z_exact = (r.sample_var - r.exact_var) / r.var_stderr;
        w.row({std::to_string(kCsvSchemaVersion), std::to_string(r.dim), format_double(r.sigma),
               r.normalized ? "1" : "0", std::to_string(r.samples), std::to_string(seed),
               format_double(r.sample_mean), format_double(r.sample_var),
               format_double(r.predicted_mean), format_double(r.predicted_var),
               format_double(r.exact_var), format_double(r.mean_stderr),
               format_double(r.var_stderr), format_double(mean_z), format_double(var_z),
               format_double(var_z_exact)});
    }
    sink.finish();
    return kExitOk;
}

// ---------------------------------------------------------------- fit-scaling

struct FitCmd {
    std::string csv_in;
    double log_base = 2.0;
    std::string score_column = "score";
    std::string vocab_column = "vocab";
    std::string dim_column = "latent_dim";
    std::string out;
};

int
run_fit(const FitCmd& c, std::ostream& out) {
    if (!(c.log_base > 0.0) || c.log_base == 1.0) {
        throw UsageError("--log-base must be positive and not 1");
    }
    const CsvTable table = read_csv(c.csv_in);
    auto column = [&](const std::string& name) {
        const auto idx = table.column(name);
        if (!idx) {
            throw UsageError(c.csv_in + " has no column '" + name + "'");
        }
        return *idx;
    };
    const std::size_t vi = column(c.vocab_column);
    const std::size_t di = column(c.dim_column);
    const std::size_t si = column(c.score_column);
    const auto status = table.column("status");
    std::vector<ScalingObservation> obs;
    for (const auto& row : table.rows) {
        if (status && row[*status] != "ok") {
            continue;
        }
        if (row[si].empty() || row[vi].empty() || row[di].empty()) {
            continue;
        }
        obs.push_back({parse_double(row[vi]), parse_double(row[di]), parse_double(row[si])});
    }
    const ScalingFit fit = fit_scaling(obs, c.log_base);
    ScalingFit published = published_scaling_fit(c.log_base);
    published.residual_rms = scaling_residual_rms(published, obs);

    CsvSink sink(c.out, out);
    CsvWriter w(sink.stream(), {"schema_version", "model", "B", "alpha", "c_dim", "beta",
                                "residual_rms", "log_base", "observations", "score_column"});
    for (const auto& [name, f] : {std::pair{"fit", fit}, std::pair{"published", published}}) {
        w.row({std::to_string(kCsvSchemaVersion), name, format_double(f.B), format_double(f.alpha),
               format_double(f.c_dim), format_double(f.beta), format_double(f.residual_rms),
               format_double(f.log_base), std::to_string(obs.size()), c.score_column});
    }
    sink.finish();
    return kExitOk;
}

}  // namespace

int
run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Grouped spherical quantization toolkit", "gsq"};
    app.require_subcommand(1, 1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    std::map<CLI::App*, std::string> config_paths;
    // Checked after the config file is merged so required values may come from it.
    std::vector<std::pair<CLI::App*, CLI::Option*>> required;
    auto need = [&](CLI::App* sub, CLI::Option* opt) { required.emplace_back(sub, opt); };
    auto add_sub = [&](const std::string& name, const std::string& help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_paths[sub], "Flat key = value file of option defaults");
        return sub;
    };
    auto add_seed = [](CLI::App* sub, std::optional<std::uint64_t>& seed) {
        sub->add_option("--seed", seed, "RNG seed (default: GSQ_SEED, else 0)");
    };

    InitCmd init_cmd;
    CLI::App* init = add_sub("init", "Create a codebook file");
    add_config_flags(*init, init_cmd.config);
    add_seed(init, init_cmd.seed);
    need(init, init->add_option("-o,--out", init_cmd.out, "Output .gsqc path"));

    TrainCmd train_cmd;
    CLI::App* train_sub = add_sub("train", "Train a codebook with EMA updates");
    add_config_flags(*train_sub, train_cmd.config);
    need(train_sub, add_corpus_flags(*train_sub, train_cmd.corpus, "--corpus",
                          "Training vectors: .gsqt tensor, .ppm image or directory of .ppm"));
    train_sub->add_option("--codebook", train_cmd.codebook,
                          "Start from this .gsqc instead of a fresh initialization");
    add_seed(train_sub, train_cmd.seed);
    need(train_sub, train_sub->add_option("--steps", train_cmd.steps, "EMA steps"));
    train_sub->add_option("--batch-size", train_cmd.batch_size)->capture_default_str();
    train_sub->add_option("--decay", train_cmd.decay, "EMA decay")->capture_default_str();
    train_sub->add_option("--smoothing", train_cmd.smoothing)->capture_default_str();
    train_sub->add_option("--report-every", train_cmd.report_every,
                          "Snapshot cadence in steps (0: final only)")
        ->capture_default_str();
    train_sub->add_option("--revive-below", train_cmd.revive_below,
                          "Reseed codewords whose EMA size falls below this (0: off)")
        ->capture_default_str();
    train_sub->add_option("--entropy-rows", train_cmd.entropy_rows,
                          "Vectors used for entropy terms (0: all)")
        ->capture_default_str();
    need(train_sub, train_sub->add_option("-o,--out", train_cmd.out, "Output .gsqc path"));
    train_sub->add_option("--report-csv", train_cmd.report_csv, "Training report CSV");

    EncodeCmd encode_cmd;
    CLI::App* encode = add_sub("encode", "Quantize vectors to an index file");
    need(encode, encode->add_option("--codebook", encode_cmd.codebook, "Codebook .gsqc"));
    need(encode, add_corpus_flags(*encode, encode_cmd.corpus, "--in", "Input vectors or images"));
    need(encode, encode->add_option("-o,--out", encode_cmd.out, "Output .gsqi path"));

    DecodeCmd decode_cmd;
    CLI::App* decode = add_sub("decode", "Dequantize an index file to a tensor");
    need(decode, decode->add_option("--codebook", decode_cmd.codebook, "Codebook .gsqc"));
    need(decode, decode->add_option("--in", decode_cmd.in, "Input .gsqi"));
    need(decode, decode->add_option("-o,--out", decode_cmd.out, "Output .gsqt path"));

    EvalCmd eval_cmd;
    CLI::App* eval = add_sub("eval", "Codebook usage and reconstruction metrics");
    need(eval, eval->add_option("--codebook", eval_cmd.codebook, "Codebook .gsqc"));
    need(eval, add_corpus_flags(*eval, eval_cmd.corpus, "--corpus", "Evaluation vectors or images"));
    add_seed(eval, eval_cmd.seed);
    eval->add_option("--peak", eval_cmd.peak, "Peak value for PSNR and SSIM")
        ->capture_default_str();
    eval->add_option("--entropy-rows", eval_cmd.entropy_rows)->capture_default_str();
    eval->add_option("--temperature", eval_cmd.temperature, "Soft-assignment temperature")
        ->capture_default_str();
    eval->add_option("--csv", eval_cmd.csv, "Output CSV (default: stdout)");

    SweepCmd sweep_cmd;
    CLI::App* sweep = add_sub("sweep", "Train and evaluate a grid of configurations");
    need(sweep, sweep->add_option("--corpus", sweep_cmd.corpus, "Image directory, .ppm or .gsqt"));
    sweep->add_option("--patch-sizes", sweep_cmd.patch_sizes)->delimiter(',')->capture_default_str();
    sweep->add_option("--dims", sweep_cmd.dims, "Total latent dims D")->delimiter(',');
    sweep->add_option("--group-dims", sweep_cmd.group_dims, "Per-group dims d (D = G d)")
        ->delimiter(',');
    need(sweep, sweep->add_option("--groups", sweep_cmd.groups, "Group counts G")->delimiter(','));
    need(sweep, sweep->add_option("--vocabs", sweep_cmd.vocabs, "Vocabulary sizes V")
        ->delimiter(',')
        );
    sweep->add_option("--steps", sweep_cmd.steps)->capture_default_str();
    sweep->add_option("--batch-size", sweep_cmd.batch_size)->capture_default_str();
    sweep->add_option("--decay", sweep_cmd.decay)->capture_default_str();
    add_seed(sweep, sweep_cmd.seed);
    sweep->add_option("-j,--jobs", sweep_cmd.jobs, "Cells run concurrently")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sweep->add_option("--shared", sweep_cmd.shared)
        ->check(CLI::IsMember(kToggleValues))
        ->capture_default_str();
    sweep->add_option("--l2", sweep_cmd.l2)
        ->check(CLI::IsMember(kToggleValues))
        ->capture_default_str();
    sweep->add_option("--init", sweep_cmd.init)
        ->check(CLI::IsMember({"spherical", "uniform"}))
        ->capture_default_str();
    sweep->add_option("--entropy-rows", sweep_cmd.entropy_rows)->capture_default_str();
    sweep->add_flag("--with-timing", sweep_cmd.with_timing, "Add a wall_time_s column");
    sweep->add_option("--csv", sweep_cmd.csv, "Output CSV (default: stdout)");

    DistStatsCmd dist_cmd;
    CLI::App* dist = add_sub("dist-stats", "Monte-Carlo squared-distance moments");
    need(dist, dist->add_option("-n,--n", dist_cmd.dims, "Dimensions")->delimiter(','));
    dist->add_option("--sigma", dist_cmd.sigmas)->delimiter(',')->capture_default_str();
    dist->add_flag("--normalized", dist_cmd.normalized, "l2-normalize both vectors");
    dist->add_option("--samples", dist_cmd.samples)->capture_default_str();
    add_seed(dist, dist_cmd.seed);
    dist->add_option("--csv", dist_cmd.csv, "Output CSV (default: stdout)");

    FitCmd fit_cmd;
    CLI::App* fit = add_sub("fit-scaling", "Fit score = B/(log V)^alpha + c D^beta");
    need(fit, fit->add_option("--csv-in", fit_cmd.csv_in, "Observations CSV"));
    fit->add_option("--log-base", fit_cmd.log_base)->capture_default_str();
    fit->add_option("--score-column", fit_cmd.score_column)->capture_default_str();
    fit->add_option("--vocab-column", fit_cmd.vocab_column)->capture_default_str();
    fit->add_option("--dim-column", fit_cmd.dim_column)->capture_default_str();
    fit->add_option("-o,--out", fit_cmd.out, "Output CSV (default: stdout)");

    std::vector<std::string> argv_storage{"gsq"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_storage) {
        argv.push_back(a.c_str());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        CLI::App* sub = app.get_subcommands().front();
        if (const auto& path = config_paths[sub]; !path.empty()) {
            apply_config_file(*sub, path);
        }
        for (const auto& [owner, opt] : required) {
            if (owner == sub && opt->count() == 0) {
                throw UsageError(opt->get_name() + " is required");
            }
        }
        if (sub == init) {
            return run_init(init_cmd, out);
        }
        if (sub == train_sub) {
            return run_train(train_cmd, out);
        }
        if (sub == encode) {
            return run_encode(encode_cmd, out);
        }
        if (sub == decode) {
            return run_decode(decode_cmd, out);
        }
        if (sub == eval) {
            return run_eval(eval_cmd, out);
        }
        if (sub == sweep) {
            return run_sweep_cmd(sweep_cmd, out);
        }
        if (sub == dist) {
            return run_dist_stats(dist_cmd, out);
        }
        return run_fit(fit_cmd, out);
    } catch (const CLI::Error& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace gsq
