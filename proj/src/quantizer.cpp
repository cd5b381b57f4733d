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

#include "gsq/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "finite_grid.hpp"

namespace gsq {

std::string_view
error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidConfig:
            return "InvalidConfig";
        case ErrorCode::InvalidArgument:
            return "InvalidArgument";
        case ErrorCode::DegenerateVector:
            return "DegenerateVector";
        case ErrorCode::DimensionMismatch:
            return "DimensionMismatch";
        case ErrorCode::IndexOutOfRange:
            return "IndexOutOfRange";
        case ErrorCode::InvalidPreset:
            return "InvalidPreset";
        case ErrorCode::FixedCodebook:
            return "FixedCodebook";
        case ErrorCode::InsufficientData:
            return "InsufficientData";
        case ErrorCode::DegenerateFit:
            return "DegenerateFit";
        case ErrorCode::DegenerateDim:
            return "DegenerateDim";
        case ErrorCode::CorruptFile:
            return "CorruptFile";
        case ErrorCode::VersionMismatch:
            return "VersionMismatch";
        case ErrorCode::ChecksumMismatch:
            return "ChecksumMismatch";
        case ErrorCode::UnreadableImage:
            return "UnreadableImage";
        case ErrorCode::PatchTooLarge:
            return "PatchTooLarge";
        case ErrorCode::IoError:
            return "IoError";
    }
    return "Unknown";
}

std::string_view
init_kind_name(InitKind kind) noexcept {
    switch (kind) {
        case InitKind::SphericalGaussian:
            return "spherical";
        case InitKind::UniformInterval:
            return "uniform";
        case InitKind::Explicit:
            return "explicit";
    }
    return "unknown";
}

void
QuantizerConfig::validate() const {
    auto bad = [](const std::string& what) { fail(ErrorCode::InvalidConfig, what); };
    if (latent_dim == 0) {
        bad("latent_dim must be positive");
    }
    if (groups == 0) {
        bad("groups must be positive");
    }
    if (group_dim == 0) {
        bad("group_dim must be positive");
    }
    if (groups * group_dim != latent_dim) {
        bad("groups x group_dim = " + std::to_string(groups * group_dim) +
            " does not equal latent_dim = " + std::to_string(latent_dim));
    }
    if (vocab < 2) {
        bad("vocab must be at least 2");
    }
    if (vocab > std::numeric_limits<std::uint32_t>::max()) {
        bad("vocab does not fit in 32-bit indices");
    }
    if (finite_levels) {
        if (finite_levels->size() != groups) {
            bad("finite_levels has " + std::to_string(finite_levels->size()) + " entries for " +
                std::to_string(groups) + " groups");
        }
        if (group_dim != 1) {
            bad("finite levels require group_dim = 1");
        }
        if (shared_codebook) {
            bad("finite levels are per group and cannot be shared");
        }
        for (auto level : *finite_levels) {
            if (level < 2) {
                bad("every finite level count must be at least 2");
            }
        }
        auto max_level = *std::max_element(finite_levels->begin(), finite_levels->end());
        if (max_level != vocab) {
            bad("vocab must equal the largest finite level count");
        }
    }
}

std::size_t
QuantizerConfig::entries_in_table(std::size_t t) const {
    if (finite_levels) {
        return (*finite_levels)[t];
    }
    return vocab;
}

QuantizerConfig
make_config(std::size_t latent_dim, std::size_t groups, std::size_t vocab,
            std::optional<bool> l2_lookup, bool shared_codebook) {
    QuantizerConfig config;
    config.latent_dim = latent_dim;
    config.groups = groups;
    config.group_dim = groups == 0 ? 0 : latent_dim / groups;
    config.vocab = vocab;
    config.shared_codebook = shared_codebook;
    config.l2_lookup = l2_lookup.value_or(default_l2_lookup(config.group_dim));
    config.validate();
    return config;
}

double
CompressionGeometry::compression_ratio() const noexcept {
    return static_cast<double>(latent_dim) /
           (3.0 * static_cast<double>(downsample) * static_cast<double>(downsample));
}

CompressionGeometry
make_geometry(std::size_t image_height, std::size_t image_width, std::size_t downsample,
              std::size_t latent_dim) {
    if (downsample == 0 || latent_dim == 0) {
        fail(ErrorCode::InvalidArgument, "downsample factor and latent dim must be positive");
    }
    if (image_height % downsample != 0 || image_width % downsample != 0) {
        fail(ErrorCode::InvalidArgument, "image " + std::to_string(image_height) + "x" +
                                             std::to_string(image_width) +
                                             " is not divisible by f = " +
                                             std::to_string(downsample));
    }
    return {image_height,
            image_width,
            downsample,
            image_height / downsample,
            image_width / downsample,
            latent_dim};
}

VectorBatch::VectorBatch(std::size_t n, std::size_t d, std::vector<double> v)
    : count(n), dim(d), values(std::move(v)) {
    if (values.size() != n * d) {
        fail(ErrorCode::DimensionMismatch, "batch values hold " + std::to_string(values.size()) +
                                               " reals, expected " + std::to_string(n * d));
    }
}

void
check_codebook(const Codebook& codebook, const QuantizerConfig& config) {
    if (codebook.group_dim != config.group_dim) {
        fail(ErrorCode::DimensionMismatch, "codebook group_dim " +
                                               std::to_string(codebook.group_dim) +
                                               " does not match config group_dim " +
                                               std::to_string(config.group_dim));
    }
    if (codebook.tables.size() != config.table_count()) {
        fail(ErrorCode::DimensionMismatch, "codebook has " +
                                               std::to_string(codebook.tables.size()) +
                                               " tables, config expects " +
                                               std::to_string(config.table_count()));
    }
    for (std::size_t t = 0; t < codebook.tables.size(); ++t) {
        if (codebook.tables[t].size() != config.entries_in_table(t) * config.group_dim) {
            fail(ErrorCode::DimensionMismatch,
                 "codebook table " + std::to_string(t) + " has the wrong number of entries");
        }
        for (double x : codebook.tables[t]) {
            if (!std::isfinite(x)) {
                fail(ErrorCode::InvalidArgument,
                     "codebook table " + std::to_string(t) + " holds a non-finite value");
            }
        }
    }
}

namespace detail {

double
squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

std::uint32_t
nearest_codeword(std::span<const double> query, std::span<const double> table, std::size_t dim,
                 double& best_distance) {
    const std::size_t entries = table.size() / dim;
    std::uint32_t best = 0;
    if (dim == 1) {
        // Scalar lines compare (c_j - c_k)(c_j + c_k - 2z) < 0 instead of two rounded
        // squares, so sign decisions stay exact for tiny and subnormal queries.
        const double z = query[0];
        for (std::size_t j = 1; j < entries; ++j) {
            const double cj = table[j];
            const double ck = table[best];
            if ((cj - ck) * (cj + ck - 2.0 * z) < 0.0) {
                best = static_cast<std::uint32_t>(j);
            }
        }
        const double diff = z - table[best];
        best_distance = diff * diff;
        return best;
    }
    best_distance = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < entries; ++j) {
        const double dist = squared_distance(query, table.subspan(j * dim, dim));
        if (dist < best_distance) {
            best_distance = dist;
            best = static_cast<std::uint32_t>(j);
        }
    }
    return best;
}

}  // namespace detail

void
l2_normalize_inplace(std::span<double> v) {
    if (v.empty()) {
        fail(ErrorCode::InvalidArgument, "cannot normalize an empty vector");
    }
    if (v.size() == 1) {
        v[0] = v[0] > 0.0 ? 1.0 : -1.0;
        return;
    }
    double norm_sq = 0.0;
    for (double x : v) {
        norm_sq += x * x;
    }
    const double norm = std::sqrt(norm_sq);
    if (!(norm > kNormEpsilon)) {
        fail(ErrorCode::DegenerateVector,
             "vector of dim " + std::to_string(v.size()) + " has near-zero norm");
    }
    for (double& x : v) {
        x /= norm;
    }
}

std::vector<double>
l2_normalize(std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    l2_normalize_inplace(out);
    return out;
}

Codebook
init_codebook(const QuantizerConfig& config, std::uint64_t seed) {
    config.validate();
    Codebook codebook;
    codebook.group_dim = config.group_dim;
    codebook.init_kind = config.init;
    if (config.is_finite()) {
        codebook.init_kind = InitKind::Explicit;
        for (auto level : *config.finite_levels) {
            codebook.tables.push_back(detail::finite_grid(level));
        }
        return codebook;
    }

    std::mt19937_64 rng(seed);
    const std::size_t d = config.group_dim;
    for (std::size_t t = 0; t < config.table_count(); ++t) {
        std::vector<double> table(config.vocab * d);
        if (config.init == InitKind::UniformInterval) {
            const double bound = 1.0 / static_cast<double>(config.vocab);
            std::uniform_real_distribution<double> uniform(-bound, bound);
            for (double& x : table) {
                x = static_cast<float>(uniform(rng));
            }
        } else if (config.init == InitKind::SphericalGaussian) {
            std::normal_distribution<double> gauss(0.0, 1.0);
            std::vector<double> entry(d);
            for (std::size_t j = 0; j < config.vocab; ++j) {
                for (;;) {
                    for (double& x : entry) {
                        x = gauss(rng);
                    }
                    double norm_sq = 0.0;
                    for (double x : entry) {
                        norm_sq += x * x;
                    }
                    if (d == 1 || std::sqrt(norm_sq) > kNormEpsilon) {
                        break;
                    }
                }
                l2_normalize_inplace(entry);
                for (std::size_t k = 0; k < d; ++k) {
                    table[j * d + k] = static_cast<float>(entry[k]);
                }
            }
        } else {
            fail(ErrorCode::InvalidConfig, "explicit codebooks cannot be sampled");
        }
        codebook.tables.push_back(std::move(table));
    }
    return codebook;
}

Codebook
make_explicit_codebook(const QuantizerConfig& config, std::vector<std::vector<double>> tables) {
    config.validate();
    Codebook codebook;
    codebook.group_dim = config.group_dim;
    codebook.tables = std::move(tables);
    codebook.init_kind = InitKind::Explicit;
    check_codebook(codebook, config);
    return codebook;
}

namespace {

/// Lookup-space tables: a normalized copy when l2_lookup is on, else the originals.
std::vector<std::vector<double>>
lookup_tables(const Codebook& codebook, const QuantizerConfig& config) {
    std::vector<std::vector<double>> tables = codebook.tables;
    if (config.l2_lookup && !config.is_finite()) {
        const std::size_t d = config.group_dim;
        for (auto& table : tables) {
            for (std::size_t j = 0; j * d < table.size(); ++j) {
                l2_normalize_inplace(std::span<double>(table.data() + j * d, d));
            }
        }
    }
    return tables;
}

void
check_batch(const VectorBatch& batch, const QuantizerConfig& config) {
    if (batch.dim != config.latent_dim) {
        fail(ErrorCode::DimensionMismatch, "batch dim " + std::to_string(batch.dim) +
                                               " does not match latent_dim " +
                                               std::to_string(config.latent_dim));
    }
    if (batch.values.size() != batch.count * batch.dim) {
        fail(ErrorCode::DimensionMismatch, "batch storage does not match its shape");
    }
}

}  // namespace

CodeAssignment
quantize(const VectorBatch& batch, const Codebook& codebook, const QuantizerConfig& config) {
    config.validate();
    check_codebook(codebook, config);
    check_batch(batch, config);

    const std::size_t G = config.groups;
    const std::size_t d = config.group_dim;
    CodeAssignment out;
    out.count = batch.count;
    out.groups = G;
    out.indices.resize(batch.count * G);
    out.distances.resize(batch.count * G);
    out.dequantized = VectorBatch(batch.count, config.latent_dim);

    if (config.is_finite()) {
        for (std::size_t i = 0; i < batch.count; ++i) {
            auto row = batch.row(i);
            auto dst = out.dequantized.row(i);
            for (std::size_t g = 0; g < G; ++g) {
                const auto cell = detail::finite_assign(row[g], (*config.finite_levels)[g]);
                out.indices[i * G + g] = cell.index;
                out.distances[i * G + g] = cell.distance;
                dst[g] = codebook.tables[g][cell.index];
            }
        }
        return out;
    }

    const auto tables = lookup_tables(codebook, config);
    std::vector<double> query(d);
    for (std::size_t i = 0; i < batch.count; ++i) {
        auto row = batch.row(i);
        auto dst = out.dequantized.row(i);
        for (std::size_t g = 0; g < G; ++g) {
            std::copy_n(row.begin() + static_cast<std::ptrdiff_t>(g * d), d, query.begin());
            if (config.l2_lookup) {
                l2_normalize_inplace(query);
            }
            const auto& table = tables[config.table_for_group(g)];
            double dist = 0.0;
            const auto j = detail::nearest_codeword(query, table, d, dist);
            out.indices[i * G + g] = j;
            out.distances[i * G + g] = dist;
            std::copy_n(table.begin() + static_cast<std::ptrdiff_t>(j * d), d,
                        dst.begin() + static_cast<std::ptrdiff_t>(g * d));
        }
    }
    return out;
}

VectorBatch
dequantize(std::span<const std::uint32_t> indices, std::size_t count, const Codebook& codebook,
           const QuantizerConfig& config) {
    config.validate();
    check_codebook(codebook, config);
    const std::size_t G = config.groups;
    const std::size_t d = config.group_dim;
    if (indices.size() != count * G) {
        fail(ErrorCode::DimensionMismatch, "index matrix holds " + std::to_string(indices.size()) +
                                               " entries, expected " +
                                               std::to_string(count * G));
    }
    const auto tables = lookup_tables(codebook, config);
    VectorBatch out(count, config.latent_dim);
    for (std::size_t i = 0; i < count; ++i) {
        auto dst = out.row(i);
        for (std::size_t g = 0; g < G; ++g) {
            const std::size_t t = config.table_for_group(g);
            const std::uint32_t j = indices[i * G + g];
            if (j >= config.entries_in_table(t)) {
                fail(ErrorCode::IndexOutOfRange, "index " + std::to_string(j) + " at row " +
                                                     std::to_string(i) + ", group " +
                                                     std::to_string(g) + " exceeds table size " +
                                                     std::to_string(config.entries_in_table(t)));
            }
            std::copy_n(tables[t].begin() + static_cast<std::ptrdiff_t>(j * d), d,
                        dst.begin() + static_cast<std::ptrdiff_t>(g * d));
        }
    }
    return out;
}

double
effective_vocab_bits(const QuantizerConfig& config) {
    config.validate();
    double bits = 0.0;
    for (std::size_t g = 0; g < config.groups; ++g) {
        bits += std::log2(static_cast<double>(config.entries_in_table(config.table_for_group(g))));
    }
    return bits;
}

}  // namespace gsq
