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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gsq/error.hpp"

namespace gsq {

/// Norms at or below this value are treated as zero by l2_normalize.
inline constexpr double kNormEpsilon = 1e-12;

enum class InitKind : std::uint32_t {
    SphericalGaussian = 0,
    UniformInterval = 1,
    Explicit = 2,
};

std::string_view
init_kind_name(InitKind kind) noexcept;

/// l2 lookup is on by default only when the per-group dimension exceeds 2.
constexpr bool
default_l2_lookup(std::size_t group_dim) noexcept {
    return group_dim > 2;
}

/**
 * Full parameterization of a grouped spherical quantizer.
 *
 * A latent of dimension D is cut into G contiguous slices of d channels
 * (slice g covers channels [g*d, (g+1)*d)). Each slice is matched against
 * its own table of V codewords, or against table 0 when the codebook is
 * shared. When finite_levels is set the quantizer is a finite scalar grid
 * (d = 1) with levels[g] grid points in group g and vocab = max(levels).
 */
struct QuantizerConfig {
    std::size_t latent_dim = 0;
    std::size_t groups = 1;
    std::size_t group_dim = 0;
    std::size_t vocab = 0;
    bool shared_codebook = false;
    bool l2_lookup = false;
    std::optional<std::vector<std::uint32_t>> finite_levels;
    bool fixed_codebook = false;
    InitKind init = InitKind::SphericalGaussian;

    /// Throws Error(InvalidConfig) describing the first violated invariant.
    void
    validate() const;

    std::size_t
    table_count() const noexcept {
        return shared_codebook ? 1 : groups;
    }

    std::size_t
    table_for_group(std::size_t g) const noexcept {
        return shared_codebook ? 0 : g;
    }

    /// Number of codewords in table t (levels[t] for finite configs).
    std::size_t
    entries_in_table(std::size_t t) const;

    bool
    is_finite() const noexcept {
        return finite_levels.has_value();
    }

    bool
    operator==(const QuantizerConfig&) const = default;
};

/// Convenience constructor for the plain grouped case; d is derived as D/G.
QuantizerConfig
make_config(std::size_t latent_dim, std::size_t groups, std::size_t vocab,
            std::optional<bool> l2_lookup = std::nullopt, bool shared_codebook = false);

struct CompressionGeometry {
    std::size_t image_height = 0;
    std::size_t image_width = 0;
    std::size_t downsample = 1;
    std::size_t latent_height = 0;
    std::size_t latent_width = 0;
    std::size_t latent_dim = 0;

    /// D / (3 f^2).
    double
    compression_ratio() const noexcept;
};

/// Throws InvalidArgument unless H and W are divisible by f and D > 0.
CompressionGeometry
make_geometry(std::size_t image_height, std::size_t image_width, std::size_t downsample,
              std::size_t latent_dim);

/// Row-major N x dim matrix of reals.
struct VectorBatch {
    std::size_t count = 0;
    std::size_t dim = 0;
    std::vector<double> values;

    VectorBatch() = default;
    VectorBatch(std::size_t n, std::size_t d) : count(n), dim(d), values(n * d, 0.0) {
    }
    VectorBatch(std::size_t n, std::size_t d, std::vector<double> v);

    std::span<const double>
    row(std::size_t i) const noexcept {
        return {values.data() + i * dim, dim};
    }
    std::span<double>
    row(std::size_t i) noexcept {
        return {values.data() + i * dim, dim};
    }

    bool
    operator==(const VectorBatch&) const = default;
};

/**
 * Code tables of a quantizer. tables[t] holds entries_in_table(t) codewords
 * of group_dim components each, index-major.
 */
struct Codebook {
    std::size_t group_dim = 0;
    std::vector<std::vector<double>> tables;
    InitKind init_kind = InitKind::Explicit;

    std::size_t
    entries(std::size_t t) const noexcept {
        return group_dim == 0 ? 0 : tables[t].size() / group_dim;
    }

    std::span<const double>
    codeword(std::size_t t, std::size_t j) const noexcept {
        return {tables[t].data() + j * group_dim, group_dim};
    }
    std::span<double>
    codeword(std::size_t t, std::size_t j) noexcept {
        return {tables[t].data() + j * group_dim, group_dim};
    }

    bool
    operator==(const Codebook&) const = default;
};

/// Throws unless the codebook's table count, entry counts and dims match config
/// and every entry is finite.
void
check_codebook(const Codebook& codebook, const QuantizerConfig& config);

struct CodeAssignment {
    std::size_t count = 0;
    std::size_t groups = 0;
    std::vector<std::uint32_t> indices;  // count x groups
    VectorBatch dequantized;             // count x latent_dim
    std::vector<double> distances;       // count x groups, squared, in lookup space

    std::uint32_t
    index(std::size_t row, std::size_t g) const noexcept {
        return indices[row * groups + g];
    }
    double
    distance(std::size_t row, std::size_t g) const noexcept {
        return distances[row * groups + g];
    }
};

/**
 * Unit-norm copy of v. One-dimensional inputs collapse to +1 for v > 0 and
 * -1 otherwise (zero included). For dim >= 2 a norm <= kNormEpsilon throws
 * DegenerateVector.
 */
std::vector<double>
l2_normalize(std::span<const double> v);

/// In-place variant of l2_normalize.
void
l2_normalize_inplace(std::span<double> v);

/**
 * Fresh codebook for config. Spherical entries are standard Gaussian draws
 * projected to the unit sphere; uniform entries are i.i.d. on [-1/V, 1/V].
 * Values are rounded to float precision so they survive the 32-bit file
 * format unchanged. Deterministic for a given seed.
 */
Codebook
init_codebook(const QuantizerConfig& config, std::uint64_t seed);

/// Codebook from explicit tables; validated against config.
Codebook
make_explicit_codebook(const QuantizerConfig& config, std::vector<std::vector<double>> tables);

/**
 * Group-wise nearest-codeword assignment. With l2_lookup both the slice and
 * the codewords are normalized before the squared distance is taken and the
 * dequantized output is built from normalized codewords. Ties resolve to the
 * lowest index. Finite configs route through the scalar grid rule.
 */
CodeAssignment
quantize(const VectorBatch& batch, const Codebook& codebook, const QuantizerConfig& config);

VectorBatch
dequantize(std::span<const std::uint32_t> indices, std::size_t count, const Codebook& codebook,
           const QuantizerConfig& config);

/// log2 of the effective vocabulary: sum over groups of log2(entries).
double
effective_vocab_bits(const QuantizerConfig& config);

namespace detail {

/// Nearest entry of table (entries x dim) to query; ties resolve to the lower index.
std::uint32_t
nearest_codeword(std::span<const double> query, std::span<const double> table, std::size_t dim,
                 double& best_distance);

double
squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

}  // namespace detail

}  // namespace gsq
