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

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "gsq/quantizer.hpp"

namespace gsq {

/// Known quantizers expressed as grouped spherical configurations.
enum class PresetName { VQ, VqganVit, LFQ, FSQ, BSQ, GSQ };

/// Stable CLI strings: vq, vqgan-vit, lfq, fsq, bsq, gsq.
std::string_view
preset_cli_name(PresetName name) noexcept;

/// Throws InvalidPreset for unknown strings.
PresetName
parse_preset_name(std::string_view text);

struct PresetRequest {
    PresetName name = PresetName::GSQ;
    std::size_t latent_dim = 0;
    std::optional<std::size_t> vocab;
    std::optional<std::size_t> groups;               // gsq only
    std::optional<std::vector<std::uint32_t>> levels;  // fsq only; one value broadcasts
    std::optional<std::vector<double>> bsq_codebook;   // bsq only; V unit 2-vectors
};

struct ZooPreset {
    PresetName name = PresetName::GSQ;
    QuantizerConfig config;
    /// Present for fixed-codebook presets (lfq, fsq, bsq).
    std::optional<Codebook> fixed_codebook;
};

/**
 * Derived configuration for a named quantizer:
 *   vq        G = 1, d = D, no l2, trainable
 *   vqgan-vit G = 1, d = D, l2, trainable
 *   lfq       G = D, d = 1, V = 2, fixed {-1, +1} per group, l2 off
 *   fsq       G = D, d = 1, fixed per-group sigmoid grids, unshared
 *   bsq       G = D/2, d = 2, shared fixed unit-circle table, l2
 *   gsq       user G, d = D/G, shared iff d > 2, l2 iff d > 2
 * BSQ without an explicit table uses V evenly spaced unit vectors at angles
 * (2k + 1)pi/V, which for V = 4 is the binary table {+-1/sqrt2}^2.
 */
ZooPreset
preset(const PresetRequest& request);

/// Per-group level counts of a finite scalar quantizer.
struct FiniteLevelRule {
    std::vector<std::uint32_t> levels_per_group;
};

/**
 * Sigmoid each component and snap it to the nearest point of its group's
 * grid {0, 1/(L-1), ..., 1}. The dequantized value is the grid point
 * itself, in sigmoid space; exact halves go to the lower index.
 */
CodeAssignment
fsq_quantize(const VectorBatch& batch, const FiniteLevelRule& rule);

/// Re-index sigmoid-space grid values (e.g. fsq dequantized output).
std::vector<std::uint32_t>
fsq_index_of_grid_values(const VectorBatch& values, const FiniteLevelRule& rule);

}  // namespace gsq
