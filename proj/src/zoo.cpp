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

#include "gsq/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "finite_grid.hpp"

namespace gsq {

std::string_view
preset_cli_name(PresetName name) noexcept {
    switch (name) {
        case PresetName::VQ:
            return "vq";
        case PresetName::VqganVit:
            return "vqgan-vit";
        case PresetName::LFQ:
            return "lfq";
        case PresetName::FSQ:
            return "fsq";
        case PresetName::BSQ:
            return "bsq";
        case PresetName::GSQ:
            return "gsq";
    }
    return "unknown";
}

PresetName
parse_preset_name(std::string_view text) {
    for (auto name : {PresetName::VQ, PresetName::VqganVit, PresetName::LFQ, PresetName::FSQ,
                      PresetName::BSQ, PresetName::GSQ}) {
        if (preset_cli_name(name) == text) {
            return name;
        }
    }
    fail(ErrorCode::InvalidPreset, "unknown preset '" + std::string(text) + "'");
}

namespace {

[[noreturn]] void
reject(const std::string& message) {
    fail(ErrorCode::InvalidPreset, message);
}

std::size_t
require_vocab(const PresetRequest& request) {
    if (!request.vocab) {
        reject(std::string(preset_cli_name(request.name)) + " preset needs a vocabulary size");
    }
    return *request.vocab;
}

std::vector<double>
circle_table(std::size_t vocab) {
    std::vector<double> table(2 * vocab);
    for (std::size_t k = 0; k < vocab; ++k) {
        const double angle = (2.0 * static_cast<double>(k) + 1.0) * std::numbers::pi /
                             static_cast<double>(vocab);
        table[2 * k] = std::cos(angle);
        table[2 * k + 1] = std::sin(angle);
    }
    return table;
}

}  // namespace

ZooPreset
preset(const PresetRequest& request) {
    const std::size_t D = request.latent_dim;
    if (D == 0) {
        reject("latent dimension must be positive");
    }
    ZooPreset out;
    out.name = request.name;
    QuantizerConfig& c = out.config;
    c.latent_dim = D;

    switch (request.name) {
        case PresetName::VQ:
        case PresetName::VqganVit:
            c.groups = 1;
            c.group_dim = D;
            c.vocab = require_vocab(request);
            c.l2_lookup = request.name == PresetName::VqganVit;
            break;
        case PresetName::LFQ: {
            if (request.vocab && *request.vocab != 2) {
                reject("lfq has exactly 2 codes per group, got V = " +
                       std::to_string(*request.vocab));
            }
            c.groups = D;
            c.group_dim = 1;
            c.vocab = 2;
            c.fixed_codebook = true;
            c.init = InitKind::Explicit;
            Codebook cb;
            cb.group_dim = 1;
            cb.init_kind = InitKind::Explicit;
            cb.tables.assign(D, std::vector<double>{-1.0, 1.0});
            out.fixed_codebook = std::move(cb);
            break;
        }
        case PresetName::FSQ: {
            if (!request.levels || request.levels->empty()) {
                reject("fsq needs per-group level counts");
            }
            std::vector<std::uint32_t> levels = *request.levels;
            if (levels.size() == 1) {
                levels.assign(D, levels.front());
            }
            if (levels.size() != D) {
                reject("fsq needs one level count per latent channel (" + std::to_string(D) +
                       "), got " + std::to_string(levels.size()));
            }
            if (std::any_of(levels.begin(), levels.end(), [](auto l) { return l < 2; })) {
                reject("fsq level counts must be at least 2");
            }
            const auto max_level = *std::max_element(levels.begin(), levels.end());
            if (request.vocab && *request.vocab != max_level) {
                reject("fsq vocab is implied by its levels");
            }
            c.groups = D;
            c.group_dim = 1;
            c.vocab = max_level;
            c.finite_levels = levels;
            c.l2_lookup = true;
            c.fixed_codebook = true;
            c.init = InitKind::Explicit;
            out.fixed_codebook = init_codebook(c, 0);
            break;
        }
        case PresetName::BSQ: {
            if (D % 2 != 0) {
                reject("bsq needs an even latent dimension, got " + std::to_string(D));
            }
            c.groups = D / 2;
            c.group_dim = 2;
            c.vocab = require_vocab(request);
            c.shared_codebook = true;
            c.l2_lookup = true;
            c.fixed_codebook = true;
            c.init = InitKind::Explicit;
            std::vector<double> table =
                request.bsq_codebook ? *request.bsq_codebook : circle_table(c.vocab);
            if (table.size() != 2 * c.vocab) {
                reject("bsq table must hold V unit 2-vectors");
            }
            for (std::size_t k = 0; k < c.vocab; ++k) {
                const double norm = std::hypot(table[2 * k], table[2 * k + 1]);
                if (!(std::abs(norm - 1.0) <= 1e-6)) {
                    reject("bsq table entry " + std::to_string(k) + " is not unit norm");
                }
            }
            Codebook cb;
            cb.group_dim = 2;
            cb.init_kind = InitKind::Explicit;
            cb.tables.push_back(std::move(table));
            out.fixed_codebook = std::move(cb);
            break;
        }
        case PresetName::GSQ: {
            const std::size_t G = request.groups.value_or(1);
            if (G == 0 || D % G != 0) {
                reject("gsq groups (" + std::to_string(G) + ") must divide latent dim (" +
                       std::to_string(D) + ")");
            }
            c.groups = G;
            c.group_dim = D / G;
            c.vocab = require_vocab(request);
            c.shared_codebook = c.group_dim > 2;
            c.l2_lookup = default_l2_lookup(c.group_dim);
            break;
        }
    }

    try {
        c.validate();
        if (out.fixed_codebook) {
            check_codebook(*out.fixed_codebook, c);
        }
    } catch (const Error& e) {
        reject(e.what());
    }
    return out;
}

CodeAssignment
fsq_quantize(const VectorBatch& batch, const FiniteLevelRule& rule) {
    const auto& levels = rule.levels_per_group;
    if (batch.dim != levels.size()) {
        fail(ErrorCode::DimensionMismatch, "fsq batch dim " + std::to_string(batch.dim) +
                                               " does not match " +
                                               std::to_string(levels.size()) + " groups");
    }
    for (auto level : levels) {
        if (level < 2) {
            fail(ErrorCode::InvalidConfig, "fsq level counts must be at least 2");
        }
    }
    const std::size_t G = levels.size();
    CodeAssignment out;
    out.count = batch.count;
    out.groups = G;
    out.indices.resize(batch.count * G);
    out.distances.resize(batch.count * G);
    out.dequantized = VectorBatch(batch.count, G);
    for (std::size_t i = 0; i < batch.count; ++i) {
        for (std::size_t g = 0; g < G; ++g) {
            const auto cell = detail::finite_assign(batch.row(i)[g], levels[g]);
            out.indices[i * G + g] = cell.index;
            out.distances[i * G + g] = cell.distance;
            out.dequantized.row(i)[g] = detail::finite_grid_value(cell.index, levels[g]);
        }
    }
    return out;
}

std::vector<std::uint32_t>
fsq_index_of_grid_values(const VectorBatch& values, const FiniteLevelRule& rule) {
    const auto& levels = rule.levels_per_group;
    if (values.dim != levels.size()) {
        fail(ErrorCode::DimensionMismatch, "grid values do not match the rule's group count");
    }
    std::vector<std::uint32_t> out(values.count * values.dim);
    for (std::size_t i = 0; i < values.count; ++i) {
        for (std::size_t g = 0; g < values.dim; ++g) {
            out[i * values.dim + g] =
                detail::finite_assign_unit(values.row(i)[g], levels[g]).index;
        }
    }
    return out;
}

}  // namespace gsq
