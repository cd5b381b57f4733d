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
#include <vector>

#include "gsq/quantizer.hpp"

namespace gsq {

/**
 * Linear patch codec: the mean-centred projection onto the leading
 * `latent_dim` principal axes of a training corpus. It stands in for a
 * learned encoder/decoder pair when raw patches are wider than the latent
 * width being studied. Axes are ordered by decreasing variance and each
 * axis is sign-normalized (largest-magnitude component positive), so
 * fitting is deterministic.
 */
class PatchEncoder {
public:
    PatchEncoder() = default;

    /// Throws InvalidArgument unless 1 <= latent_dim <= corpus.dim and the corpus is non-empty.
    static PatchEncoder
    fit(const VectorBatch& corpus, std::size_t latent_dim);

    VectorBatch
    encode(const VectorBatch& patches) const;

    VectorBatch
    decode(const VectorBatch& latents) const;

    std::size_t
    input_dim() const noexcept {
        return mean_.size();
    }
    std::size_t
    latent_dim() const noexcept {
        return latent_dim_;
    }
    /// Variance captured by each kept axis, descending.
    const std::vector<double>&
    explained_variance() const noexcept {
        return variance_;
    }

private:
    std::size_t latent_dim_ = 0;
    std::vector<double> mean_;
    std::vector<double> basis_;  // latent_dim x input_dim, row per axis
    std::vector<double> variance_;
};

}  // namespace gsq
