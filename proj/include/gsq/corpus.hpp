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
#include <filesystem>
#include <optional>
#include <vector>

#include "gsq/persistence.hpp"
#include "gsq/quantizer.hpp"

namespace gsq {

struct CorpusOptions {
    std::size_t patch_size = 8;
    std::size_t stride = 8;
    bool keep_images = false;
};

/**
 * Vectors read from disk. A directory of .ppm files or a single .ppm yields
 * an image-patch corpus; anything else is read as a .gsqt tensor.
 */
struct LoadedCorpus {
    std::optional<PatchCorpus> patches;
    VectorBatch tensor;

    const VectorBatch&
    vectors() const noexcept {
        return patches ? patches->patches : tensor;
    }
    bool
    is_image() const noexcept {
        return patches.has_value();
    }
};

/// .ppm files of a directory, sorted by file name. Throws IoError.
std::vector<std::filesystem::path>
list_images(const std::filesystem::path& directory);

LoadedCorpus
load_corpus(const std::filesystem::path& path, const CorpusOptions& options = {});

/**
 * Geometry of a patch corpus quantized at latent width latent_dim: the
 * downsample factor is the patch size and the image is the first source
 * cropped to a multiple of it.
 */
CompressionGeometry
patch_geometry(const PatchCorpus& corpus, std::size_t latent_dim);

}  // namespace gsq
