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

#include "gsq/corpus.hpp"

#include <algorithm>
#include <string>

#include "gsq/error.hpp"

namespace gsq {

std::vector<std::filesystem::path>
list_images(const std::filesystem::path& directory) {
    std::error_code ec;
    std::filesystem::directory_iterator it(directory, ec);
    if (ec) {
        fail(ErrorCode::IoError, "cannot list " + directory.string() + ": " + ec.message());
    }
    std::vector<std::filesystem::path> paths;
    for (const auto& entry : it) {
        if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
            paths.push_back(entry.path());
        }
    }
    std::sort(paths.begin(), paths.end());
    return paths;
}

LoadedCorpus
load_corpus(const std::filesystem::path& path, const CorpusOptions& options) {
    LoadedCorpus corpus;
    PatchCorpusSpec spec;
    spec.patch_size = options.patch_size;
    spec.stride = options.stride;
    spec.keep_images = options.keep_images;
    if (std::filesystem::is_directory(path)) {
        spec.sources = list_images(path);
        if (spec.sources.empty()) {
            fail(ErrorCode::IoError, "no .ppm files in " + path.string());
        }
    } else if (path.extension() == ".ppm") {
        spec.sources.push_back(path);
    } else {
        corpus.tensor = load_tensor(path);
        return corpus;
    }
    corpus.patches = ingest_patches(spec);
    return corpus;
}

CompressionGeometry
patch_geometry(const PatchCorpus& corpus, std::size_t latent_dim) {
    if (corpus.image_sizes.empty() || corpus.patch_size == 0) {
        fail(ErrorCode::InvalidArgument, "patch corpus is empty");
    }
    const std::size_t p = corpus.patch_size;
    const auto [width, height] = corpus.image_sizes.front();
    return make_geometry(height - height % p, width - width % p, p, latent_dim);
}

}  // namespace gsq
