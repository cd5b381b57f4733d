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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gsq/metrics.hpp"
#include "gsq/quantizer.hpp"

namespace gsq {

/*
 * Codebook file (.gsqc), all integers little-endian u32:
 *
 *   "GSQC" | version | D | G | d | V | flags | init_kind | L | levels[L]
 *   | payload | crc32
 *
 * flags: bit 0 shared, bit 1 l2 lookup, bit 2 fixed, bit 3 finite levels.
 * L is 0 unless finite levels are present, in which case it equals G.
 * The payload is little-endian float32 codewords, table-major, then
 * index-major, then component-minor. Group g of a latent is the contiguous
 * channel slice [g*d, (g+1)*d). The trailing CRC-32 (IEEE) covers every
 * byte before it.
 */
inline constexpr std::uint32_t kCodebookFormatVersion = 1;

std::vector<std::uint8_t>
encode_codebook(const Codebook& codebook, const QuantizerConfig& config);

struct LoadedCodebook {
    Codebook codebook;
    QuantizerConfig config;
};

/// Throws CorruptFile, VersionMismatch or ChecksumMismatch.
LoadedCodebook
decode_codebook(std::span<const std::uint8_t> bytes);

void
save_codebook(const Codebook& codebook, const QuantizerConfig& config,
              const std::filesystem::path& path);

LoadedCodebook
load_codebook(const std::filesystem::path& path);

/*
 * Tensor file (.gsqt):
 *
 *   "GSQT" | u8 version (1) | u8 endianness ('L' or 'B') | u8 dtype (1 = f32)
 *   | u8 rank | u64 dims[rank] | float32 values
 *
 * dims and values use the tagged byte order. Writers emit 'L'. Readers view
 * a tensor as (product of leading dims) x (last dim) vectors.
 */
inline constexpr std::uint8_t kTensorFormatVersion = 1;

void
save_tensor(const VectorBatch& batch, const std::filesystem::path& path);

/// Rank-N variant; values.size() must equal the product of dims.
void
save_tensor(std::span<const std::uint64_t> dims, std::span<const double> values,
            const std::filesystem::path& path);

VectorBatch
load_tensor(const std::filesystem::path& path);

/*
 * Index file (.gsqi): little-endian u32 header N, G, V followed by N x G
 * row-major u32 code indices.
 */
struct IndexMatrix {
    std::uint32_t count = 0;
    std::uint32_t groups = 0;
    std::uint32_t vocab = 0;
    std::vector<std::uint32_t> indices;
};

void
save_indices(const IndexMatrix& indices, const std::filesystem::path& path);

IndexMatrix
load_indices(const std::filesystem::path& path);

/// Binary P6 PPM, maxval up to 65535, scaled into [0, 1].
Image
read_ppm(const std::filesystem::path& path);

/// 8-bit P6; values are clamped to [0, 1] and rounded.
void
write_ppm(const Image& image, const std::filesystem::path& path);

struct PatchCorpusSpec {
    std::vector<std::filesystem::path> sources;
    std::size_t patch_size = 8;
    std::size_t stride = 8;
    bool keep_images = false;
};

struct PatchOrigin {
    std::uint32_t image = 0;
    std::uint32_t x = 0;
    std::uint32_t y = 0;
};

/// Patch vectors are raster order within the patch, RGB interleaved: dim 3p^2.
struct PatchCorpus {
    VectorBatch patches;
    std::vector<PatchOrigin> origins;
    std::vector<std::pair<std::size_t, std::size_t>> image_sizes;  // (width, height)
    std::vector<Image> images;  // only with keep_images
    std::size_t patch_size = 0;
    std::size_t stride = 0;
};

/**
 * Sequential patch reader: one image per call, patches in raster order of
 * their top-left corners.
 */
class PatchReader {
public:
    explicit PatchReader(PatchCorpusSpec spec);

    /// Patches of the next image; std::nullopt after the last source.
    std::optional<VectorBatch>
    next();

    /// Image decoded by the latest next() call.
    const Image&
    current_image() const noexcept {
        return current_;
    }

    std::size_t
    images_read() const noexcept {
        return position_;
    }

private:
    PatchCorpusSpec spec_;
    std::size_t position_ = 0;
    Image current_;
};

/// Extract every patch of a decoded image.
VectorBatch
extract_patches(const Image& image, std::size_t patch_size, std::size_t stride);

/// Drain a PatchReader into one corpus. Throws UnreadableImage or PatchTooLarge.
PatchCorpus
ingest_patches(const PatchCorpusSpec& spec);

/**
 * Rebuild images from patch vectors laid out as in `corpus`. Overlaps are
 * averaged; each image is cropped to the region its patches cover, which is
 * the full image when the stride tiles it exactly.
 */
std::vector<Image>
assemble_patches(const PatchCorpus& corpus, const VectorBatch& patches);

/// Top-left width x height crop.
Image
crop_image(const Image& image, std::size_t width, std::size_t height);

}  // namespace gsq
