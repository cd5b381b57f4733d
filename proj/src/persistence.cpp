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

#include "gsq/persistence.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace gsq {

namespace {

constexpr std::uint32_t kFlagShared = 1u << 0;
constexpr std::uint32_t kFlagL2 = 1u << 1;
constexpr std::uint32_t kFlagFixed = 1u << 2;
constexpr std::uint32_t kFlagFinite = 1u << 3;

void
put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void
put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void
put_f32(std::vector<std::uint8_t>& out, double v) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

std::uint32_t
crc32_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in pieces.
    std::size_t offset = 0;
    while (offset < bytes.size()) {
        const std::size_t chunk =
            std::min<std::size_t>(bytes.size() - offset, std::numeric_limits<uInt>::max());
        crc = crc32(crc, bytes.data() + offset, static_cast<uInt>(chunk));
        offset += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

/// Bounds-checked little/big-endian reader over a byte span.
class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> bytes, ErrorCode on_short, bool big_endian = false)
        : bytes_(bytes), on_short_(on_short), big_endian_(big_endian) {
    }

    void
    set_big_endian(bool big) noexcept {
        big_endian_ = big;
    }

    std::uint64_t
    uint(std::size_t width) {
        need(width);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < width; ++i) {
            const std::size_t shift = big_endian_ ? (width - 1 - i) : i;
            v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * shift);
        }
        pos_ += width;
        return v;
    }

    std::uint32_t
    u32() {
        return static_cast<std::uint32_t>(uint(4));
    }
    std::uint64_t
    u64() {
        return uint(8);
    }
    std::uint8_t
    u8() {
        return static_cast<std::uint8_t>(uint(1));
    }
    float
    f32() {
        return std::bit_cast<float>(u32());
    }

    std::span<const std::uint8_t>
    take(std::size_t n) {
        need(n);
        auto out = bytes_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::size_t
    position() const noexcept {
        return pos_;
    }
    std::size_t
    remaining() const noexcept {
        return bytes_.size() - pos_;
    }

private:
    void
    need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) {
            fail(on_short_, "unexpected end of data");
        }
    }

    std::span<const std::uint8_t> bytes_;
    ErrorCode on_short_;
    bool big_endian_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t>
read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void
write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoError, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(ErrorCode::IoError, "short write to " + path.string());
    }
}

std::uint32_t
checked_u32(std::size_t v, const char* what) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
        fail(ErrorCode::InvalidArgument, std::string(what) + " does not fit in 32 bits");
    }
    return static_cast<std::uint32_t>(v);
}

}  // namespace

std::vector<std::uint8_t>
encode_codebook(const Codebook& codebook, const QuantizerConfig& config) {
    config.validate();
    check_codebook(codebook, config);
    std::vector<std::uint8_t> out{'G', 'S', 'Q', 'C'};
    put_u32(out, kCodebookFormatVersion);
    put_u32(out, checked_u32(config.latent_dim, "latent_dim"));
    put_u32(out, checked_u32(config.groups, "groups"));
    put_u32(out, checked_u32(config.group_dim, "group_dim"));
    put_u32(out, checked_u32(config.vocab, "vocab"));
    std::uint32_t flags = 0;
    flags |= config.shared_codebook ? kFlagShared : 0;
    flags |= config.l2_lookup ? kFlagL2 : 0;
    flags |= config.fixed_codebook ? kFlagFixed : 0;
    flags |= config.is_finite() ? kFlagFinite : 0;
    put_u32(out, flags);
    put_u32(out, static_cast<std::uint32_t>(codebook.init_kind));
    if (config.is_finite()) {
        put_u32(out, checked_u32(config.finite_levels->size(), "level count"));
        for (auto level : *config.finite_levels) {
            put_u32(out, level);
        }
    } else {
        put_u32(out, 0);
    }
    for (const auto& table : codebook.tables) {
        for (double x : table) {
            put_f32(out, x);
        }
    }
    put_u32(out, crc32_of(out));
    return out;
}

LoadedCodebook
decode_codebook(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), "GSQC", 4) != 0) {
        fail(ErrorCode::CorruptFile, "missing GSQC magic");
    }
    ByteReader header(bytes.subspan(4), ErrorCode::CorruptFile);
    const std::uint32_t version = header.u32();
    if (version != kCodebookFormatVersion) {
        fail(ErrorCode::VersionMismatch, "codebook format version " + std::to_string(version) +
                                             ", expected " +
                                             std::to_string(kCodebookFormatVersion));
    }
    if (bytes.size() < 12) {
        fail(ErrorCode::CorruptFile, "codebook file is truncated");
    }
    const auto body = bytes.first(bytes.size() - 4);
    ByteReader tail(bytes.last(4), ErrorCode::CorruptFile);
    if (tail.u32() != crc32_of(body)) {
        fail(ErrorCode::ChecksumMismatch, "codebook checksum does not match its contents");
    }

    ByteReader in(body.subspan(8), ErrorCode::CorruptFile);
    QuantizerConfig config;
    config.latent_dim = in.u32();
    config.groups = in.u32();
    config.group_dim = in.u32();
    config.vocab = in.u32();
    const std::uint32_t flags = in.u32();
    const std::uint32_t init = in.u32();
    if (flags & ~(kFlagShared | kFlagL2 | kFlagFixed | kFlagFinite)) {
        fail(ErrorCode::CorruptFile, "unknown codebook flags");
    }
    if (init > static_cast<std::uint32_t>(InitKind::Explicit)) {
        fail(ErrorCode::CorruptFile, "unknown init kind");
    }
    config.shared_codebook = flags & kFlagShared;
    config.l2_lookup = flags & kFlagL2;
    config.fixed_codebook = flags & kFlagFixed;
    config.init = static_cast<InitKind>(init);
    const std::uint32_t level_count = in.u32();
    if (((flags & kFlagFinite) != 0) != (level_count != 0)) {
        fail(ErrorCode::CorruptFile, "finite flag disagrees with the level list");
    }
    if (level_count > in.remaining() / 4) {
        fail(ErrorCode::CorruptFile, "level list overruns the file");
    }
    if (level_count > 0) {
        std::vector<std::uint32_t> levels(level_count);
        for (auto& level : levels) {
            level = in.u32();
        }
        config.finite_levels = std::move(levels);
    }
    try {
        config.validate();
    } catch (const Error& e) {
        fail(ErrorCode::CorruptFile, std::string("invalid stored config: ") + e.what());
    }

    std::size_t expected = 0;
    for (std::size_t t = 0; t < config.table_count(); ++t) {
        expected += config.entries_in_table(t) * config.group_dim;
    }
    if (in.remaining() != expected * 4) {
        fail(ErrorCode::CorruptFile, "payload size does not match the stored config");
    }
    LoadedCodebook out;
    out.config = config;
    out.codebook.group_dim = config.group_dim;
    out.codebook.init_kind = config.init;
    for (std::size_t t = 0; t < config.table_count(); ++t) {
        std::vector<double> table(config.entries_in_table(t) * config.group_dim);
        for (double& x : table) {
            x = static_cast<double>(in.f32());
            if (!std::isfinite(x)) {
                fail(ErrorCode::CorruptFile, "non-finite codeword component");
            }
        }
        out.codebook.tables.push_back(std::move(table));
    }
    return out;
}

void
save_codebook(const Codebook& codebook, const QuantizerConfig& config,
              const std::filesystem::path& path) {
    write_file(path, encode_codebook(codebook, config));
}

LoadedCodebook
load_codebook(const std::filesystem::path& path) {
    return decode_codebook(read_file(path));
}

void
save_tensor(std::span<const std::uint64_t> dims, std::span<const double> values,
            const std::filesystem::path& path) {
    if (dims.empty() || dims.size() > 255) {
        fail(ErrorCode::InvalidArgument, "tensor rank must be between 1 and 255");
    }
    std::uint64_t total = 1;
    for (auto d : dims) {
        total *= d;
    }
    if (total != values.size()) {
        fail(ErrorCode::DimensionMismatch, "tensor dims do not match the value count");
    }
    std::vector<std::uint8_t> out{'G', 'S', 'Q', 'T', kTensorFormatVersion, 'L', 1,
                                  static_cast<std::uint8_t>(dims.size())};
    for (auto d : dims) {
        put_u64(out, d);
    }
    out.reserve(out.size() + 4 * values.size());
    for (double v : values) {
        put_f32(out, v);
    }
    write_file(path, out);
}

void
save_tensor(const VectorBatch& batch, const std::filesystem::path& path) {
    const std::uint64_t dims[2] = {batch.count, batch.dim};
    save_tensor(dims, batch.values, path);
}

VectorBatch
load_tensor(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    if (bytes.size() < 8 || std::memcmp(bytes.data(), "GSQT", 4) != 0) {
        fail(ErrorCode::CorruptFile, "missing GSQT magic in " + path.string());
    }
    ByteReader in(std::span<const std::uint8_t>(bytes).subspan(4), ErrorCode::CorruptFile);
    const auto version = in.u8();
    if (version != kTensorFormatVersion) {
        fail(ErrorCode::VersionMismatch, "tensor format version " + std::to_string(version));
    }
    const auto endian = in.u8();
    if (endian != 'L' && endian != 'B') {
        fail(ErrorCode::CorruptFile, "unknown endianness tag");
    }
    in.set_big_endian(endian == 'B');
    if (in.u8() != 1) {
        fail(ErrorCode::CorruptFile, "only float32 tensors are supported");
    }
    const auto rank = in.u8();
    if (rank == 0) {
        fail(ErrorCode::CorruptFile, "tensor rank is zero");
    }
    std::vector<std::uint64_t> dims(rank);
    for (auto& d : dims) {
        d = in.u64();
    }
    const std::uint64_t dim = dims.back();
    std::uint64_t count = 1;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        if (dims[i] != 0 && count > std::numeric_limits<std::uint64_t>::max() / dims[i]) {
            fail(ErrorCode::CorruptFile, "tensor dims overflow");
        }
        count *= dims[i];
    }
    if (dim == 0 && count != 0) {
        fail(ErrorCode::CorruptFile, "zero-width tensor rows");
    }
    if (dim != 0 && count > in.remaining() / 4 / dim) {
        fail(ErrorCode::CorruptFile, "tensor payload is truncated");
    }
    if (in.remaining() != count * dim * 4) {
        fail(ErrorCode::CorruptFile, "tensor payload size does not match its dims");
    }
    VectorBatch out(count, dim);
    for (double& v : out.values) {
        v = static_cast<double>(in.f32());
        if (!std::isfinite(v)) {
            fail(ErrorCode::CorruptFile, "tensor holds a non-finite value");
        }
    }
    return out;
}

void
save_indices(const IndexMatrix& m, const std::filesystem::path& path) {
    if (m.indices.size() != static_cast<std::size_t>(m.count) * m.groups) {
        fail(ErrorCode::DimensionMismatch, "index matrix storage does not match N x G");
    }
    std::vector<std::uint8_t> out;
    out.reserve(12 + 4 * m.indices.size());
    put_u32(out, m.count);
    put_u32(out, m.groups);
    put_u32(out, m.vocab);
    for (auto v : m.indices) {
        put_u32(out, v);
    }
    write_file(path, out);
}

IndexMatrix
load_indices(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    ByteReader in(bytes, ErrorCode::CorruptFile);
    IndexMatrix m;
    m.count = in.u32();
    m.groups = in.u32();
    m.vocab = in.u32();
    const std::uint64_t n = static_cast<std::uint64_t>(m.count) * m.groups;
    if (in.remaining() != n * 4) {
        fail(ErrorCode::CorruptFile, "index payload size does not match N x G");
    }
    m.indices.resize(n);
    for (auto& v : m.indices) {
        v = in.u32();
    }
    return m;
}

namespace {

/// Next whitespace-delimited PPM header token, skipping '#' comments.
std::string
ppm_token(std::span<const std::uint8_t> bytes, std::size_t& pos, const std::string& name) {
    for (;;) {
        while (pos < bytes.size() && std::isspace(bytes[pos])) {
            ++pos;
        }
        if (pos < bytes.size() && bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') {
                ++pos;
            }
            continue;
        }
        break;
    }
    std::string token;
    while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
        token.push_back(static_cast<char>(bytes[pos++]));
    }
    if (token.empty()) {
        fail(ErrorCode::UnreadableImage, name + ": truncated PPM header");
    }
    return token;
}

std::size_t
ppm_number(std::span<const std::uint8_t> bytes, std::size_t& pos, const std::string& name) {
    const auto token = ppm_token(bytes, pos, name);
    if (!std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
        token.size() > 9) {
        fail(ErrorCode::UnreadableImage, name + ": bad PPM header field '" + token + "'");
    }
    return std::stoul(token);
}

}  // namespace

Image
read_ppm(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes;
    try {
        bytes = read_file(path);
    } catch (const Error&) {
        fail(ErrorCode::UnreadableImage, "cannot open " + path.string());
    }
    const std::string name = path.string();
    std::size_t pos = 0;
    if (ppm_token(bytes, pos, name) != "P6") {
        fail(ErrorCode::UnreadableImage, name + ": not a binary P6 PPM");
    }
    const std::size_t width = ppm_number(bytes, pos, name);
    const std::size_t height = ppm_number(bytes, pos, name);
    const std::size_t maxval = ppm_number(bytes, pos, name);
    if (width == 0 || height == 0 || maxval == 0 || maxval > 65535) {
        fail(ErrorCode::UnreadableImage, name + ": invalid PPM geometry or maxval");
    }
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
        fail(ErrorCode::UnreadableImage, name + ": missing separator before pixel data");
    }
    ++pos;
    const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
    const std::size_t needed = width * height * 3 * sample_bytes;
    if (bytes.size() - pos < needed) {
        fail(ErrorCode::UnreadableImage, name + ": pixel data is truncated");
    }
    Image image;
    image.width = width;
    image.height = height;
    image.channels = 3;
    image.data.resize(width * height * 3);
    const double scale = 1.0 / static_cast<double>(maxval);
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        std::size_t sample = bytes[pos + i * sample_bytes];
        if (sample_bytes == 2) {
            sample = (sample << 8) | bytes[pos + i * 2 + 1];
        }
        image.data[i] = static_cast<double>(sample) * scale;
    }
    return image;
}

void
write_ppm(const Image& image, const std::filesystem::path& path) {
    if (image.channels != 3 || image.data.size() != image.width * image.height * 3) {
        fail(ErrorCode::InvalidArgument, "PPM output needs a 3-channel image");
    }
    const std::string header =
        "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    for (double v : image.data) {
        const double clamped = std::clamp(v, 0.0, 1.0);
        out.push_back(static_cast<std::uint8_t>(std::lround(clamped * 255.0)));
    }
    write_file(path, out);
}

VectorBatch
extract_patches(const Image& image, std::size_t patch_size, std::size_t stride) {
    if (patch_size == 0 || stride == 0) {
        fail(ErrorCode::InvalidArgument, "patch size and stride must be positive");
    }
    if (patch_size > image.width || patch_size > image.height) {
        fail(ErrorCode::PatchTooLarge, "patch " + std::to_string(patch_size) +
                                           " exceeds image " + std::to_string(image.width) +
                                           "x" + std::to_string(image.height));
    }
    const std::size_t C = image.channels;
    const std::size_t across = (image.width - patch_size) / stride + 1;
    const std::size_t down = (image.height - patch_size) / stride + 1;
    VectorBatch out(across * down, patch_size * patch_size * C);
    std::size_t n = 0;
    for (std::size_t py = 0; py < down; ++py) {
        for (std::size_t px = 0; px < across; ++px) {
            auto dst = out.row(n++).begin();
            for (std::size_t y = 0; y < patch_size; ++y) {
                const std::size_t row_start =
                    ((py * stride + y) * image.width + px * stride) * C;
                dst = std::copy_n(image.data.begin() + static_cast<std::ptrdiff_t>(row_start),
                                  patch_size * C, dst);
            }
        }
    }
    return out;
}

PatchReader::PatchReader(PatchCorpusSpec spec) : spec_(std::move(spec)) {
    if (spec_.patch_size == 0 || spec_.stride == 0) {
        fail(ErrorCode::InvalidArgument, "patch size and stride must be positive");
    }
}

std::optional<VectorBatch>
PatchReader::next() {
    if (position_ >= spec_.sources.size()) {
        return std::nullopt;
    }
    current_ = read_ppm(spec_.sources[position_++]);
    return extract_patches(current_, spec_.patch_size, spec_.stride);
}

PatchCorpus
ingest_patches(const PatchCorpusSpec& spec) {
    PatchReader reader(spec);
    PatchCorpus corpus;
    corpus.patch_size = spec.patch_size;
    corpus.stride = spec.stride;
    corpus.patches = VectorBatch(0, 3 * spec.patch_size * spec.patch_size);
    while (auto batch = reader.next()) {
        const Image& image = reader.current_image();
        const auto index = static_cast<std::uint32_t>(reader.images_read() - 1);
        const std::size_t across = (image.width - spec.patch_size) / spec.stride + 1;
        for (std::size_t i = 0; i < batch->count; ++i) {
            corpus.origins.push_back({index, static_cast<std::uint32_t>((i % across) * spec.stride),
                                      static_cast<std::uint32_t>((i / across) * spec.stride)});
        }
        corpus.patches.values.insert(corpus.patches.values.end(), batch->values.begin(),
                                     batch->values.end());
        corpus.patches.count += batch->count;
        corpus.image_sizes.emplace_back(image.width, image.height);
        if (spec.keep_images) {
            corpus.images.push_back(image);
        }
    }
    return corpus;
}

std::vector<Image>
assemble_patches(const PatchCorpus& corpus, const VectorBatch& patches) {
    const std::size_t p = corpus.patch_size;
    const std::size_t s = corpus.stride;
    if (patches.count != corpus.origins.size() || patches.dim != 3 * p * p) {
        fail(ErrorCode::DimensionMismatch, "patches do not match the corpus layout");
    }
    std::vector<Image> images;
    std::vector<std::vector<double>> weight;
    for (const auto& [w, h] : corpus.image_sizes) {
        Image image;
        image.width = (w - p) / s * s + p;
        image.height = (h - p) / s * s + p;
        image.channels = 3;
        image.data.assign(image.width * image.height * 3, 0.0);
        weight.emplace_back(image.width * image.height, 0.0);
        images.push_back(std::move(image));
    }
    for (std::size_t i = 0; i < patches.count; ++i) {
        const auto& o = corpus.origins[i];
        Image& image = images[o.image];
        auto& wgt = weight[o.image];
        auto src = patches.row(i);
        for (std::size_t y = 0; y < p; ++y) {
            for (std::size_t x = 0; x < p; ++x) {
                const std::size_t pixel = (o.y + y) * image.width + (o.x + x);
                wgt[pixel] += 1.0;
                for (std::size_t c = 0; c < 3; ++c) {
                    image.data[pixel * 3 + c] += src[(y * p + x) * 3 + c];
                }
            }
        }
    }
    for (std::size_t k = 0; k < images.size(); ++k) {
        for (std::size_t pixel = 0; pixel < weight[k].size(); ++pixel) {
            if (weight[k][pixel] > 0.0) {
                for (std::size_t c = 0; c < 3; ++c) {
                    images[k].data[pixel * 3 + c] /= weight[k][pixel];
                }
            }
        }
    }
    return images;
}

Image
crop_image(const Image& image, std::size_t width, std::size_t height) {
    if (width > image.width || height > image.height) {
        fail(ErrorCode::InvalidArgument, "crop exceeds the image");
    }
    Image out;
    out.width = width;
    out.height = height;
    out.channels = image.channels;
    out.data.reserve(width * height * image.channels);
    for (std::size_t y = 0; y < height; ++y) {
        const auto start = image.data.begin() +
                           static_cast<std::ptrdiff_t>(y * image.width * image.channels);
        out.data.insert(out.data.end(), start,
                        start + static_cast<std::ptrdiff_t>(width * image.channels));
    }
    return out;
}

}  // namespace gsq
