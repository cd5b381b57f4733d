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

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "gsq/zoo.hpp"
#include "support/oracles.hpp"

using namespace gsq;

namespace {

ZooPreset
make(PresetName name, std::size_t D, std::optional<std::size_t> V = std::nullopt,
     std::optional<std::size_t> G = std::nullopt,
     std::optional<std::vector<std::uint32_t>> levels = std::nullopt) {
    PresetRequest r;
    r.name = name;
    r.latent_dim = D;
    r.vocab = V;
    r.groups = G;
    r.levels = std::move(levels);
    return preset(r);
}

bool
rejects(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == ErrorCode::InvalidPreset;
    }
    return false;
}

}  // namespace

TEST_SUITE("zoo") {
    TEST_CASE("preset names round-trip") {
        for (auto n : {PresetName::VQ, PresetName::VqganVit, PresetName::LFQ, PresetName::FSQ,
                       PresetName::BSQ, PresetName::GSQ}) {
            CHECK(parse_preset_name(preset_cli_name(n)) == n);
        }
        CHECK(preset_cli_name(PresetName::VqganVit) == "vqgan-vit");
        CHECK(rejects([] { parse_preset_name("rvq"); }));
    }

    TEST_CASE("vq and vqgan-vit are single-group trainable quantizers") {
        const auto vq = make(PresetName::VQ, 8, 8192);
        CHECK(vq.config.groups == 1);
        CHECK(vq.config.group_dim == 8);
        CHECK_FALSE(vq.config.l2_lookup);
        CHECK_FALSE(vq.config.fixed_codebook);
        CHECK_FALSE(vq.fixed_codebook.has_value());
        const auto vit = make(PresetName::VqganVit, 32, 8192);
        CHECK(vit.config.groups == 1);
        CHECK(vit.config.l2_lookup);
        CHECK_FALSE(vit.config.fixed_codebook);
        CHECK(rejects([] { make(PresetName::VQ, 8); }));
    }

    TEST_CASE("lfq is a fixed binary code per channel") {
        const auto lfq = make(PresetName::LFQ, 18);
        CHECK(lfq.config.groups == 18);
        CHECK(lfq.config.group_dim == 1);
        CHECK(lfq.config.vocab == 2);
        CHECK(lfq.config.fixed_codebook);
        CHECK_FALSE(lfq.config.shared_codebook);
        CHECK_FALSE(lfq.config.finite_levels.has_value());
        CHECK(effective_vocab_bits(lfq.config) == doctest::Approx(18.0));
        CHECK(std::exp2(effective_vocab_bits(lfq.config)) == doctest::Approx(262144.0));
        CHECK(rejects([] { make(PresetName::LFQ, 4, 4); }));
    }

    TEST_CASE("lfq quantization equals componentwise sign") {
        const auto lfq = make(PresetName::LFQ, 16);
        std::mt19937_64 rng(4);
        std::normal_distribution<double> g(0.0, 1.0);
        VectorBatch b(500, 16);
        for (double& v : b.values) {
            v = g(rng);
        }
        b.values[3] = 0.0;
        b.values[7] = -0.0;
        const auto a = quantize(b, *lfq.fixed_codebook, lfq.config);
        std::size_t agree = 0;
        for (std::size_t k = 0; k < b.values.size(); ++k) {
            const double sign = b.values[k] > 0.0 ? 1.0 : -1.0;
            agree += a.dequantized.values[k] == sign ? 1 : 0;
        }
        CHECK(agree == b.values.size());
    }

    TEST_CASE("fsq uses per-channel finite grids") {
        const auto fsq = make(PresetName::FSQ, 3, std::nullopt, std::nullopt,
                              std::vector<std::uint32_t>{5, 6, 7});
        CHECK(fsq.config.groups == 3);
        CHECK(fsq.config.group_dim == 1);
        CHECK(fsq.config.vocab == 7);
        CHECK(fsq.config.fixed_codebook);
        CHECK_FALSE(fsq.config.shared_codebook);
        CHECK(fsq.config.finite_levels == std::vector<std::uint32_t>{5, 6, 7});
        CHECK(effective_vocab_bits(fsq.config) == doctest::Approx(std::log2(210.0)));
        const auto broadcast = make(PresetName::FSQ, 4, std::nullopt, std::nullopt,
                                    std::vector<std::uint32_t>{5});
        CHECK(broadcast.config.finite_levels == std::vector<std::uint32_t>(4, 5));
        CHECK(rejects([] { make(PresetName::FSQ, 4); }));
        CHECK(rejects([] {
            make(PresetName::FSQ, 3, std::nullopt, std::nullopt, std::vector<std::uint32_t>{5, 1, 5});
        }));
    }

    TEST_CASE("bsq is a shared fixed circle code with l2 lookup") {
        const auto bsq = make(PresetName::BSQ, 18, 4);
        CHECK(bsq.config.groups == 9);
        CHECK(bsq.config.group_dim == 2);
        CHECK(bsq.config.shared_codebook);
        CHECK(bsq.config.l2_lookup);
        CHECK(bsq.config.fixed_codebook);
        CHECK(effective_vocab_bits(bsq.config) == doctest::Approx(9.0 * 2.0));
        const auto& t = bsq.fixed_codebook->tables[0];
        const double h = std::sqrt(0.5);
        std::set<std::pair<int, int>> signs;
        for (std::size_t k = 0; k < 4; ++k) {
            CHECK(std::abs(t[2 * k]) == doctest::Approx(h));
            CHECK(std::abs(t[2 * k + 1]) == doctest::Approx(h));
            signs.emplace(t[2 * k] > 0 ? 1 : -1, t[2 * k + 1] > 0 ? 1 : -1);
        }
        CHECK(signs.size() == 4);
        CHECK(rejects([] { make(PresetName::BSQ, 7, 4); }));
    }

    TEST_CASE("bsq accepts explicit unit tables only") {
        PresetRequest r;
        r.name = PresetName::BSQ;
        r.latent_dim = 4;
        r.vocab = 2;
        r.bsq_codebook = std::vector<double>{1.0, 0.0, 0.0, 1.0};
        CHECK(preset(r).fixed_codebook->tables[0] == *r.bsq_codebook);
        r.bsq_codebook = std::vector<double>{1.0, 0.0, 0.0, 2.0};
        CHECK(rejects([&] { preset(r); }));
    }

    TEST_CASE("gsq shares and normalizes only above two channels per group") {
        const auto wide = make(PresetName::GSQ, 64, 4096, 8);
        CHECK(wide.config.group_dim == 8);
        CHECK(wide.config.shared_codebook);
        CHECK(wide.config.l2_lookup);
        CHECK_FALSE(wide.config.fixed_codebook);
        const auto narrow = make(PresetName::GSQ, 16, 256, 8);
        CHECK(narrow.config.group_dim == 2);
        CHECK_FALSE(narrow.config.shared_codebook);
        CHECK_FALSE(narrow.config.l2_lookup);
        const auto scalar = make(PresetName::GSQ, 16, 256, 16);
        CHECK(scalar.config.group_dim == 1);
        CHECK_FALSE(scalar.config.l2_lookup);
        CHECK(rejects([] { make(PresetName::GSQ, 16, 256, 3); }));
    }

    TEST_CASE("every preset passes config validation") {
        CHECK_NOTHROW(make(PresetName::VQ, 8, 16).config.validate());
        CHECK_NOTHROW(make(PresetName::VqganVit, 8, 16).config.validate());
        CHECK_NOTHROW(make(PresetName::LFQ, 8).config.validate());
        CHECK_NOTHROW(make(PresetName::FSQ, 8, std::nullopt, std::nullopt,
                           std::vector<std::uint32_t>{8})
                          .config.validate());
        CHECK_NOTHROW(make(PresetName::BSQ, 8, 16).config.validate());
        CHECK_NOTHROW(make(PresetName::GSQ, 8, 16, 2).config.validate());
    }

    TEST_CASE("fsq grid examples") {
        const FiniteLevelRule rule{{5}};
        const VectorBatch mid(1, 1, {0.0});
        auto a = fsq_quantize(mid, rule);
        CHECK(a.index(0, 0) == 2);
        CHECK(a.dequantized.values[0] == 0.5);
        const VectorBatch high(1, 1, {40.0});
        a = fsq_quantize(high, rule);
        CHECK(a.index(0, 0) == 4);
        CHECK(a.dequantized.values[0] == 1.0);
        const VectorBatch low(1, 1, {-40.0});
        CHECK(fsq_quantize(low, rule).index(0, 0) == 0);
    }

    TEST_CASE("fsq matches a nearest-grid oracle") {
        const FiniteLevelRule rule{{5, 6, 7}};
        std::mt19937_64 rng(21);
        std::normal_distribution<double> g(0.0, 2.5);
        VectorBatch b(2000, 3);
        for (double& v : b.values) {
            v = g(rng);
        }
        const auto a = fsq_quantize(b, rule);
        std::size_t mismatches = 0;
        for (std::size_t i = 0; i < b.count; ++i) {
            for (std::size_t k = 0; k < 3; ++k) {
                const auto L = rule.levels_per_group[k];
                const auto expect = oracle::finite_index(b.row(i)[k], L);
                mismatches += a.index(i, k) == expect ? 0 : 1;
                CHECK(a.dequantized.row(i)[k] ==
                      doctest::Approx(static_cast<double>(expect) / (L - 1)).epsilon(1e-15));
            }
        }
        CHECK(mismatches == 0);
    }

    TEST_CASE("fsq reaches every grid point and re-indexes its own output") {
        const FiniteLevelRule rule{{5, 6, 7, 8}};
        std::mt19937_64 rng(22);
        std::normal_distribution<double> g(0.0, 3.0);
        VectorBatch b(4000, 4);
        for (double& v : b.values) {
            v = g(rng);
        }
        const auto a = fsq_quantize(b, rule);
        for (std::size_t k = 0; k < 4; ++k) {
            std::set<std::uint32_t> seen;
            for (std::size_t i = 0; i < b.count; ++i) {
                seen.insert(a.index(i, k));
            }
            CHECK(seen.size() == rule.levels_per_group[k]);
        }
        CHECK(fsq_index_of_grid_values(a.dequantized, rule) == a.indices);
    }

    TEST_CASE("fsq preset quantize agrees with the finite rule") {
        const auto fsq = make(PresetName::FSQ, 3, std::nullopt, std::nullopt,
                              std::vector<std::uint32_t>{5, 6, 7});
        std::mt19937_64 rng(23);
        std::normal_distribution<double> g(0.0, 2.0);
        VectorBatch b(300, 3);
        for (double& v : b.values) {
            v = g(rng);
        }
        const auto via_config = quantize(b, *fsq.fixed_codebook, fsq.config);
        const auto via_rule = fsq_quantize(b, FiniteLevelRule{{5, 6, 7}});
        CHECK(via_config.indices == via_rule.indices);
        CHECK(via_config.dequantized == via_rule.dequantized);
    }
}
