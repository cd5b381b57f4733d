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

#include "gsq/objectives.hpp"
#include "support/oracles.hpp"

using namespace gsq;

namespace {

constexpr double kLn2 = 0.69314718055994530942;

std::vector<double>
uniform_logits(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> out(n);
    for (double& v : out) {
        v = u(rng);
    }
    return out;
}

// Log-sum-exp form of log(1 + e^x) in long double.
oracle::real
softplus_ld(oracle::real x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Sigmoid cross-entropy written as -y log s(l) - (1 - y) log(1 - s(l)).
oracle::real
bce(oracle::real logit, oracle::real label) {
    return label * softplus_ld(-logit) + (1 - label) * softplus_ld(logit);
}

SoftAssignment
one_hot(std::size_t n, std::size_t vocab, auto&& code_of) {
    std::vector<double> distances(n * vocab, 1e6);
    for (std::size_t i = 0; i < n; ++i) {
        distances[i * vocab + code_of(i)] = 0.0;
    }
    return soft_assign(distances, vocab, 1.0);
}

}  // namespace

TEST_SUITE("objectives") {
    TEST_CASE("vanilla discriminator examples") {
        CHECK(vanilla_discr_loss({{0.0}, {0.0}}) == doctest::Approx(kLn2).epsilon(1e-15));
        CHECK(vanilla_discr_loss({{40.0}, {-40.0}}) <= 1e-15);
        const double expect = 0.5 * (std::log1p(std::exp(2.0)) + std::log1p(std::exp(3.0)));
        CHECK(vanilla_discr_loss({{-2.0}, {3.0}}) == doctest::Approx(expect).epsilon(1e-15));
    }

    TEST_CASE("vanilla generator examples") {
        CHECK(vanilla_gen_loss({{}, {0.0}}) == doctest::Approx(kLn2).epsilon(1e-15));
        CHECK(vanilla_gen_loss({{}, {40.0}}) <= 1e-15);
        const double expect = 0.5 * (std::log1p(std::exp(-1.0)) + std::log1p(std::exp(1.0)));
        CHECK(vanilla_gen_loss({{}, {1.0, -1.0}}) == doctest::Approx(expect).epsilon(1e-15));
    }

    TEST_CASE("hinge generator is the negated mean") {
        CHECK(hinge_gen_loss({{}, {1.0, -1.0, 2.0}}) == doctest::Approx(-2.0 / 3.0).epsilon(1e-15));
        CHECK(hinge_gen_loss({{}, {0.0, 0.0, 0.0}}) == 0.0);
        std::mt19937_64 rng(1);
        const auto fake = uniform_logits(rng, 100, -50, 50);
        double sum = 0.0;
        for (double v : fake) {
            sum += v;
        }
        CHECK(hinge_gen_loss({{}, fake}) == -(sum / 100.0));
    }

    TEST_CASE("hinge discriminator examples") {
        CHECK(hinge_discr_loss({{2.0}, {-2.0}}) == 0.0);
        CHECK(hinge_discr_loss({{0.0}, {0.0}}) == 1.0);
        // real: 0.5, 0, 3 -> (0.5 + 0 + 3)/3 ; fake: 0, 1.5, -3 -> (1 + 2.5 + 0)/3
        const double expect = 0.5 * (3.5 / 3.0 + 3.5 / 3.0);
        CHECK(hinge_discr_loss({{0.5, 1.0, -2.0}, {0.0, 1.5, -3.0}}) ==
              doctest::Approx(expect).epsilon(1e-15));
    }

    TEST_CASE("non-saturating examples") {
        CHECK(non_saturate_gen_loss({{}, {0.0}}) == doctest::Approx(kLn2).epsilon(1e-15));
        CHECK(non_saturate_gen_loss({{}, {40.0}}) <= 1e-15);
        CHECK(non_saturate_discr_loss({{0.0}, {0.0}}) == doctest::Approx(kLn2).epsilon(1e-15));
        CHECK(non_saturate_discr_loss({{40.0}, {-40.0}}) <= 1e-15);
    }

    TEST_CASE("losses match direct evaluation on random logits") {
        std::mt19937_64 rng(2);
        for (int trial = 0; trial < 200; ++trial) {
            const LogitBatch b{uniform_logits(rng, 37, -50, 50), uniform_logits(rng, 29, -50, 50)};
            const auto& r = b.real;
            const auto& f = b.fake;
            const auto vd = 0.5 * (oracle::mean(r, [](oracle::real l) { return softplus_ld(-l); }) +
                                   oracle::mean(f, [](oracle::real l) { return softplus_ld(l); }));
            const auto vg = oracle::mean(f, [](oracle::real l) { return softplus_ld(-l); });
            const auto hd =
                0.5 * (oracle::mean(r, [](oracle::real l) { return std::max<oracle::real>(0, 1 - l); }) +
                       oracle::mean(f, [](oracle::real l) { return std::max<oracle::real>(0, 1 + l); }));
            const auto hg = -oracle::mean(f, [](oracle::real l) { return l; });
            const auto ng = oracle::mean(f, [](oracle::real l) { return bce(l, 1); });
            const auto nd = 0.5 * (oracle::mean(r, [](oracle::real l) { return bce(l, 1); }) +
                                   oracle::mean(f, [](oracle::real l) { return bce(l, 0); }));
            CHECK(std::abs(vanilla_discr_loss(b) - static_cast<double>(vd)) <= 1e-10);
            CHECK(std::abs(vanilla_gen_loss(b) - static_cast<double>(vg)) <= 1e-10);
            CHECK(std::abs(hinge_discr_loss(b) - static_cast<double>(hd)) <= 1e-10);
            CHECK(std::abs(hinge_gen_loss(b) - static_cast<double>(hg)) <= 1e-10);
            CHECK(std::abs(non_saturate_gen_loss(b) - static_cast<double>(ng)) <= 1e-12);
            CHECK(std::abs(non_saturate_discr_loss(b) - static_cast<double>(nd)) <= 1e-12);
        }
    }

    TEST_CASE("non-saturating generator is softplus of the negated logit") {
        std::mt19937_64 rng(3);
        for (double l : uniform_logits(rng, 2000, -50, 50)) {
            CHECK(std::abs(non_saturate_gen_loss({{}, {l}}) - softplus(-l)) <= 1e-12);
        }
    }

    TEST_CASE("losses stay finite for large logits") {
        for (double l : {1e4, -1e4}) {
            const LogitBatch b{{l, -l}, {l, -l}};
            CHECK(std::isfinite(vanilla_discr_loss(b)));
            CHECK(std::isfinite(vanilla_gen_loss(b)));
            CHECK(std::isfinite(hinge_discr_loss(b)));
            CHECK(std::isfinite(hinge_gen_loss(b)));
            CHECK(std::isfinite(non_saturate_gen_loss(b)));
            CHECK(std::isfinite(non_saturate_discr_loss(b)));
        }
        CHECK(vanilla_gen_loss({{}, {-1e4}}) == 1e4);
        CHECK(softplus(1e4) == 1e4);
        CHECK(softplus(-1e4) == 0.0);
    }

    TEST_CASE("discriminator losses vanish with confident logits") {
        const LogitBatch b{{1e3, 2e3}, {-1e3, -5e2}};
        CHECK(vanilla_discr_loss(b) <= 1e-200);
        CHECK(hinge_discr_loss(b) == 0.0);
        CHECK(non_saturate_discr_loss(b) <= 1e-200);
    }

    TEST_CASE("empty logit batches are rejected") {
        CHECK_THROWS_AS(vanilla_gen_loss({{1.0}, {}}), Error);
        CHECK_THROWS_AS(hinge_discr_loss({{}, {1.0}}), Error);
    }

    TEST_CASE("weighted totals") {
        CHECK(weighted_total({{"reconstruction", 1.0}, {"commitment", 4.0}, {"adversarial", 10.0}},
                             default_loss_weights()) == doctest::Approx(3.0).epsilon(1e-15));
        CHECK(weighted_total({}, default_loss_weights()) == 0.0);
        CHECK(weighted_total({{"perceptual", 5.0}}, default_loss_weights()) == 0.0);
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> u(-3, 3);
        for (int trial = 0; trial < 50; ++trial) {
            std::map<std::string, double> parts;
            std::map<std::string, double> weights;
            double manual = 0.0;
            for (int k = 0; k < 6; ++k) {
                const std::string name = "p" + std::to_string(k);
                parts[name] = u(rng);
                if (k % 2 == 0 || trial % 3 == 0) {
                    weights[name] = u(rng);
                    manual += weights[name] * parts[name];
                }
            }
            CHECK(weighted_total(parts, weights) == doctest::Approx(manual).epsilon(1e-13));
        }
    }

    TEST_CASE("entropy of collapsed assignments is zero") {
        const auto t = entropy_terms(one_hot(12, 5, [](std::size_t) { return 0; }));
        CHECK(t.per_sample_entropy == 0.0);
        CHECK(t.codebook_entropy == 0.0);
        CHECK(t.loss == 0.0);
    }

    TEST_CASE("entropy of evenly spread one-hot assignments") {
        const std::size_t vocab = 8;
        const auto t = entropy_terms(one_hot(32, vocab, [&](std::size_t i) { return i % vocab; }));
        CHECK(t.per_sample_entropy == 0.0);
        CHECK(t.codebook_entropy == doctest::Approx(std::log(8.0)).epsilon(1e-14));
        CHECK(t.loss == doctest::Approx(-std::log(8.0)).epsilon(1e-14));
    }

    TEST_CASE("entropy terms match direct summation") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.0, 3.0);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> dist(12);
            for (double& v : dist) {
                v = u(rng);
            }
            const auto t = entropy_terms(soft_assign(dist, 4, 1.0));
            oracle::real per_sample = 0;
            std::vector<oracle::real> mean(4, 0);
            for (std::size_t i = 0; i < 3; ++i) {
                std::vector<oracle::real> q(4);
                oracle::real z = 0;
                for (std::size_t j = 0; j < 4; ++j) {
                    q[j] = std::exp(-static_cast<oracle::real>(dist[i * 4 + j]));
                    z += q[j];
                }
                for (std::size_t j = 0; j < 4; ++j) {
                    q[j] /= z;
                    mean[j] += q[j] / 3;
                }
                per_sample += oracle::entropy(q) / 3;
            }
            const auto codebook = oracle::entropy(mean);
            CHECK(std::abs(t.per_sample_entropy - static_cast<double>(per_sample)) <= 1e-10);
            CHECK(std::abs(t.codebook_entropy - static_cast<double>(codebook)) <= 1e-10);
            CHECK(std::abs(t.loss - static_cast<double>(per_sample - codebook)) <= 1e-10);
        }
    }

    TEST_CASE("soft assignment rows are distributions") {
        std::mt19937_64 rng(6);
        std::uniform_real_distribution<double> u(0.0, 500.0);
        std::vector<double> dist(50 * 7);
        for (double& v : dist) {
            v = u(rng);
        }
        const auto q = soft_assign(dist, 7, 0.3);
        for (std::size_t i = 0; i < q.count; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < 7; ++j) {
                CHECK(q.probs[i * 7 + j] >= 0.0);
                s += q.probs[i * 7 + j];
            }
            CHECK(std::abs(s - 1.0) <= 1e-12);
        }
        CHECK_THROWS_AS(soft_assign(dist, 7, 0.0), Error);
        CHECK_THROWS_AS(soft_assign(dist, 8, 1.0), Error);
    }

    TEST_CASE("batch entropy loss agrees with explicit soft assignments") {
        for (bool shared : {false, true}) {
            const auto c = make_config(12, 3, 6, true, shared);
            const auto cb = init_codebook(c, 8);
            std::mt19937_64 rng(9);
            std::normal_distribution<double> g;
            VectorBatch b(25, 12);
            for (double& v : b.values) {
                v = g(rng);
            }
            const double tau = 0.5;
            const auto t = entropy_loss(b, cb, c, tau);

            oracle::real per_sample = 0;
            std::vector<std::vector<oracle::real>> mean(c.table_count(),
                                                        std::vector<oracle::real>(6, 0));
            std::vector<std::size_t> hits(c.table_count(), 0);
            for (std::size_t i = 0; i < b.count; ++i) {
                for (std::size_t grp = 0; grp < 3; ++grp) {
                    const auto q = oracle::normalized(b.row(i).subspan(grp * 4, 4));
                    const std::size_t tbl = shared ? 0 : grp;
                    std::vector<oracle::real> p(6);
                    oracle::real z = 0;
                    for (std::size_t j = 0; j < 6; ++j) {
                        const auto w = oracle::normalized(cb.codeword(tbl, j));
                        oracle::real d = 0;
                        for (std::size_t k = 0; k < 4; ++k) {
                            d += (q[k] - w[k]) * (q[k] - w[k]);
                        }
                        p[j] = std::exp(-d / static_cast<oracle::real>(tau));
                        z += p[j];
                    }
                    for (std::size_t j = 0; j < 6; ++j) {
                        p[j] /= z;
                        mean[tbl][j] += p[j];
                    }
                    ++hits[tbl];
                    per_sample += oracle::entropy(p);
                }
            }
            per_sample /= static_cast<oracle::real>(b.count * 3);
            oracle::real codebook = 0;
            for (std::size_t tbl = 0; tbl < mean.size(); ++tbl) {
                for (auto& m : mean[tbl]) {
                    m /= static_cast<oracle::real>(hits[tbl]);
                }
                codebook += oracle::entropy(mean[tbl]);
            }
            codebook /= static_cast<oracle::real>(mean.size());
            CHECK(std::abs(t.per_sample_entropy - static_cast<double>(per_sample)) <= 1e-10);
            CHECK(std::abs(t.codebook_entropy - static_cast<double>(codebook)) <= 1e-10);
            CHECK(t.per_sample_entropy >= 0.0);
            CHECK(t.per_sample_entropy <= std::log(6.0) + 1e-12);
            CHECK(t.codebook_entropy >= 0.0);
            CHECK(t.codebook_entropy <= std::log(6.0) + 1e-12);
        }
    }

    TEST_CASE("batch entropy loss rejects a non-positive temperature") {
        const auto c = make_config(4, 1, 4, false);
        const auto cb = init_codebook(c, 1);
        CHECK_THROWS_AS(entropy_loss(VectorBatch(2, 4, std::vector<double>(8, 1.0)), cb, c, 0.0),
                        Error);
    }
}
