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

#include "gsq/analysis.hpp"
#include "support/synthetic.hpp"

using namespace gsq;

namespace {

ErrorCode
code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected gsq::Error");
    return ErrorCode::InvalidArgument;
}

double
relative_error(double got, double want) {
    return std::abs(got / want - 1.0);
}

}  // namespace

TEST_SUITE("analysis") {
    TEST_CASE("closed-form distance moments") {
        const auto raw = distance_moments(8, 1.0, false);
        CHECK(raw.predicted_mean == 16.0);
        CHECK(raw.predicted_var == 32.0);
        CHECK(raw.exact_var == 64.0);
        const auto scaled = distance_moments(5, 2.0, false);
        CHECK(scaled.predicted_mean == 40.0);
        CHECK(scaled.predicted_var == 320.0);
        const auto n16 = distance_moments(16, 3.0, true);
        CHECK(n16.predicted_mean == 2.0);
        CHECK(n16.predicted_var == doctest::Approx(4.0 / 15.0).epsilon(1e-15));
        CHECK(n16.exact_var == 0.25);
        CHECK(distance_moments(2, 1.0, true).predicted_var == 4.0);
        CHECK(distance_moments(2, 1.0, true).exact_var == 2.0);
    }

    TEST_CASE("distance statistics preconditions") {
        CHECK(code_of([] { distance_moments(1, 1.0, true); }) == ErrorCode::DegenerateDim);
        CHECK(code_of([] { distance_stats(1, 1.0, true, 5000, 1); }) == ErrorCode::DegenerateDim);
        CHECK(code_of([] { distance_stats(4, 1.0, false, 999, 1); }) == ErrorCode::InvalidArgument);
        CHECK_NOTHROW(distance_stats(1, 1.0, false, 1000, 1));
    }

    TEST_CASE("sampled means agree with the closed form") {
        for (bool normalized : {false, true}) {
            const auto r = distance_stats(8, 1.0, normalized, 1000000, 3);
            CHECK(r.samples == 1000000);
            CHECK(std::abs(r.sample_mean - r.predicted_mean) <= 5.0 * r.mean_stderr);
        }
    }

    TEST_CASE("sampled variances agree with the sampling model") {
        for (std::size_t n : {2, 8, 64}) {
            for (bool normalized : {false, true}) {
                const auto r = distance_stats(n, 0.5, normalized, 400000, 4 + n);
                CHECK(std::abs(r.sample_var - r.exact_var) <= 5.0 * r.var_stderr);
            }
        }
    }

    TEST_CASE("normalized variance shrinks with dimension") {
        double last = std::numeric_limits<double>::infinity();
        for (std::size_t n : {4, 16, 64, 256}) {
            const auto r = distance_stats(n, 1.0, true, 200000, 5);
            CHECK(r.sample_var < last);
            last = r.sample_var;
        }
        const auto wide = distance_stats(512, 1.0, true, 200000, 6);
        CHECK(wide.sample_var * 512.0 / 4.0 == doctest::Approx(1.0).epsilon(0.02));
    }

    TEST_CASE("distance statistics are deterministic per seed") {
        const auto a = distance_stats(16, 1.0, false, 20000, 9);
        const auto b = distance_stats(16, 1.0, false, 20000, 9);
        CHECK(a.sample_mean == b.sample_mean);
        CHECK(a.sample_var == b.sample_var);
    }

    TEST_CASE("published constants decrease in vocabulary and grow in dimension") {
        const auto fit = published_scaling_fit();
        double last = std::numeric_limits<double>::infinity();
        for (int bits = 4; bits <= 20; ++bits) {
            const double v = scaling_eval(fit, std::ldexp(1.0, bits), 16);
            CHECK(v < last);
            last = v;
        }
        last = 0.0;
        for (double dim : {1.0, 4.0, 16.0, 64.0}) {
            const double v = scaling_eval(fit, 4096, dim);
            CHECK(v > last);
            last = v;
        }
    }

    TEST_CASE("zero B leaves the dimension term") {
        auto fit = published_scaling_fit();
        fit.B = 0.0;
        CHECK(scaling_eval(fit, 1024, 32) == doctest::Approx(0.1601 * std::pow(32.0, 0.1956)).epsilon(1e-15));
    }

    TEST_CASE("pinned values of the published fit") {
        CHECK(scaling_eval(published_scaling_fit(2.0), 8192, 8) ==
              doctest::Approx(0.5247010132391484).epsilon(1e-14));
        CHECK(scaling_eval(published_scaling_fit(std::exp(1.0)), 8192, 8) ==
              doctest::Approx(1.0446309589611185).epsilon(1e-14));
    }

    TEST_CASE("noise-free data is recovered within one percent") {
        for (double base : {2.0, std::exp(1.0)}) {
            const auto truth = published_scaling_fit(base);
            const auto obs = testing::scaling_observations(truth, 0.0, 1);
            const auto f = fit_scaling(obs, base);
            CHECK(f.log_base == base);
            CHECK(relative_error(f.B, truth.B) <= 0.01);
            CHECK(relative_error(f.alpha, truth.alpha) <= 0.01);
            CHECK(relative_error(f.c_dim, truth.c_dim) <= 0.01);
            CHECK(relative_error(f.beta, truth.beta) <= 0.01);
            CHECK(f.residual_rms <= 1e-8);
        }
    }

    TEST_CASE("one percent noise is recovered within ten percent") {
        const auto truth = published_scaling_fit(2.0);
        const auto obs = testing::scaling_observations(truth, 0.01, 1);
        const auto f = fit_scaling(obs, 2.0);
        CHECK(relative_error(f.B, truth.B) <= 0.1);
        CHECK(relative_error(f.alpha, truth.alpha) <= 0.1);
        CHECK(relative_error(f.c_dim, truth.c_dim) <= 0.1);
        CHECK(relative_error(f.beta, truth.beta) <= 0.1);
        CHECK(f.residual_rms <= scaling_residual_rms(truth, obs));
    }

    TEST_CASE("fit residual is no worse than any starting point") {
        const auto obs = testing::scaling_observations(published_scaling_fit(), 0.02, 7);
        const auto f = fit_scaling(obs);
        for (const auto& [alpha, beta] : scaling_start_grid()) {
            const auto start = fit_scaling_linear(obs, alpha, beta, 2.0);
            if (std::isfinite(start.residual_rms)) {
                CHECK(f.residual_rms <= start.residual_rms);
            }
        }
        const auto again = fit_scaling(obs);
        CHECK(again.B == f.B);
        CHECK(again.beta == f.beta);
    }

    TEST_CASE("linear solve is exact for the true exponents") {
        const auto truth = published_scaling_fit();
        const auto obs = testing::scaling_observations(truth, 0.0, 1);
        const auto f = fit_scaling_linear(obs, truth.alpha, truth.beta, 2.0);
        CHECK(f.B == doctest::Approx(truth.B).epsilon(1e-9));
        CHECK(f.c_dim == doctest::Approx(truth.c_dim).epsilon(1e-9));
    }

    TEST_CASE("fits need enough distinct observations") {
        const auto obs = testing::scaling_observations(published_scaling_fit(), 0.0, 1);
        CHECK(code_of([&] { fit_scaling(std::span(obs).first(2)); }) == ErrorCode::InsufficientData);
        CHECK(code_of([&] { fit_scaling(std::span(obs).first(3)); }) == ErrorCode::InsufficientData);
        // The first four rows share one vocabulary size.
        CHECK(code_of([&] { fit_scaling(std::span(obs).first(4)); }) == ErrorCode::InsufficientData);
        CHECK_THROWS_AS(fit_scaling(obs, 1.0), Error);
    }
}
