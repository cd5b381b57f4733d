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

#include "gsq/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <string>

#include "gsq/error.hpp"

namespace gsq {

DistanceMoments
distance_moments(std::size_t dim, double sigma, bool normalized) {
    if (dim == 0) {
        fail(ErrorCode::DegenerateDim, "dimension must be positive");
    }
    const double n = static_cast<double>(dim);
    if (normalized) {
        if (dim < 2) {
            fail(ErrorCode::DegenerateDim, "normalized distance variance is undefined for n = 1");
        }
        return {2.0, 4.0 / (n - 1.0), 4.0 / n};
    }
    if (!(sigma > 0.0)) {
        fail(ErrorCode::InvalidArgument, "sigma must be positive");
    }
    const double s2 = sigma * sigma;
    return {2.0 * n * s2, 4.0 * n * s2 * s2, 8.0 * n * s2 * s2};
}

DistanceStatsReport
distance_stats(std::size_t dim, double sigma, bool normalized, std::size_t samples,
               std::uint64_t seed) {
    const auto moments = distance_moments(dim, sigma, normalized);
    if (samples < 1000) {
        fail(ErrorCode::InvalidArgument, "distance statistics need at least 1000 samples");
    }
    if (!(sigma > 0.0)) {
        fail(ErrorCode::InvalidArgument, "sigma must be positive");
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    std::vector<double> z(dim), c(dim);

    // Moments accumulated around the predicted mean to limit cancellation.
    const double shift = moments.predicted_mean;
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        double zz = 0.0, cc = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            z[k] = gauss(rng);
            c[k] = gauss(rng);
            zz += z[k] * z[k];
            cc += c[k] * c[k];
        }
        double dist = 0.0;
        if (normalized) {
            const double zn = std::sqrt(zz);
            const double cn = std::sqrt(cc);
            for (std::size_t k = 0; k < dim; ++k) {
                const double diff = z[k] / zn - c[k] / cn;
                dist += diff * diff;
            }
        } else {
            for (std::size_t k = 0; k < dim; ++k) {
                const double diff = z[k] - c[k];
                dist += diff * diff;
            }
        }
        const double x = dist - shift;
        const double x2 = x * x;
        s1 += x;
        s2 += x2;
        s3 += x2 * x;
        s4 += x2 * x2;
    }

    const double N = static_cast<double>(samples);
    const double m1 = s1 / N;
    const double r2 = s2 / N;
    const double r3 = s3 / N;
    const double r4 = s4 / N;
    const double central2 = r2 - m1 * m1;
    const double central4 = r4 - 4.0 * m1 * r3 + 6.0 * m1 * m1 * r2 - 3.0 * m1 * m1 * m1 * m1;

    DistanceStatsReport report;
    report.dim = dim;
    report.sigma = sigma;
    report.normalized = normalized;
    report.samples = samples;
    report.sample_mean = shift + m1;
    report.sample_var = central2 * N / (N - 1.0);
    report.predicted_mean = moments.predicted_mean;
    report.predicted_var = moments.predicted_var;
    report.exact_var = moments.exact_var;
    report.mean_stderr = std::sqrt(report.sample_var / N);
    report.var_stderr = std::sqrt(std::max(central4 - central2 * central2, 0.0) / N);
    return report;
}

ScalingFit
published_scaling_fit(double log_base) {
    ScalingFit fit;
    fit.B = 411.63;
    fit.alpha = 2.8375;
    fit.c_dim = 0.1601;
    fit.beta = 0.1956;
    fit.log_base = log_base;
    return fit;
}

namespace {

double
log_in_base(double x, double base) {
    return std::log(x) / std::log(base);
}

void
check_base(double log_base) {
    if (!(log_base > 0.0) || log_base == 1.0 || !std::isfinite(log_base)) {
        fail(ErrorCode::InvalidArgument, "log base must be positive and not 1");
    }
}

}  // namespace

double
scaling_eval(const ScalingFit& fit, double vocab, double latent_dim) {
    if (vocab < 2.0 || latent_dim < 1.0) {
        fail(ErrorCode::InvalidArgument, "scaling law needs V >= 2 and D >= 1");
    }
    check_base(fit.log_base);
    return fit.B / std::pow(log_in_base(vocab, fit.log_base), fit.alpha) +
           fit.c_dim * std::pow(latent_dim, fit.beta);
}

double
scaling_residual_rms(const ScalingFit& fit, std::span<const ScalingObservation> observations) {
    if (observations.empty()) {
        fail(ErrorCode::InsufficientData, "no observations");
    }
    double acc = 0.0;
    for (const auto& o : observations) {
        const double r = scaling_eval(fit, o.vocab, o.latent_dim) - o.score;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(observations.size()));
}

ScalingFit
fit_scaling_linear(std::span<const ScalingObservation> observations, double alpha, double beta,
                   double log_base) {
    check_base(log_base);
    // Normal equations of score ~ B * u + c * v.
    double uu = 0.0, uv = 0.0, vv = 0.0, uy = 0.0, vy = 0.0;
    for (const auto& o : observations) {
        const double u = std::pow(log_in_base(o.vocab, log_base), -alpha);
        const double v = std::pow(o.latent_dim, beta);
        uu += u * u;
        uv += u * v;
        vv += v * v;
        uy += u * o.score;
        vy += v * o.score;
    }
    ScalingFit fit;
    fit.alpha = alpha;
    fit.beta = beta;
    fit.log_base = log_base;
    const double det = uu * vv - uv * uv;
    if (!(std::abs(det) > 1e-300) || !std::isfinite(det)) {
        fit.residual_rms = std::numeric_limits<double>::infinity();
        return fit;
    }
    fit.B = (uy * vv - vy * uv) / det;
    fit.c_dim = (vy * uu - uy * uv) / det;
    fit.residual_rms = scaling_residual_rms(fit, observations);
    if (!std::isfinite(fit.residual_rms)) {
        fit.residual_rms = std::numeric_limits<double>::infinity();
    }
    return fit;
}

std::vector<std::pair<double, double>>
scaling_start_grid() {
    std::vector<std::pair<double, double>> grid;
    for (double alpha : {0.5, 1.5, 3.0, 5.0}) {
        for (double beta : {-1.0, 0.1, 0.5, 1.5}) {
            grid.emplace_back(alpha, beta);
        }
    }
    return grid;
}

ScalingFit
fit_scaling(std::span<const ScalingObservation> observations, double log_base) {
    check_base(log_base);
    if (observations.size() < 4) {
        fail(ErrorCode::InsufficientData, "need at least 4 observations, got " +
                                              std::to_string(observations.size()));
    }
    std::set<double> vocabs, dims;
    for (const auto& o : observations) {
        if (o.vocab < 2.0 || o.latent_dim < 1.0 || !std::isfinite(o.score)) {
            fail(ErrorCode::InvalidArgument, "observation outside the law's domain");
        }
        vocabs.insert(o.vocab);
        dims.insert(o.latent_dim);
    }
    if (vocabs.size() < 2 || dims.size() < 2) {
        fail(ErrorCode::InsufficientData, "observations must span at least 2 distinct V and D");
    }

    auto solve = [&](double a, double b) { return fit_scaling_linear(observations, a, b, log_base); };

    ScalingFit best;
    best.residual_rms = std::numeric_limits<double>::infinity();
    for (const auto& [alpha0, beta0] : scaling_start_grid()) {
        ScalingFit current = solve(alpha0, beta0);
        if (!std::isfinite(current.residual_rms)) {
            continue;
        }
        double step = 0.5;
        int stall = 0;
        while (step > 1e-12 && stall < 200000) {
            bool improved = false;
            for (const auto& [da, db] : {std::pair{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0},
                                         {0.0, -1.0}, {1.0, 1.0}, {-1.0, -1.0}, {1.0, -1.0},
                                         {-1.0, 1.0}}) {
                ScalingFit trial = solve(current.alpha + da * step, current.beta + db * step);
                if (trial.residual_rms < current.residual_rms) {
                    // Keep moving along an improving direction while it pays off.
                    ScalingFit further = trial;
                    do {
                        trial = further;
                        further = solve(trial.alpha + da * step, trial.beta + db * step);
                    } while (further.residual_rms < trial.residual_rms);
                    current = trial;
                    improved = true;
                    break;
                }
            }
            ++stall;
            if (!improved) {
                step *= 0.5;
            }
        }
        if (current.residual_rms < best.residual_rms) {
            best = current;
        }
    }
    if (!std::isfinite(best.residual_rms)) {
        fail(ErrorCode::DegenerateFit, "no starting point produced a finite residual");
    }
    return best;
}

}  // namespace gsq
