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
#include <span>
#include <utility>
#include <vector>

namespace gsq {

/**
 * Monte-Carlo moments of the squared distance between two independent
 * N(0, sigma^2 I_n) vectors, optionally both l2-normalized first.
 *
 * predicted_* are the commonly quoted closed forms: mean 2 n sigma^2 and
 * variance 4 n sigma^4 (raw), mean 2 and variance 4/(n-1) (normalized).
 * exact_var is the variance implied by the sampling model itself:
 * |z - c|^2 = 2 sigma^2 chi^2_n gives 8 n sigma^4, and for unit vectors
 * Var[cos] = 1/n gives 4/n. The two disagree; both are reported.
 */
struct DistanceStatsReport {
    std::size_t dim = 0;
    double sigma = 1.0;
    bool normalized = false;
    std::size_t samples = 0;
    double sample_mean = 0.0;
    double sample_var = 0.0;
    double predicted_mean = 0.0;
    double predicted_var = 0.0;
    double exact_var = 0.0;
    /// Standard error of sample_mean, from the sample variance.
    double mean_stderr = 0.0;
    /// Standard error of sample_var, from the sample fourth central moment.
    double var_stderr = 0.0;
};

struct DistanceMoments {
    double predicted_mean;
    double predicted_var;
    double exact_var;
};

/// Closed forms only; throws DegenerateDim for normalized n = 1.
DistanceMoments
distance_moments(std::size_t dim, double sigma, bool normalized);

/// Throws DegenerateDim for normalized n = 1 and InvalidArgument for fewer than 1000 samples.
DistanceStatsReport
distance_stats(std::size_t dim, double sigma, bool normalized, std::size_t samples,
               std::uint64_t seed);

/// score = B / (log_base V)^alpha + c_dim * D^beta.
struct ScalingFit {
    double B = 0.0;
    double alpha = 0.0;
    double c_dim = 0.0;
    double beta = 0.0;
    double residual_rms = 0.0;
    double log_base = 2.0;
};

/// Published rFID fit constants, tagged with the requested log base.
ScalingFit
published_scaling_fit(double log_base = 2.0);

double
scaling_eval(const ScalingFit& fit, double vocab, double latent_dim);

struct ScalingObservation {
    double vocab = 0.0;
    double latent_dim = 0.0;
    double score = 0.0;
};

/// Root-mean-square residual of fit over observations.
double
scaling_residual_rms(const ScalingFit& fit, std::span<const ScalingObservation> observations);

/// For fixed exponents, the least-squares B and c_dim (the model is linear in them).
ScalingFit
fit_scaling_linear(std::span<const ScalingObservation> observations, double alpha, double beta,
                   double log_base);

/// (alpha, beta) starting points used by fit_scaling.
std::vector<std::pair<double, double>>
scaling_start_grid();

/**
 * Least-squares fit of (B, alpha, c_dim, beta). B and c_dim are solved in
 * closed form for each exponent pair; the exponents are refined by a
 * shrinking-step compass search started from every point of
 * scaling_start_grid(), keeping the best result. Throws InsufficientData
 * for fewer than 4 observations or fewer than 2 distinct V or D values, and
 * DegenerateFit when no start yields a finite residual.
 */
ScalingFit
fit_scaling(std::span<const ScalingObservation> observations, double log_base = 2.0);

}  // namespace gsq
