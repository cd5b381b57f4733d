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

#include "gsq/patch_encoder.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

namespace gsq {

PatchEncoder
PatchEncoder::fit(const VectorBatch& corpus, std::size_t latent_dim) {
    if (corpus.count == 0) {
        fail(ErrorCode::InvalidArgument, "cannot fit a patch encoder on an empty corpus");
    }
    if (latent_dim == 0 || latent_dim > corpus.dim) {
        fail(ErrorCode::InvalidArgument, "latent dim " + std::to_string(latent_dim) +
                                             " must lie in [1, " + std::to_string(corpus.dim) +
                                             "]");
    }
    const auto n = static_cast<Eigen::Index>(corpus.count);
    const auto dim = static_cast<Eigen::Index>(corpus.dim);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(
        corpus.values.data(), n, dim);

    const Eigen::RowVectorXd mean = X.colwise().mean();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    // Blocked accumulation keeps the centred copy small.
    constexpr Eigen::Index kBlock = 4096;
    for (Eigen::Index start = 0; start < n; start += kBlock) {
        const Eigen::Index rows = std::min(kBlock, n - start);
        const Eigen::MatrixXd centred = X.middleRows(start, rows).rowwise() - mean;
        cov.selfadjointView<Eigen::Lower>().rankUpdate(centred.transpose());
    }
    cov = cov.selfadjointView<Eigen::Lower>();
    cov /= static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        fail(ErrorCode::InvalidArgument, "eigendecomposition of the patch covariance failed");
    }

    PatchEncoder enc;
    enc.latent_dim_ = latent_dim;
    enc.mean_.assign(mean.data(), mean.data() + dim);
    enc.basis_.resize(latent_dim * corpus.dim);
    enc.variance_.resize(latent_dim);
    for (std::size_t k = 0; k < latent_dim; ++k) {
        // Eigen sorts eigenvalues ascending.
        const Eigen::Index col = dim - 1 - static_cast<Eigen::Index>(k);
        Eigen::VectorXd axis = solver.eigenvectors().col(col);
        Eigen::Index pivot = 0;
        axis.cwiseAbs().maxCoeff(&pivot);
        if (axis(pivot) < 0.0) {
            axis = -axis;
        }
        for (Eigen::Index j = 0; j < dim; ++j) {
            enc.basis_[k * corpus.dim + static_cast<std::size_t>(j)] = axis(j);
        }
        enc.variance_[k] = std::max(solver.eigenvalues()(col), 0.0);
    }
    return enc;
}

VectorBatch
PatchEncoder::encode(const VectorBatch& patches) const {
    if (patches.dim != input_dim()) {
        fail(ErrorCode::DimensionMismatch, "patch dim " + std::to_string(patches.dim) +
                                               " does not match encoder input " +
                                               std::to_string(input_dim()));
    }
    const std::size_t in_dim = input_dim();
    VectorBatch out(patches.count, latent_dim_);
    std::vector<double> centred(in_dim);
    for (std::size_t i = 0; i < patches.count; ++i) {
        auto src = patches.row(i);
        for (std::size_t j = 0; j < in_dim; ++j) {
            centred[j] = src[j] - mean_[j];
        }
        auto dst = out.row(i);
        for (std::size_t k = 0; k < latent_dim_; ++k) {
            const double* axis = basis_.data() + k * in_dim;
            double acc = 0.0;
            for (std::size_t j = 0; j < in_dim; ++j) {
                acc += axis[j] * centred[j];
            }
            dst[k] = acc;
        }
    }
    return out;
}

VectorBatch
PatchEncoder::decode(const VectorBatch& latents) const {
    if (latents.dim != latent_dim_) {
        fail(ErrorCode::DimensionMismatch, "latent dim " + std::to_string(latents.dim) +
                                               " does not match encoder latent " +
                                               std::to_string(latent_dim_));
    }
    const std::size_t in_dim = input_dim();
    VectorBatch out(latents.count, in_dim);
    for (std::size_t i = 0; i < latents.count; ++i) {
        auto src = latents.row(i);
        auto dst = out.row(i);
        std::copy(mean_.begin(), mean_.end(), dst.begin());
        for (std::size_t k = 0; k < latent_dim_; ++k) {
            const double* axis = basis_.data() + k * in_dim;
            for (std::size_t j = 0; j < in_dim; ++j) {
                dst[j] += src[k] * axis[j];
            }
        }
    }
    return out;
}

}  // namespace gsq
