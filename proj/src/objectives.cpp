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

#include "gsq/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "finite_grid.hpp"

namespace gsq {

double
softplus(double x) noexcept {
    if (x > 0.0) {
        return x + std::log1p(std::exp(-x));
    }
    return std::log1p(std::exp(x));
}

namespace {

double
mean_of(const std::vector<double>& values, auto&& transform) {
    if (values.empty()) {
        fail(ErrorCode::InvalidArgument, "loss over an empty logit batch");
    }
    double acc = 0.0;
    for (double v : values) {
        acc += transform(v);
    }
    return acc / static_cast<double>(values.size());
}

// ReLU(l) - l * label + log(1 + e^{-|l|}).
double
sigmoid_cross_entropy(double logit, double label) noexcept {
    return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

}  // namespace

double
vanilla_discr_loss(const LogitBatch& logits) {
    const double real = mean_of(logits.real, [](double l) { return softplus(-l); });
    const double fake = mean_of(logits.fake, [](double l) { return softplus(l); });
    return 0.5 * (real + fake);
}

double
vanilla_gen_loss(const LogitBatch& logits) {
    return mean_of(logits.fake, [](double l) { return softplus(-l); });
}

double
hinge_gen_loss(const LogitBatch& logits) {
    return -mean_of(logits.fake, [](double l) { return l; });
}

double
hinge_discr_loss(const LogitBatch& logits) {
    const double real = mean_of(logits.real, [](double l) { return std::max(0.0, 1.0 - l); });
    const double fake = mean_of(logits.fake, [](double l) { return std::max(0.0, 1.0 + l); });
    return 0.5 * (real + fake);
}

double
non_saturate_gen_loss(const LogitBatch& logits) {
    return mean_of(logits.fake, [](double l) { return sigmoid_cross_entropy(l, 1.0); });
}

double
non_saturate_discr_loss(const LogitBatch& logits) {
    const double real = mean_of(logits.real, [](double l) { return sigmoid_cross_entropy(l, 1.0); });
    const double fake = mean_of(logits.fake, [](double l) { return sigmoid_cross_entropy(l, 0.0); });
    return 0.5 * (real + fake);
}

double
weighted_total(const std::map<std::string, double>& parts,
               const std::map<std::string, double>& weights) {
    double total = 0.0;
    for (const auto& [name, value] : parts) {
        if (auto it = weights.find(name); it != weights.end()) {
            total += it->second * value;
        }
    }
    return total;
}

SoftAssignment
soft_assign(std::span<const double> distances, std::size_t vocab, double temperature) {
    if (!(temperature > 0.0)) {
        fail(ErrorCode::InvalidArgument, "entropy temperature must be positive");
    }
    if (vocab == 0 || distances.size() % vocab != 0) {
        fail(ErrorCode::DimensionMismatch, "distance matrix is not N x V");
    }
    SoftAssignment q;
    q.vocab = vocab;
    q.count = distances.size() / vocab;
    q.probs.resize(distances.size());
    for (std::size_t i = 0; i < q.count; ++i) {
        auto row = distances.subspan(i * vocab, vocab);
        const double best = *std::min_element(row.begin(), row.end());
        double norm = 0.0;
        for (std::size_t j = 0; j < vocab; ++j) {
            const double w = std::exp(-(row[j] - best) / temperature);
            q.probs[i * vocab + j] = w;
            norm += w;
        }
        for (std::size_t j = 0; j < vocab; ++j) {
            q.probs[i * vocab + j] /= norm;
        }
    }
    return q;
}

namespace {

double
entropy_of(std::span<const double> p) noexcept {
    double h = 0.0;
    for (double x : p) {
        if (x > 0.0) {
            h -= x * std::log(x);
        }
    }
    return h;
}

}  // namespace

EntropyTerms
entropy_terms(const SoftAssignment& q) {
    EntropyTerms out;
    if (q.count == 0) {
        return out;
    }
    std::vector<double> mean(q.vocab, 0.0);
    double per_sample = 0.0;
    for (std::size_t i = 0; i < q.count; ++i) {
        std::span<const double> row(q.probs.data() + i * q.vocab, q.vocab);
        per_sample += entropy_of(row);
        for (std::size_t j = 0; j < q.vocab; ++j) {
            mean[j] += row[j];
        }
    }
    for (double& m : mean) {
        m /= static_cast<double>(q.count);
    }
    out.per_sample_entropy = per_sample / static_cast<double>(q.count);
    out.codebook_entropy = entropy_of(mean);
    out.loss = out.per_sample_entropy - out.codebook_entropy;
    return out;
}

EntropyTerms
entropy_loss(const VectorBatch& batch, const Codebook& codebook, const QuantizerConfig& config,
             double temperature) {
    config.validate();
    check_codebook(codebook, config);
    if (batch.dim != config.latent_dim) {
        fail(ErrorCode::DimensionMismatch, "batch dim does not match latent_dim");
    }
    if (!(temperature > 0.0)) {
        fail(ErrorCode::InvalidArgument, "entropy temperature must be positive");
    }
    const std::size_t d = config.group_dim;
    const std::size_t tables = config.table_count();

    std::vector<std::vector<double>> lookup = codebook.tables;
    if (config.l2_lookup && !config.is_finite()) {
        for (auto& table : lookup) {
            for (std::size_t j = 0; j * d < table.size(); ++j) {
                l2_normalize_inplace(std::span<double>(table.data() + j * d, d));
            }
        }
    }

    // Soft assignments are streamed: each slice contributes its entropy to
    // the per-sample term and its probabilities to its table's mean.
    std::vector<std::vector<double>> mean(tables);
    std::vector<std::size_t> slices(tables, 0);
    for (std::size_t t = 0; t < tables; ++t) {
        mean[t].assign(config.entries_in_table(t), 0.0);
    }
    std::vector<double> query(d);
    std::vector<double> weights;
    double per_sample_sum = 0.0;
    for (std::size_t i = 0; i < batch.count; ++i) {
        auto row = batch.row(i);
        for (std::size_t g = 0; g < config.groups; ++g) {
            std::copy_n(row.begin() + static_cast<std::ptrdiff_t>(g * d), d, query.begin());
            if (config.is_finite()) {
                query[0] = detail::sigmoid(query[0]);
            } else if (config.l2_lookup) {
                l2_normalize_inplace(query);
            }
            const std::size_t t = config.table_for_group(g);
            const auto& table = lookup[t];
            const std::size_t entries = mean[t].size();
            weights.resize(entries);
            for (std::size_t j = 0; j < entries; ++j) {
                weights[j] = detail::squared_distance(
                    query, std::span<const double>(table.data() + j * d, d));
            }
            const double best = *std::min_element(weights.begin(), weights.end());
            double norm = 0.0;
            for (double& w : weights) {
                w = std::exp(-(w - best) / temperature);
                norm += w;
            }
            for (std::size_t j = 0; j < entries; ++j) {
                weights[j] /= norm;
                mean[t][j] += weights[j];
            }
            per_sample_sum += entropy_of(weights);
            ++slices[t];
        }
    }

    EntropyTerms out;
    std::size_t samples = 0;
    for (std::size_t t = 0; t < tables; ++t) {
        samples += slices[t];
        if (slices[t] > 0) {
            for (double& m : mean[t]) {
                m /= static_cast<double>(slices[t]);
            }
            out.codebook_entropy += entropy_of(mean[t]);
        }
    }
    out.codebook_entropy /= static_cast<double>(tables);
    out.per_sample_entropy = samples == 0 ? 0.0 : per_sample_sum / static_cast<double>(samples);
    out.loss = out.per_sample_entropy - out.codebook_entropy;
    return out;
}

}  // namespace gsq
