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

#include <map>
#include <span>
#include <string>
#include <vector>

#include "gsq/quantizer.hpp"

namespace gsq {

/// Discriminator logits for real and reconstructed samples.
struct LogitBatch {
    std::vector<double> real;
    std::vector<double> fake;
};

/// log(1 + e^x) without overflow.
double
softplus(double x) noexcept;

double
vanilla_discr_loss(const LogitBatch& logits);
double
vanilla_gen_loss(const LogitBatch& logits);
double
hinge_gen_loss(const LogitBatch& logits);
double
hinge_discr_loss(const LogitBatch& logits);
/// Binary cross-entropy of the fake logits toward label 1.
double
non_saturate_gen_loss(const LogitBatch& logits);
/// Half the sum of cross-entropies: real toward 1, fake toward 0.
double
non_saturate_discr_loss(const LogitBatch& logits);

/// Loss weights used for the tokenizer objective.
inline const std::map<std::string, double>&
default_loss_weights() {
    static const std::map<std::string, double> weights{
        {"reconstruction", 1.0}, {"commitment", 0.25}, {"adversarial", 0.1}};
    return weights;
}

/// Sum of weight * part; parts without a weight contribute nothing.
double
weighted_total(const std::map<std::string, double>& parts,
               const std::map<std::string, double>& weights);

struct EntropyTerms {
    double per_sample_entropy = 0.0;
    double codebook_entropy = 0.0;
    double loss = 0.0;  // per_sample_entropy - codebook_entropy
};

/// Row-major N x V matrix of non-negative probabilities, rows summing to 1.
struct SoftAssignment {
    std::size_t count = 0;
    std::size_t vocab = 0;
    std::vector<double> probs;
};

/// q = softmax(-distance / temperature) per row of an N x V distance matrix.
SoftAssignment
soft_assign(std::span<const double> distances, std::size_t vocab, double temperature);

/// Natural-log entropy terms of one soft assignment.
EntropyTerms
entropy_terms(const SoftAssignment& q);

/**
 * Entropy objective for a batch: every (row, group) slice gets a soft
 * assignment from its lookup-space squared distances to its table. The
 * per-sample term averages over all slices; the codebook term averages the
 * entropy of each table's mean assignment.
 */
EntropyTerms
entropy_loss(const VectorBatch& batch, const Codebook& codebook, const QuantizerConfig& config,
             double temperature = 1.0);

}  // namespace gsq
