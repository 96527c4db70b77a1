// Copyright 2026 The fsc Authors.
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

// Fixed sub-center classification head.
//
// Every class owns s sub-centers. Logits are raw inner products between a
// feature and all c·s sub-centers; one softmax runs over all of them and a
// class's probability is the sum over its sub-centers. Sub-centers are drawn
// once around a kaiming-uniform class center and then frozen: gradients are
// taken with respect to the features only.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fsc/numerics.hpp"

namespace fsc {

using Labels = std::vector<int>;

/// How the compactness term picks the sub-center a sample is pulled toward.
enum class AssignmentRule {
  kArgmaxLogit,       // most activated true-class sub-center (default)
  kNearestEuclidean,  // closest true-class sub-center
};

AssignmentRule parse_assignment_rule(const std::string& name);
std::string to_string(AssignmentRule rule);

class SubCenterBank {
 public:
  /// `weights` holds row i·s + j for sub-center j of class i.
  SubCenterBank(Matrix centers, Matrix weights, std::size_t subcenters_per_class,
                double sigma2, std::uint64_t seed, bool frozen);

  std::size_t classes() const { return centers_.rows(); }
  std::size_t subcenters_per_class() const { return s_; }
  std::size_t dim() const { return weights_.cols(); }
  double sigma2() const { return sigma2_; }
  std::uint64_t seed() const { return seed_; }
  bool frozen() const { return frozen_; }

  const Matrix& centers() const { return centers_; }
  const Matrix& weights() const { return weights_; }
  std::span<const double> subcenter(std::size_t cls, std::size_t k) const {
    return weights_.row(cls * s_ + k);
  }

  /// Mutable access for trainable baselines. Throws ContractError once frozen.
  Matrix& mutable_weights();
  void set_weights(Matrix weights);
  void freeze() { frozen_ = true; }
  /// Unfrozen copy with the same contents, for trainable sub-center baselines.
  SubCenterBank trainable_copy() const;

  std::string content_hash() const { return fsc::content_hash(weights_.values()); }

 private:
  Matrix centers_;
  Matrix weights_;
  std::size_t s_;
  double sigma2_;
  std::uint64_t seed_;
  bool frozen_;
};

struct FeatureBatch {
  Matrix x;
  Labels y;
};

struct HeadOutput {
  Matrix logits;          // n × c·s
  Matrix subclass_probs;  // n × c·s
  Matrix class_probs;     // n × c
  std::vector<std::size_t> assignment;  // empty when the batch has no labels
};

struct LossBreakdown {
  double cross_entropy = 0.0;
  double compactness = 0.0;
  double total = 0.0;
  double beta = 0.0;
};

struct DispersionStats {
  double mean_pairwise_sq_dist = 0.0;
  double mean_pairwise_cosine = 0.0;
};

/// Kaiming-uniform class centers: U(−√(6/d), √(6/d)), c×d row-major draws.
Matrix init_centers(std::size_t c, std::size_t d, RandomStream& stream);
double kaiming_uniform_bound(std::size_t fan_in);

/// Draws w[i·s+j] ~ N(mu_i, σ² I) and returns the bank frozen.
SubCenterBank sample_subcenters(const Matrix& mu, std::size_t s, double sigma2,
                                RandomStream& stream);

/// Centers from child stream 1 of `seed`, sub-centers from child stream 2.
SubCenterBank make_bank(std::size_t c, std::size_t s, std::size_t d, double sigma2,
                        std::uint64_t seed);

void validate_batch(const SubCenterBank& bank, const FeatureBatch& batch);

HeadOutput forward(const SubCenterBank& bank, const FeatureBatch& batch,
                   AssignmentRule rule = AssignmentRule::kArgmaxLogit);

/// Predicted class per row: argmax of class probabilities, smallest index on ties.
std::vector<int> predict_classes(const HeadOutput& out);

/// ½ Σ_i ‖x_i − ŵ_{y_i,k_i}‖², summed over the batch.
double compactness_loss(const SubCenterBank& bank, const FeatureBatch& batch,
                        std::span<const std::size_t> assignment);

LossBreakdown fsc_loss(const SubCenterBank& bank, const FeatureBatch& batch, double beta,
                       AssignmentRule rule = AssignmentRule::kArgmaxLogit);

/// ∂L/∂x for the total loss. The sub-centers are constants and the hard
/// assignment is held fixed.
Matrix loss_grad_features(const SubCenterBank& bank, const FeatureBatch& batch, double beta,
                          AssignmentRule rule = AssignmentRule::kArgmaxLogit);

/// Everything one training step needs from the head, from a single pass.
struct HeadStep {
  HeadOutput output;
  LossBreakdown loss;
  Matrix feature_grad;  // n × d
  Matrix weight_grad;   // c·s × d, empty unless requested
};

HeadStep evaluate_head(const SubCenterBank& bank, const FeatureBatch& batch, double beta,
                       AssignmentRule rule, bool want_weight_grad);

DispersionStats dispersion_stats(const SubCenterBank& bank);

/// Row-wise L2 normalization and its backward pass (optional feature
/// preprocessing, off by default).
Matrix l2_normalize_rows(const Matrix& x);
Matrix l2_normalize_backward(const Matrix& x, const Matrix& grad_normalized);

// Bank persistence: `<stem>.json` header {c, s, d, sigma2, seed, frozen,
// content_hash} and `<stem>.bin` holding the weights then the class centers
// in the numerics binary format.
void save_bank(const std::filesystem::path& stem, const SubCenterBank& bank);
SubCenterBank load_bank(const std::filesystem::path& stem);

}  // namespace fsc
