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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsc/backbone.hpp"
#include "fsc/datagen.hpp"
#include "fsc/head.hpp"
#include "fsc/metrics.hpp"
#include "fsc/optimizer.hpp"

namespace fsc {

enum class HeadVariant {
  kFsc,                 // frozen sampled sub-centers
  kSoftmax,             // one trainable center per class
  kCenterLoss,          // softmax + learned class centers pulled toward features
  kTrainableSubcenter,  // c·s trainable sub-centers, ordinary linear-layer init
};

HeadVariant parse_head_variant(const std::string& name);
std::string to_string(HeadVariant variant);

struct TrainConfig {
  std::size_t s = 4;
  double sigma2 = 1e-3;
  double beta = 1e-4;
  double lr0 = 0.01;
  double momentum = 0.9;
  double weight_decay = 4e-5;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;
  HeadVariant head_variant = HeadVariant::kFsc;
  AssignmentRule assignment_rule = AssignmentRule::kArgmaxLogit;
  bool normalize_features = false;

  // Backbone shape: input → hidden_layers × hidden_width (ReLU) → feature_dim.
  std::size_t hidden_width = 64;
  std::size_t hidden_layers = 2;
  std::size_t feature_dim = 16;
  /// Center update rate of the center-loss baseline.
  double center_alpha = 0.5;

  void validate() const;
};

nlohmann::ordered_json to_json(const TrainConfig& config);
/// Overlays the keys present in `j` onto `base`.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// Trainable bank initialized like an ordinary c·s-wide linear layer: every
/// sub-center row is an independent kaiming-uniform draw (child stream 3).
/// Class centers hold the per-class row means.
SubCenterBank make_free_bank(std::size_t c, std::size_t s, std::size_t d, std::uint64_t seed);

/// Classification head used during training: the fixed sub-center head or
/// one of the baselines, all sharing the sub-center bank representation.
class ClassifierHead {
 public:
  ClassifierHead(HeadVariant variant, SubCenterBank bank, double beta, AssignmentRule rule,
                 double center_alpha = 0.5);

  static ClassifierHead create(const TrainConfig& config, std::size_t classes,
                               std::uint64_t seed);

  HeadVariant variant() const { return variant_; }
  const SubCenterBank& bank() const { return bank_; }
  SubCenterBank& bank() { return bank_; }
  double beta() const { return beta_; }
  AssignmentRule assignment_rule() const { return rule_; }
  bool trainable() const { return !bank_.frozen(); }

  /// Learned class centers of the center-loss baseline (empty otherwise).
  const Matrix& class_centers() const { return class_centers_; }
  void set_class_centers(Matrix centers) { class_centers_ = std::move(centers); }

  /// Loss, feature gradient and (for trainable heads) weight gradient.
  HeadStep step(const FeatureBatch& batch) const;
  /// Center-loss moving-average update; no-op for other variants.
  void update_centers(const FeatureBatch& batch);

  HeadOutput output(const FeatureBatch& batch) const;

 private:
  HeadVariant variant_;
  SubCenterBank bank_;
  double beta_;
  AssignmentRule rule_;
  double center_alpha_;
  Matrix class_centers_;
};

struct LossRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  LossBreakdown loss;
  double lr = 0.0;
};

/// Features fed to the head: backbone output, L2-normalized when configured.
Matrix extract_features(const MlpBackbone& net, const Matrix& inputs, bool normalize);

/// Seeded permutation of [0, n) for an epoch.
std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t n);

/// One pass over `data` in seeded mini-batches. The backbone always trains;
/// the head trains only when it is not frozen.
std::vector<LossRecord> train_epoch(MlpBackbone& net, ClassifierHead& head,
                                    const LabeledDataset& data, const TrainConfig& config,
                                    OptimizerState& state, std::size_t epoch);

std::size_t batches_per_epoch(std::size_t samples, std::size_t batch_size);

struct Model {
  MlpBackbone net;
  ClassifierHead head;
  bool normalize_features = false;
};

/// Backbone from child stream 10 of the seed, head from child seed 20.
Model create_model(const TrainConfig& config, std::size_t input_dim, std::size_t classes);

struct TrainResult {
  Model model;
  std::vector<LossRecord> losses;
};

TrainResult train_model(const TrainConfig& config, const LabeledDataset& train,
                        std::size_t classes);

struct ModelView {
  Matrix features;
  HeadOutput output;
  std::vector<int> predictions;
};

ModelView run_model(const Model& model, const LabeledDataset& data);
EvalReport evaluate_model(const Model& model, const LabeledDataset& data);

void write_loss_csv(std::ostream& out, const std::vector<LossRecord>& records);

// Checkpoint: `<stem>.json` metadata and `<stem>.bin` holding, in order,
// every layer's weight then bias (as 1×out), the head weights, the head
// class centers, and the center-loss centers (possibly 0×0).
void save_checkpoint(const std::filesystem::path& stem, const Model& model);
Model load_checkpoint(const std::filesystem::path& stem);

}  // namespace fsc
