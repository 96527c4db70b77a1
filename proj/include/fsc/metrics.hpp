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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "fsc/head.hpp"
#include "fsc/numerics.hpp"

namespace fsc {

enum class RetrievalDistance { kCosine, kEuclidean };

struct EvalReport {
  double top1 = 0.0;
  std::map<std::size_t, double> recall_at;
  std::optional<DispersionStats> dispersion;
  std::vector<double> per_class_accuracy;
  /// Mean squared distance of test features to their (class, sub-class) group mean.
  double within_subclass_variance = 0.0;
};

double top1_accuracy(std::span<const int> predictions, std::span<const int> labels);
std::vector<double> per_class_accuracy(std::span<const int> predictions,
                                       std::span<const int> labels, std::size_t classes);

/// For each query, success iff one of its k nearest neighbours (self
/// excluded, ties broken by smaller index) shares its label.
std::map<std::size_t, double> recall_at_k(const Matrix& features, std::span<const int> labels,
                                          std::span<const std::size_t> ks,
                                          RetrievalDistance distance = RetrievalDistance::kCosine);

/// Similarity used for ranking: higher means nearer.
Matrix retrieval_similarity(const Matrix& features, RetrievalDistance distance);

/// Mean over samples of ‖x − mean of its (label, assignment) group‖².
double within_group_variance(const Matrix& features, std::span<const int> labels,
                             std::span<const std::size_t> assignment);

/// Mean silhouette (Euclidean) of the given grouping; singleton groups score 0.
double silhouette_score(const Matrix& features, std::span<const int> groups);

/// Writes pca_0..pca_{dims-1},label,subclass rows.
void embedding_export(const Matrix& features, std::span<const int> labels,
                      std::span<const std::size_t> assignment,
                      const std::filesystem::path& path, std::size_t dims = 3);

nlohmann::ordered_json to_json(const EvalReport& report);

}  // namespace fsc
