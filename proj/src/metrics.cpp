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

#include "fsc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "fsc/error.hpp"

namespace fsc {

double top1_accuracy(std::span<const int> predictions, std::span<const int> labels) {
  require(predictions.size() == labels.size(),
          "top1_accuracy: " + std::to_string(predictions.size()) + " predictions vs " +
              std::to_string(labels.size()) + " labels");
  require(!labels.empty(), "top1_accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<double> per_class_accuracy(std::span<const int> predictions,
                                       std::span<const int> labels, std::size_t classes) {
  require(predictions.size() == labels.size(), "per_class_accuracy: length mismatch");
  std::vector<double> hits(classes, 0.0);
  std::vector<double> totals(classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    require(c < classes, "per_class_accuracy: label out of range");
    totals[c] += 1.0;
    hits[c] += predictions[i] == labels[i];
  }
  for (std::size_t c = 0; c < classes; ++c) hits[c] = totals[c] > 0 ? hits[c] / totals[c] : 0.0;
  return hits;
}

Matrix retrieval_similarity(const Matrix& features, RetrievalDistance distance) {
  if (distance == RetrievalDistance::kCosine) {
    const Matrix unit = l2_normalize_rows(features);
    return matmul_bt(unit, unit);
  }
  Matrix sim(features.rows(), features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i)
    for (std::size_t j = 0; j < features.rows(); ++j)
      sim(i, j) = -squared_distance(features.row(i), features.row(j));
  return sim;
}

std::map<std::size_t, double> recall_at_k(const Matrix& features, std::span<const int> labels,
                                          std::span<const std::size_t> ks,
                                          RetrievalDistance distance) {
  const std::size_t n = features.rows();
  require(labels.size() == n, "recall_at_k: label count does not match feature rows");
  require(n >= 2, "recall_at_k: need at least 2 samples");
  std::size_t max_k = 0;
  for (auto k : ks) {
    require(k >= 1 && k < n, "recall_at_k: k=" + std::to_string(k) + " outside [1, " +
                                 std::to_string(n - 1) + "]");
    max_k = std::max(max_k, k);
  }

  const Matrix sim = retrieval_similarity(features, distance);
  std::map<std::size_t, double> hits;
  for (auto k : ks) hits[k] = 0.0;

  std::vector<std::size_t> order(n - 1);
  for (std::size_t q = 0; q < n; ++q) {
    std::size_t t = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != q) order[t++] = j;
    auto closer = [&](std::size_t a, std::size_t b) {
      if (sim(q, a) != sim(q, b)) return sim(q, a) > sim(q, b);
      return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(max_k),
                      order.end(), closer);
    // Rank of the first same-label neighbour among the top max_k.
    std::size_t first_hit = max_k;
    for (std::size_t r = 0; r < max_k; ++r)
      if (labels[order[r]] == labels[q]) {
        first_hit = r;
        break;
      }
    for (auto k : ks)
      if (first_hit < k) hits[k] += 1.0;
  }
  for (auto& [k, v] : hits) v /= static_cast<double>(n);
  return hits;
}

double within_group_variance(const Matrix& features, std::span<const int> labels,
                             std::span<const std::size_t> assignment) {
  const std::size_t n = features.rows();
  require(labels.size() == n && assignment.size() == n,
          "within_group_variance: length mismatch");
  require(n >= 1, "within_group_variance: empty input");
  std::map<std::pair<int, std::size_t>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[{labels[i], assignment[i]}].push_back(i);

  double total = 0.0;
  const std::size_t d = features.cols();
  for (const auto& [key, members] : groups) {
    std::vector<double> mean(d, 0.0);
    for (auto i : members)
      for (std::size_t k = 0; k < d; ++k) mean[k] += features(i, k);
    for (auto& m : mean) m /= static_cast<double>(members.size());
    for (auto i : members) total += squared_distance(features.row(i), mean);
  }
  return total / static_cast<double>(n);
}

double silhouette_score(const Matrix& features, std::span<const int> groups) {
  const std::size_t n = features.rows();
  require(groups.size() == n, "silhouette_score: length mismatch");
  require(n >= 2, "silhouette_score: need at least 2 samples");
  std::map<int, std::size_t> index;
  for (int g : groups) index.emplace(g, 0);
  std::size_t next = 0;
  for (auto& [g, idx] : index) idx = next++;
  const std::size_t count = index.size();
  if (count < 2) return 0.0;

  std::vector<std::size_t> group_of(n);
  std::vector<double> sizes(count, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    group_of[i] = index[groups[i]];
    sizes[group_of[i]] += 1.0;
  }

  double total = 0.0;
  std::vector<double> sums(count);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sums[group_of[j]] += std::sqrt(squared_distance(features.row(i), features.row(j)));
    const std::size_t own = group_of[i];
    if (sizes[own] <= 1.0) continue;
    const double a = sums[own] / (sizes[own] - 1.0);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < count; ++g)
      if (g != own) b = std::min(b, sums[g] / sizes[g]);
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

void embedding_export(const Matrix& features, std::span<const int> labels,
                      std::span<const std::size_t> assignment,
                      const std::filesystem::path& path, std::size_t dims) {
  require(labels.size() == features.rows() && assignment.size() == features.rows(),
          "embedding_export: features, labels and assignment lengths differ");
  const Matrix projected = pca_project(features, std::min(dims, features.cols()));
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (std::size_t j = 0; j < projected.cols(); ++j) out << "pca_" << j << ',';
  out << "label,subclass\n";
  for (std::size_t i = 0; i < projected.rows(); ++i) {
    for (std::size_t j = 0; j < projected.cols(); ++j) out << format_double(projected(i, j)) << ',';
    out << labels[i] << ',' << assignment[i] << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

nlohmann::ordered_json to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["top1"] = report.top1;
  nlohmann::ordered_json recall = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.recall_at) recall[std::to_string(k)] = v;
  j["recall_at"] = recall;
  if (report.dispersion) {
    j["dispersion"] = {{"mean_pairwise_sq_dist", report.dispersion->mean_pairwise_sq_dist},
                       {"mean_pairwise_cosine", report.dispersion->mean_pairwise_cosine}};
  } else {
    j["dispersion"] = nullptr;
  }
  j["per_class_accuracy"] = report.per_class_accuracy;
  j["within_subclass_variance"] = report.within_subclass_variance;
  return j;
}

}  // namespace fsc
