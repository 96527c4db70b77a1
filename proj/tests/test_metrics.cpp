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

#include <array>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "fsc/error.hpp"
#include "fsc/metrics.hpp"
#include "oracles.hpp"

namespace fsc {
namespace {

TEST(Top1, HandComputed) {
  const std::vector<int> pred{0, 1, 2, 1}, labels{0, 1, 1, 1};
  EXPECT_DOUBLE_EQ(top1_accuracy(pred, labels), 0.75);
  EXPECT_EQ(per_class_accuracy(pred, labels, 3), (std::vector<double>{1.0, 2.0 / 3.0, 0.0}));
  EXPECT_THROW(top1_accuracy(std::vector<int>{0}, labels), ContractError);
  EXPECT_THROW(top1_accuracy(std::vector<int>{}, std::vector<int>{}), ContractError);
}

TEST(Recall, HandComputed) {
  // Cosine similarity only sees directions.
  const Matrix x{{1, 0}, {1, 0.1}, {0, 1}, {0.1, 1}, {-1, 0}};
  const std::vector<int> labels{0, 0, 1, 1, 0};
  const std::array<std::size_t, 2> ks{1, 4};
  const auto r = recall_at_k(x, labels, ks);
  // Query 4 ({-1,0}) has its nearest neighbours in class 1 at k=1.
  EXPECT_DOUBLE_EQ(r.at(1), 0.8);
  EXPECT_DOUBLE_EQ(r.at(4), 1.0);
}

TEST(Recall, TiesBreakTowardSmallerIndex) {
  // Items 1 and 2 are identical; query 0 sees them tied and must take item 1.
  const Matrix x{{1, 0}, {0, 1}, {0, 1}};
  const std::array<std::size_t, 1> k1{1};
  EXPECT_NEAR(recall_at_k(x, std::vector<int>{0, 0, 1}, k1).at(1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(recall_at_k(x, std::vector<int>{0, 1, 0}, k1).at(1), 0.0, 1e-15);
}

TEST(Recall, MatchesBruteForceOracleAndIsMonotone) {
  RandomStream stream(99);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + stream.next_u64() % 60;
    const std::size_t d = 1 + stream.next_u64() % 5;
    const int classes = 1 + static_cast<int>(stream.next_u64() % 5);
    Matrix x(n, d, sample_normal(stream, 0.0, 1.0, n * d));
    std::vector<int> labels(n);
    for (auto& y : labels) y = static_cast<int>(stream.next_u64() % classes);
    std::vector<std::size_t> ks;
    for (std::size_t k = 1; k < n; ++k) ks.push_back(k);
    const auto r = recall_at_k(x, labels, ks);
    double prev = 0.0;
    for (std::size_t k : ks) {
      EXPECT_EQ(r.at(k), oracle::brute_force_recall(x, labels, k)) << "n=" << n << " k=" << k;
      EXPECT_GE(r.at(k), prev);
      prev = r.at(k);
    }
  }
}

TEST(Recall, Contracts) {
  const Matrix x{{1, 0}, {0, 1}};
  const std::vector<int> labels{0, 1};
  EXPECT_THROW(recall_at_k(x, labels, std::array<std::size_t, 1>{2}), ContractError);
  EXPECT_THROW(recall_at_k(x, labels, std::array<std::size_t, 1>{0}), ContractError);
  EXPECT_THROW(recall_at_k(Matrix{{1, 0}}, std::vector<int>{0}, std::array<std::size_t, 0>{}),
               ContractError);
}

TEST(Recall, EuclideanDistanceOption) {
  // Cosine sees 0 and 2 as identical directions; Euclidean does not.
  const Matrix x{{1, 0}, {1.2, 0.3}, {10, 0}};
  const std::vector<int> labels{0, 0, 1};
  const std::array<std::size_t, 1> k1{1};
  EXPECT_NEAR(recall_at_k(x, labels, k1, RetrievalDistance::kEuclidean).at(1), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(recall_at_k(x, labels, k1, RetrievalDistance::kCosine).at(1), 1.0 / 3.0, 1e-15);
}

TEST(WithinGroupVariance, HandComputed) {
  const Matrix x{{0, 0}, {2, 0}, {5, 5}, {5, 5}};
  const std::vector<int> labels{0, 0, 1, 1};
  const std::vector<std::size_t> assignment{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(within_group_variance(x, labels, assignment), 0.5);
  const std::vector<std::size_t> split{0, 1, 0, 0};
  EXPECT_DOUBLE_EQ(within_group_variance(x, labels, split), 0.0);
}

TEST(Silhouette, SeparatedBeatsMixed) {
  const Matrix x{{0, 0}, {0.1, 0}, {10, 0}, {10.1, 0}};
  const double good = silhouette_score(x, std::vector<int>{0, 0, 1, 1});
  const double bad = silhouette_score(x, std::vector<int>{0, 1, 0, 1});
  EXPECT_GT(good, 0.95);
  EXPECT_LT(bad, 0.0);
}

TEST(EmbeddingExport, WritesHeaderAndRows) {
  const auto path = std::filesystem::temp_directory_path() / "fsc_embedding_test.csv";
  RandomStream stream(5);
  const Matrix x(6, 4, sample_normal(stream, 0.0, 1.0, 24));
  embedding_export(x, std::vector<int>{0, 0, 1, 1, 2, 2},
                   std::vector<std::size_t>{0, 1, 0, 1, 0, 1}, path, 2);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "pca_0,pca_1,label,subclass");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 6);
  std::filesystem::remove(path);
}

TEST(EvalReportJson, ContainsRecallAndDispersion) {
  EvalReport report;
  report.top1 = 0.5;
  report.recall_at = {{1, 0.25}, {2, 0.5}};
  report.dispersion = DispersionStats{1.0, 0.5};
  const auto j = to_json(report);
  EXPECT_EQ(j["top1"], 0.5);
  EXPECT_EQ(j["recall_at"]["2"], 0.5);
  EXPECT_EQ(j["dispersion"]["mean_pairwise_cosine"], 0.5);
}

}  // namespace
}  // namespace fsc
