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
#include <string>
#include <utility>
#include <vector>

#include "fsc/head.hpp"
#include "fsc/numerics.hpp"

namespace fsc {

/// Gaussian mixture where every class is a union of well-separated modes.
struct MixtureSpec {
  std::size_t classes = 10;
  std::size_t modes_per_class = 4;
  std::size_t input_dim = 16;
  double mode_separation = 6.0;   // distance between any two modes of a class
  double class_separation = 4.0;  // distance between any two class centers
  double mode_stddev = 0.9;
  std::size_t samples_per_mode = 100;
  std::uint64_t seed = 7;

  void validate() const;
};

enum class Split { kTrain, kTest };

struct LabeledDataset {
  Matrix inputs;
  Labels labels;
  std::vector<int> mode_ids;  // diagnostics only; never fed to training
  Split split = Split::kTrain;

  std::size_t size() const { return labels.size(); }
  /// 1 + the largest label (0 when empty).
  std::size_t class_count() const;
};

struct MixtureData {
  LabeledDataset train;
  LabeledDataset test;
};

/// Class centers are scaled basis vectors under a seeded random rotation, so
/// every pair sits exactly class_separation apart. Mode offsets use a seeded
/// orthonormal frame per class, putting same-class modes exactly
/// mode_separation apart. Each (class, mode) cell is split 80/20.
MixtureData generate_mixture(const MixtureSpec& spec);

/// Random orthonormal rows (count × dim) by Gram–Schmidt on Gaussian draws.
Matrix random_orthonormal_rows(std::size_t count, std::size_t dim, RandomStream& stream);

// Dataset CSV: header f0,...,f{D-1},label[,mode]. Values use the shortest
// round-trip decimal form, so write → read is exact.
void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& data,
                       bool include_mode = true);
LabeledDataset read_dataset_csv(const std::filesystem::path& path);

/// Generic feature table. `label_column` is a header name or a 0-based column
/// index; a file without a header row takes its label from the named index
/// (or the last column when the name is "label"). Modes are set to 0.
LabeledDataset load_feature_csv(const std::filesystem::path& path,
                                const std::string& label_column = "label");

}  // namespace fsc
