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

// Reproducible experiment runs: single training runs, the ablation grid,
// one-parameter sweeps, embedding export and dataset generation. Every run
// directory carries the fully resolved config needed to repeat it.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsc/datagen.hpp"
#include "fsc/metrics.hpp"
#include "fsc/train.hpp"

namespace fsc {

struct ExperimentConfig {
  TrainConfig train;
  /// Synthetic data source, used unless train_csv is set.
  MixtureSpec mixture;
  std::optional<std::filesystem::path> train_csv;
  std::optional<std::filesystem::path> test_csv;
  std::string label_column = "label";
  std::filesystem::path out_dir = "runs";
  std::string run_label = "run";
  /// Seeds for aggregate commands (ablate, sweep).
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  void validate() const;
};

nlohmann::ordered_json to_json(const ExperimentConfig& config);
/// Reads {"train": {...}, "mixture": {...} | "data": {...}, "out_dir", "run_label", "seeds"}.
/// Giving both "mixture" and "data" is a contract error.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const MixtureSpec& spec);
MixtureSpec mixture_spec_from_json(const nlohmann::json& j, MixtureSpec base = {});

struct ExperimentData {
  LabeledDataset train;
  LabeledDataset test;
  std::size_t classes = 0;
};

/// Mixture or CSV data. A CSV source without a test file holds out every
/// fifth row.
ExperimentData load_experiment_data(const ExperimentConfig& config);

struct RunSummary {
  std::filesystem::path run_dir;
  EvalReport report;
  std::string bank_hash;
};

/// Trains one model into out_dir/run_label: checkpoint.{json,bin}, loss.csv,
/// eval.json, config.json and bank.{json,bin}.
RunSummary cmd_train(const ExperimentConfig& config);
/// Same as cmd_train with data already loaded.
RunSummary train_run(const ExperimentConfig& config, const ExperimentData& data,
                     const std::filesystem::path& run_dir);

struct AblationCell {
  std::string label;
  HeadVariant variant = HeadVariant::kFsc;
  double beta = 0.0;
};

/// softmax, subcenter_trainable, subcenter_trainable+lscc, subcenter_fixed, fsc.
std::vector<AblationCell> default_ablation_grid(double beta);

struct CellResult {
  std::string label;
  std::vector<double> top1;  // one entry per seed, in seed order
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<EvalReport> reports;
};

struct AggregateSummary {
  std::filesystem::path csv_path;
  std::vector<CellResult> cells;
};

/// Trains every cell on every seed; writes ablation.csv in the run directory.
AggregateSummary cmd_ablate(const ExperimentConfig& config, const std::vector<AblationCell>& grid);

enum class SweepParameter { kSigma2, kBeta, kS };
SweepParameter parse_sweep_parameter(const std::string& name);
std::string to_string(SweepParameter p);

/// One cell per value, shared seeds; writes sweep_<param>.csv with
/// value,mean_top1,std_top1,mean_sq_dispersion,mean_cosine.
AggregateSummary cmd_sweep(const ExperimentConfig& config, SweepParameter parameter,
                           const std::vector<double>& values);

/// Loads `checkpoint` (a run directory or a checkpoint stem) and writes the
/// PCA embedding of the test split to `output`. Returns the row count.
std::size_t cmd_export_embeddings(const std::filesystem::path& checkpoint,
                                  const ExperimentConfig& config,
                                  const std::filesystem::path& output);

/// Writes train.csv and test.csv for the configured mixture.
void cmd_gen_data(const MixtureSpec& spec, const std::filesystem::path& out_dir);

double mean_of(const std::vector<double>& v);
/// Sample standard deviation (n − 1); 0 for fewer than two values.
double stddev_of(const std::vector<double>& v);

}  // namespace fsc
