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

// fsc: train / ablate / sweep / export-embeddings / gen-data.
// Exit codes: 0 success, 2 config or contract error, 3 I/O error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fsc/error.hpp"
#include "fsc/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> label;
  std::optional<std::string> head;
  std::optional<std::size_t> s;
  std::optional<double> sigma2;
  std::optional<double> beta;
  std::optional<std::size_t> epochs;
  std::optional<std::string> data_csv;
  std::optional<std::string> test_csv;
  std::vector<std::uint64_t> seeds;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON experiment config");
  cmd->add_option("--seed", f.seed, "training seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--label", f.label, "run label (subdirectory of --out)");
  cmd->add_option("--head", f.head, "fsc | softmax | center-loss | trainable-subcenter");
  cmd->add_option("--s", f.s, "sub-centers per class");
  cmd->add_option("--sigma2", f.sigma2, "sub-center sampling variance");
  cmd->add_option("--beta", f.beta, "compactness weight");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  cmd->add_option("--data-csv", f.data_csv, "feature CSV instead of the synthetic mixture");
  cmd->add_option("--test-csv", f.test_csv, "held-out feature CSV");
  cmd->add_option("--seeds", f.seeds, "seeds for aggregate commands")->delimiter(',');
}

fsc::ExperimentConfig resolve(const CommonFlags& f) {
  fsc::ExperimentConfig c =
      f.config_path.empty() ? fsc::ExperimentConfig{} : fsc::load_experiment_config(f.config_path);
  if (f.seed) c.train.seed = *f.seed;
  if (f.out) c.out_dir = *f.out;
  if (f.label) c.run_label = *f.label;
  if (f.head) c.train.head_variant = fsc::parse_head_variant(*f.head);
  if (f.s) c.train.s = *f.s;
  if (f.sigma2) c.train.sigma2 = *f.sigma2;
  if (f.beta) c.train.beta = *f.beta;
  if (f.epochs) c.train.epochs = *f.epochs;
  if (f.data_csv) c.train_csv = *f.data_csv;
  if (f.test_csv) c.test_csv = *f.test_csv;
  if (!f.seeds.empty()) c.seeds = f.seeds;
  c.validate();
  return c;
}

void print_report(const fsc::RunSummary& run) {
  std::cout << "run_dir: " << run.run_dir.string() << "\n"
            << "top1: " << run.report.top1 << "\n";
  for (const auto& [k, v] : run.report.recall_at) std::cout << "recall@" << k << ": " << v << "\n";
  std::cout << "bank_hash: " << run.bank_hash << "\n";
}

void print_cells(const fsc::AggregateSummary& summary) {
  for (const auto& cell : summary.cells)
    std::cout << cell.label << ": " << cell.mean << " +- " << cell.stddev << "\n";
  std::cout << "summary: " << summary.csv_path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixed sub-center classification experiments"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  auto* train = app.add_subcommand("train", "train one model and evaluate it");
  add_common(train, train_flags);

  CommonFlags ablate_flags;
  auto* ablate = app.add_subcommand("ablate", "run the ablation grid over seeds");
  add_common(ablate, ablate_flags);

  CommonFlags sweep_flags;
  std::string sweep_param;
  std::vector<double> sweep_values;
  auto* sweep = app.add_subcommand("sweep", "sweep one hyperparameter over seeds");
  add_common(sweep, sweep_flags);
  sweep->add_option("--param", sweep_param, "sigma2 | beta | s")->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")->delimiter(',');

  CommonFlags export_flags;
  std::string checkpoint;
  std::string export_out = "embeddings.csv";
  auto* export_cmd =
      app.add_subcommand("export-embeddings", "PCA embedding of the test split for a checkpoint");
  add_common(export_cmd, export_flags);
  export_cmd->add_option("--checkpoint", checkpoint, "run directory or checkpoint stem")
      ->required();
  export_cmd->add_option("--output", export_out, "CSV path");

  CommonFlags gen_flags;
  auto* gen = app.add_subcommand("gen-data", "write the synthetic mixture as train/test CSV");
  add_common(gen, gen_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) {
      print_report(fsc::cmd_train(resolve(train_flags)));
    } else if (*ablate) {
      const auto config = resolve(ablate_flags);
      print_cells(fsc::cmd_ablate(config, fsc::default_ablation_grid(config.train.beta)));
    } else if (*sweep) {
      const auto config = resolve(sweep_flags);
      print_cells(fsc::cmd_sweep(config, fsc::parse_sweep_parameter(sweep_param), sweep_values));
    } else if (*export_cmd) {
      const auto rows =
          fsc::cmd_export_embeddings(checkpoint, resolve(export_flags), export_out);
      std::cout << "wrote " << rows << " rows to " << export_out << "\n";
    } else if (*gen) {
      const auto config = resolve(gen_flags);
      const auto dir = config.out_dir / config.run_label;
      fsc::cmd_gen_data(config.mixture, dir);
      std::cout << "wrote " << (dir / "train.csv").string() << " and "
                << (dir / "test.csv").string() << "\n";
    }
  } catch (const fsc::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fsc::ContractError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
