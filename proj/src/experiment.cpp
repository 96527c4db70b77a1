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

#include "fsc/experiment.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "fsc/error.hpp"

namespace fsc {

namespace fs = std::filesystem;

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  train.validate();
  if (!train_csv) mixture.validate();
  require(!test_csv || train_csv, "a test CSV needs a train CSV");
  require(!seeds.empty(), "seed list must not be empty");
  require(!run_label.empty(), "run label must not be empty");
}

nlohmann::ordered_json to_json(const MixtureSpec& s) {
  return {{"classes", s.classes},
          {"modes_per_class", s.modes_per_class},
          {"input_dim", s.input_dim},
          {"mode_separation", s.mode_separation},
          {"class_separation", s.class_separation},
          {"mode_stddev", s.mode_stddev},
          {"samples_per_mode", s.samples_per_mode},
          {"seed", s.seed}};
}

MixtureSpec mixture_spec_from_json(const nlohmann::json& j, MixtureSpec s) {
  try {
    if (j.contains("classes")) s.classes = j.at("classes").get<std::size_t>();
    if (j.contains("modes_per_class")) s.modes_per_class = j.at("modes_per_class").get<std::size_t>();
    if (j.contains("input_dim")) s.input_dim = j.at("input_dim").get<std::size_t>();
    if (j.contains("mode_separation")) s.mode_separation = j.at("mode_separation").get<double>();
    if (j.contains("class_separation")) s.class_separation = j.at("class_separation").get<double>();
    if (j.contains("mode_stddev")) s.mode_stddev = j.at("mode_stddev").get<double>();
    if (j.contains("samples_per_mode"))
      s.samples_per_mode = j.at("samples_per_mode").get<std::size_t>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("invalid mixture spec: ") + e.what());
  }
  return s;
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["train"] = to_json(c.train);
  if (c.train_csv) {
    nlohmann::ordered_json data;
    data["train_csv"] = c.train_csv->string();
    if (c.test_csv) data["test_csv"] = c.test_csv->string();
    data["label_column"] = c.label_column;
    j["data"] = data;
  } else {
    j["mixture"] = to_json(c.mixture);
  }
  j["out_dir"] = c.out_dir.string();
  j["run_label"] = c.run_label;
  j["seeds"] = c.seeds;
  return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  require(j.is_object(), "experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    require(!(j.contains("mixture") && j.contains("data")),
            "experiment config gives both a mixture and a CSV data source");
    if (j.contains("mixture")) c.mixture = mixture_spec_from_json(j.at("mixture"));
    if (j.contains("data")) {
      const auto& data = j.at("data");
      c.train_csv = data.at("train_csv").get<std::string>();
      if (data.contains("test_csv")) c.test_csv = data.at("test_csv").get<std::string>();
      if (data.contains("label_column")) c.label_column = data.at("label_column").get<std::string>();
    }
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("run_label")) c.run_label = j.at("run_label").get<std::string>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("invalid experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ContractError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return experiment_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Data

ExperimentData load_experiment_data(const ExperimentConfig& config) {
  ExperimentData out;
  if (!config.train_csv) {
    auto mix = generate_mixture(config.mixture);
    out.train = std::move(mix.train);
    out.test = std::move(mix.test);
  } else {
    LabeledDataset all = load_feature_csv(*config.train_csv, config.label_column);
    if (config.test_csv) {
      out.train = std::move(all);
      out.test = load_feature_csv(*config.test_csv, config.label_column);
      out.test.split = Split::kTest;
    } else {
      require(all.size() >= 2, "a CSV without a test file needs at least 2 rows to split");
      const std::size_t dim = all.inputs.cols();
      std::vector<std::size_t> train_rows;
      std::vector<std::size_t> test_rows;
      for (std::size_t i = 0; i < all.size(); ++i) (i % 5 == 4 ? test_rows : train_rows).push_back(i);
      if (test_rows.empty()) {
        test_rows.push_back(train_rows.back());
        train_rows.pop_back();
      }
      auto take = [&](const std::vector<std::size_t>& rows, Split split) {
        LabeledDataset d;
        d.split = split;
        d.inputs = Matrix(rows.size(), dim);
        for (std::size_t r = 0; r < rows.size(); ++r) {
          for (std::size_t k = 0; k < dim; ++k) d.inputs(r, k) = all.inputs(rows[r], k);
          d.labels.push_back(all.labels[rows[r]]);
          d.mode_ids.push_back(all.mode_ids[rows[r]]);
        }
        return d;
      };
      out.train = take(train_rows, Split::kTrain);
      out.test = take(test_rows, Split::kTest);
    }
    require(out.train.inputs.cols() == out.test.inputs.cols(),
            "train and test CSVs have different feature counts");
  }
  out.classes = std::max(out.train.class_count(), out.test.class_count());
  return out;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

std::string seed_dir(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

}  // namespace

RunSummary train_run(const ExperimentConfig& config, const ExperimentData& data,
                     const fs::path& run_dir) {
  config.validate();
  require(data.train.size() >= 1 && data.test.size() >= 1, "train and test splits must be non-empty");
  ensure_dir(run_dir);

  ExperimentConfig resolved = config;
  resolved.out_dir = run_dir.parent_path();
  resolved.run_label = run_dir.filename().string();
  write_json(run_dir / "config.json", to_json(resolved));

  TrainResult result = train_model(config.train, data.train, data.classes);
  {
    std::ofstream loss(run_dir / "loss.csv");
    if (!loss) throw IoError("cannot write " + (run_dir / "loss.csv").string());
    write_loss_csv(loss, result.losses);
    if (!loss) throw IoError("failed writing loss.csv");
  }
  save_checkpoint(run_dir / "checkpoint", result.model);
  save_bank(run_dir / "bank", result.model.head.bank());

  RunSummary summary{run_dir, evaluate_model(result.model, data.test),
                     result.model.head.bank().content_hash()};
  auto eval = to_json(summary.report);
  eval["bank_hash"] = summary.bank_hash;
  eval["train_top1"] = evaluate_model(result.model, data.train).top1;
  write_json(run_dir / "eval.json", eval);
  return summary;
}

RunSummary cmd_train(const ExperimentConfig& config) {
  config.validate();
  const ExperimentData data = load_experiment_data(config);
  return train_run(config, data, config.out_dir / config.run_label);
}

std::vector<AblationCell> default_ablation_grid(double beta) {
  return {{"softmax", HeadVariant::kSoftmax, 0.0},
          {"subcenter_trainable", HeadVariant::kTrainableSubcenter, 0.0},
          {"subcenter_trainable+lscc", HeadVariant::kTrainableSubcenter, beta},
          {"subcenter_fixed", HeadVariant::kFsc, 0.0},
          {"fsc", HeadVariant::kFsc, beta}};
}

namespace {

CellResult run_cell(const ExperimentConfig& base, const ExperimentData& data,
                    const std::string& label, const TrainConfig& train, const fs::path& cell_dir) {
  CellResult cell;
  cell.label = label;
  for (std::uint64_t seed : base.seeds) {
    ExperimentConfig run = base;
    run.train = train;
    run.train.seed = seed;
    RunSummary summary = train_run(run, data, cell_dir / seed_dir(seed));
    cell.top1.push_back(summary.report.top1);
    cell.reports.push_back(std::move(summary.report));
  }
  cell.mean = mean_of(cell.top1);
  cell.stddev = stddev_of(cell.top1);
  return cell;
}

std::string join_values(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ";" : "") + format_double(v[i]);
  return out;
}

}  // namespace

AggregateSummary cmd_ablate(const ExperimentConfig& config, const std::vector<AblationCell>& grid) {
  config.validate();
  require(!grid.empty(), "ablation grid must not be empty");
  std::set<std::string> labels;
  for (const auto& cell : grid)
    require(labels.insert(cell.label).second, "duplicate ablation cell label '" + cell.label + "'");

  const ExperimentData data = load_experiment_data(config);
  const fs::path root = config.out_dir / config.run_label;
  ensure_dir(root);

  AggregateSummary summary;
  for (const auto& cell : grid) {
    TrainConfig train = config.train;
    train.head_variant = cell.variant;
    train.beta = cell.beta;
    summary.cells.push_back(run_cell(config, data, cell.label, train, root / cell.label));
  }

  summary.csv_path = root / "ablation.csv";
  std::ofstream out(summary.csv_path);
  if (!out) throw IoError("cannot write " + summary.csv_path.string());
  out << "cell,head,beta,mean_top1,std_top1,seeds,top1_per_seed\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& r = summary.cells[i];
    out << grid[i].label << ',' << to_string(grid[i].variant) << ',' << format_double(grid[i].beta)
        << ',' << format_double(r.mean) << ',' << format_double(r.stddev) << ',' << r.top1.size()
        << ',' << join_values(r.top1) << '\n';
  }
  if (!out) throw IoError("failed writing " + summary.csv_path.string());
  return summary;
}

SweepParameter parse_sweep_parameter(const std::string& name) {
  if (name == "sigma2") return SweepParameter::kSigma2;
  if (name == "beta") return SweepParameter::kBeta;
  if (name == "s") return SweepParameter::kS;
  throw ContractError("unknown sweep parameter '" + name + "' (expected sigma2, beta or s)");
}

std::string to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::kSigma2: return "sigma2";
    case SweepParameter::kBeta: return "beta";
    case SweepParameter::kS: return "s";
  }
  return "unknown";
}

AggregateSummary cmd_sweep(const ExperimentConfig& config, SweepParameter parameter,
                           const std::vector<double>& values) {
  config.validate();
  require(!values.empty(), "sweep needs at least one value");
  std::vector<TrainConfig> cells;
  for (double v : values) {
    TrainConfig train = config.train;
    switch (parameter) {
      case SweepParameter::kSigma2: train.sigma2 = v; break;
      case SweepParameter::kBeta: train.beta = v; break;
      case SweepParameter::kS:
        require(v >= 1.0 && v == std::floor(v), "sweep over s needs positive integers");
        train.s = static_cast<std::size_t>(v);
        break;
    }
    train.validate();
    cells.push_back(train);
  }

  const ExperimentData data = load_experiment_data(config);
  const fs::path root = config.out_dir / config.run_label;
  ensure_dir(root);

  AggregateSummary summary;
  const std::string name = to_string(parameter);
  for (std::size_t i = 0; i < values.size(); ++i)
    summary.cells.push_back(run_cell(config, data, name + "=" + format_double(values[i]), cells[i],
                                     root / (name + "_" + format_double(values[i]))));

  summary.csv_path = root / ("sweep_" + name + ".csv");
  std::ofstream out(summary.csv_path);
  if (!out) throw IoError("cannot write " + summary.csv_path.string());
  out << "value,mean_top1,std_top1,mean_sq_dispersion,mean_cosine\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& r = summary.cells[i];
    out << format_double(values[i]) << ',' << format_double(r.mean) << ','
        << format_double(r.stddev) << ',';
    std::vector<double> dist;
    std::vector<double> cosine;
    for (const auto& rep : r.reports)
      if (rep.dispersion) {
        dist.push_back(rep.dispersion->mean_pairwise_sq_dist);
        cosine.push_back(rep.dispersion->mean_pairwise_cosine);
      }
    if (!dist.empty()) out << format_double(mean_of(dist)) << ',' << format_double(mean_of(cosine));
    else out << ',';
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + summary.csv_path.string());
  return summary;
}

std::size_t cmd_export_embeddings(const fs::path& checkpoint, const ExperimentConfig& config,
                                  const fs::path& output) {
  const fs::path stem = fs::is_directory(checkpoint) ? checkpoint / "checkpoint" : checkpoint;
  const Model model = load_checkpoint(stem);
  const ExperimentData data = load_experiment_data(config);
  require(data.test.inputs.cols() == model.net.input_dim(),
          "dataset has " + std::to_string(data.test.inputs.cols()) +
              " features but the checkpoint expects " + std::to_string(model.net.input_dim()));
  require(data.classes <= model.head.bank().classes(),
          "dataset has more classes than the checkpoint head");
  const ModelView view = run_model(model, data.test);
  if (output.has_parent_path()) ensure_dir(output.parent_path());
  embedding_export(view.features, data.test.labels, view.output.assignment, output);
  return data.test.size();
}

void cmd_gen_data(const MixtureSpec& spec, const fs::path& out_dir) {
  const auto data = generate_mixture(spec);
  ensure_dir(out_dir);
  write_dataset_csv(out_dir / "train.csv", data.train);
  write_dataset_csv(out_dir / "test.csv", data.test);
  write_json(out_dir / "mixture.json", to_json(spec));
}

}  // namespace fsc
