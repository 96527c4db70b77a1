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

#include "fsc/train.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "fsc/error.hpp"

namespace fsc {

HeadVariant parse_head_variant(const std::string& raw) {
  std::string name = raw;
  std::replace(name.begin(), name.end(), '_', '-');
  if (name == "fsc") return HeadVariant::kFsc;
  if (name == "softmax") return HeadVariant::kSoftmax;
  if (name == "center-loss") return HeadVariant::kCenterLoss;
  if (name == "trainable-subcenter") return HeadVariant::kTrainableSubcenter;
  throw ContractError("unknown head variant '" + raw + "'");
}

std::string to_string(HeadVariant variant) {
  switch (variant) {
    case HeadVariant::kFsc: return "fsc";
    case HeadVariant::kSoftmax: return "softmax";
    case HeadVariant::kCenterLoss: return "center-loss";
    case HeadVariant::kTrainableSubcenter: return "trainable-subcenter";
  }
  return "unknown";
}

void TrainConfig::validate() const {
  require(s >= 1, "s must be >= 1");
  require(sigma2 >= 0.0, "sigma2 must be >= 0");
  require(beta >= 0.0, "beta must be >= 0");
  require(lr0 >= 0.0 && momentum >= 0.0 && weight_decay >= 0.0, "rates must be >= 0");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(hidden_width >= 1 && feature_dim >= 1, "backbone widths must be >= 1");
  require(center_alpha >= 0.0 && center_alpha <= 1.0, "center_alpha must lie in [0, 1]");
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
  return {{"s", c.s},
          {"sigma2", c.sigma2},
          {"beta", c.beta},
          {"lr0", c.lr0},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"head_variant", to_string(c.head_variant)},
          {"assignment_rule", to_string(c.assignment_rule)},
          {"normalize_features", c.normalize_features},
          {"hidden_width", c.hidden_width},
          {"hidden_layers", c.hidden_layers},
          {"feature_dim", c.feature_dim},
          {"center_alpha", c.center_alpha}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  try {
    if (j.contains("s")) c.s = j.at("s").get<std::size_t>();
    if (j.contains("sigma2")) c.sigma2 = j.at("sigma2").get<double>();
    if (j.contains("beta")) c.beta = j.at("beta").get<double>();
    if (j.contains("lr0")) c.lr0 = j.at("lr0").get<double>();
    if (j.contains("momentum")) c.momentum = j.at("momentum").get<double>();
    if (j.contains("weight_decay")) c.weight_decay = j.at("weight_decay").get<double>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("head_variant"))
      c.head_variant = parse_head_variant(j.at("head_variant").get<std::string>());
    if (j.contains("assignment_rule"))
      c.assignment_rule = parse_assignment_rule(j.at("assignment_rule").get<std::string>());
    if (j.contains("normalize_features"))
      c.normalize_features = j.at("normalize_features").get<bool>();
    if (j.contains("hidden_width")) c.hidden_width = j.at("hidden_width").get<std::size_t>();
    if (j.contains("hidden_layers")) c.hidden_layers = j.at("hidden_layers").get<std::size_t>();
    if (j.contains("feature_dim")) c.feature_dim = j.at("feature_dim").get<std::size_t>();
    if (j.contains("center_alpha")) c.center_alpha = j.at("center_alpha").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("invalid train config: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// ClassifierHead

ClassifierHead::ClassifierHead(HeadVariant variant, SubCenterBank bank, double beta,
                               AssignmentRule rule, double center_alpha)
    : variant_(variant), bank_(std::move(bank)), beta_(beta), rule_(rule),
      center_alpha_(center_alpha) {
  require(beta_ >= 0.0, "head beta must be >= 0");
  if (variant_ == HeadVariant::kFsc)
    require(bank_.frozen(), "the fixed sub-center head needs a frozen bank");
  if (variant_ == HeadVariant::kSoftmax || variant_ == HeadVariant::kCenterLoss)
    require(bank_.subcenters_per_class() == 1, "softmax-style heads use one center per class");
  if (variant_ == HeadVariant::kCenterLoss)
    class_centers_ = Matrix(bank_.classes(), bank_.dim());
}

SubCenterBank make_free_bank(std::size_t c, std::size_t s, std::size_t d, std::uint64_t seed) {
  RandomStream stream = RandomStream(seed).child(3);
  Matrix w = init_centers(c * s, d, stream);
  Matrix mu(c, d);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < s; ++j)
      for (std::size_t k = 0; k < d; ++k) mu(i, k) += w(i * s + j, k) / static_cast<double>(s);
  return SubCenterBank(std::move(mu), std::move(w), s, 0.0, seed, false);
}

ClassifierHead ClassifierHead::create(const TrainConfig& config, std::size_t classes,
                                      std::uint64_t seed) {
  const std::size_t d = config.feature_dim;
  switch (config.head_variant) {
    case HeadVariant::kFsc:
      return ClassifierHead(HeadVariant::kFsc, make_bank(classes, config.s, d, config.sigma2, seed),
                            config.beta, config.assignment_rule);
    case HeadVariant::kTrainableSubcenter:
      return ClassifierHead(HeadVariant::kTrainableSubcenter,
                            make_free_bank(classes, config.s, d, seed), config.beta,
                            config.assignment_rule);
    case HeadVariant::kSoftmax:
      return ClassifierHead(HeadVariant::kSoftmax,
                            make_bank(classes, 1, d, 0.0, seed).trainable_copy(), 0.0,
                            config.assignment_rule);
    case HeadVariant::kCenterLoss:
      return ClassifierHead(HeadVariant::kCenterLoss,
                            make_bank(classes, 1, d, 0.0, seed).trainable_copy(), config.beta,
                            config.assignment_rule, config.center_alpha);
  }
  throw ContractError("unhandled head variant");
}

HeadOutput ClassifierHead::output(const FeatureBatch& batch) const {
  return forward(bank_, batch, rule_);
}

HeadStep ClassifierHead::step(const FeatureBatch& batch) const {
  if (variant_ != HeadVariant::kCenterLoss)
    return evaluate_head(bank_, batch, variant_ == HeadVariant::kSoftmax ? 0.0 : beta_, rule_,
                         trainable());

  HeadStep step = evaluate_head(bank_, batch, 0.0, rule_, true);
  double penalty = 0.0;
  for (std::size_t i = 0; i < batch.x.rows(); ++i) {
    auto center = class_centers_.row(static_cast<std::size_t>(batch.y[i]));
    penalty += squared_distance(batch.x.row(i), center);
    for (std::size_t k = 0; k < batch.x.cols(); ++k)
      step.feature_grad(i, k) += beta_ * (batch.x(i, k) - center[k]);
  }
  step.loss.beta = beta_;
  step.loss.compactness = 0.5 * penalty;
  step.loss.total = step.loss.cross_entropy + beta_ * step.loss.compactness;
  return step;
}

void ClassifierHead::update_centers(const FeatureBatch& batch) {
  if (variant_ != HeadVariant::kCenterLoss) return;
  // Δc_j = Σ_{i: y_i = j} (c_j − x_i) / (1 + n_j);  c_j ← c_j − α Δc_j
  const std::size_t d = class_centers_.cols();
  Matrix delta(class_centers_.rows(), d);
  std::vector<double> counts(class_centers_.rows(), 0.0);
  for (std::size_t i = 0; i < batch.x.rows(); ++i) {
    const auto c = static_cast<std::size_t>(batch.y[i]);
    counts[c] += 1.0;
    for (std::size_t k = 0; k < d; ++k) delta(c, k) += class_centers_(c, k) - batch.x(i, k);
  }
  for (std::size_t c = 0; c < class_centers_.rows(); ++c)
    for (std::size_t k = 0; k < d; ++k)
      class_centers_(c, k) -= center_alpha_ * delta(c, k) / (1.0 + counts[c]);
}

// ---------------------------------------------------------------------------
// Training loop

Matrix extract_features(const MlpBackbone& net, const Matrix& inputs, bool normalize) {
  Matrix raw = net.infer(inputs);
  return normalize ? l2_normalize_rows(raw) : raw;
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::size_t epoch, std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  RandomStream stream(derive_seed(seed, 1000 + epoch));
  for (std::size_t i = n; i-- > 1;) {
    const auto j = static_cast<std::size_t>(stream.next_uniform() * static_cast<double>(i + 1));
    std::swap(order[i], order[std::min(j, i)]);
  }
  return order;
}

std::size_t batches_per_epoch(std::size_t samples, std::size_t batch_size) {
  return (samples + batch_size - 1) / batch_size;
}

namespace {

std::vector<std::span<double>> collect_parameters(MlpBackbone& net, ClassifierHead& head) {
  auto params = net.parameters();
  if (head.trainable()) params.emplace_back(head.bank().mutable_weights().values());
  return params;
}

}  // namespace

std::vector<LossRecord> train_epoch(MlpBackbone& net, ClassifierHead& head,
                                    const LabeledDataset& data, const TrainConfig& config,
                                    OptimizerState& state, std::size_t epoch) {
  require(data.size() >= 1, "train_epoch: empty dataset");
  require(data.inputs.cols() == net.input_dim(),
          "train_epoch: dataset has " + std::to_string(data.inputs.cols()) +
              " input columns, backbone expects " + std::to_string(net.input_dim()));
  require(net.output_dim() == head.bank().dim(), "train_epoch: backbone output width " +
                                                     std::to_string(net.output_dim()) +
                                                     " does not match head dimension");

  const auto order = epoch_order(config.seed, epoch, data.size());
  const std::size_t batches = batches_per_epoch(data.size(), config.batch_size);
  const std::size_t in_dim = data.inputs.cols();
  std::vector<LossRecord> records;
  records.reserve(batches);

  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t begin = b * config.batch_size;
    const std::size_t end = std::min(begin + config.batch_size, data.size());
    Matrix inputs(end - begin, in_dim);
    Labels labels(end - begin);
    for (std::size_t r = begin; r < end; ++r) {
      const std::size_t src = order[r];
      std::copy_n(data.inputs.row(src).begin(), in_dim, inputs.row(r - begin).begin());
      labels[r - begin] = data.labels[src];
    }

    const Matrix raw = net.forward(inputs);
    FeatureBatch batch{config.normalize_features ? l2_normalize_rows(raw) : raw,
                       std::move(labels)};
    HeadStep hs = head.step(batch);
    const Matrix feature_grad = config.normalize_features
                                    ? l2_normalize_backward(raw, hs.feature_grad)
                                    : hs.feature_grad;
    const MlpGradients grads = net.backward(feature_grad);

    auto params = collect_parameters(net, head);
    auto grad_views = grads.views();
    if (head.trainable()) grad_views.emplace_back(hs.weight_grad.values());
    const double lr = sgd_step(state, params, grad_views);
    head.update_centers(batch);

    records.push_back({epoch, b, hs.loss, lr});
  }
  return records;
}

Model create_model(const TrainConfig& config, std::size_t input_dim, std::size_t classes) {
  config.validate();
  require(classes >= 1, "need at least one class");
  std::vector<std::size_t> widths{input_dim};
  for (std::size_t l = 0; l < config.hidden_layers; ++l) widths.push_back(config.hidden_width);
  widths.push_back(config.feature_dim);
  RandomStream net_stream = RandomStream(config.seed).child(10);
  return Model{MlpBackbone::create(widths, net_stream),
               ClassifierHead::create(config, classes, derive_seed(config.seed, 20)),
               config.normalize_features};
}

TrainResult train_model(const TrainConfig& config, const LabeledDataset& train,
                        std::size_t classes) {
  require(train.size() >= 1, "train_model: empty training set");
  TrainResult result{create_model(config, train.inputs.cols(), classes), {}};
  const std::size_t total =
      std::max<std::size_t>(1, config.epochs * batches_per_epoch(train.size(), config.batch_size));
  const auto params = collect_parameters(result.model.net, result.model.head);
  OptimizerState state =
      make_optimizer(params, config.lr0, config.momentum, config.weight_decay, total);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    auto records = train_epoch(result.model.net, result.model.head, train, config, state, epoch);
    result.losses.insert(result.losses.end(), records.begin(), records.end());
  }
  result.model.net.clear_cache();
  return result;
}

ModelView run_model(const Model& model, const LabeledDataset& data) {
  ModelView view;
  view.features = extract_features(model.net, data.inputs, model.normalize_features);
  view.output = model.head.output({view.features, data.labels});
  view.predictions = predict_classes(view.output);
  return view;
}

EvalReport evaluate_model(const Model& model, const LabeledDataset& data) {
  require(data.size() >= 1, "evaluate_model: empty dataset");
  const ModelView view = run_model(model, data);
  EvalReport report;
  report.top1 = top1_accuracy(view.predictions, data.labels);
  report.per_class_accuracy =
      per_class_accuracy(view.predictions, data.labels, model.head.bank().classes());
  std::vector<std::size_t> ks;
  for (std::size_t k : {1, 2, 4, 8})
    if (k < data.size()) ks.push_back(k);
  if (!ks.empty()) report.recall_at = recall_at_k(view.features, data.labels, ks);
  if (model.head.bank().subcenters_per_class() >= 2)
    report.dispersion = dispersion_stats(model.head.bank());
  report.within_subclass_variance =
      within_group_variance(view.features, data.labels, view.output.assignment);
  return report;
}

void write_loss_csv(std::ostream& out, const std::vector<LossRecord>& records) {
  out << "epoch,batch,cross_entropy,compactness,total,lr\n";
  for (const auto& r : records)
    out << r.epoch << ',' << r.batch << ',' << format_double(r.loss.cross_entropy) << ','
        << format_double(r.loss.compactness) << ',' << format_double(r.loss.total) << ','
        << format_double(r.lr) << '\n';
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const std::filesystem::path& stem, const Model& model) {
  const auto& head = model.head;
  const auto& bank = head.bank();
  nlohmann::ordered_json meta;
  meta["format"] = "fsc-checkpoint-1";
  meta["normalize_features"] = model.normalize_features;
  meta["layers"] = nlohmann::ordered_json::array();
  for (const auto& layer : model.net.layers())
    meta["layers"].push_back({{"in", layer.in_dim()},
                              {"out", layer.out_dim()},
                              {"activation", to_string(layer.activation)}});
  meta["head"] = {{"variant", to_string(head.variant())},
                  {"c", bank.classes()},
                  {"s", bank.subcenters_per_class()},
                  {"d", bank.dim()},
                  {"sigma2", bank.sigma2()},
                  {"seed", bank.seed()},
                  {"frozen", bank.frozen()},
                  {"beta", head.beta()},
                  {"assignment_rule", to_string(head.assignment_rule())},
                  {"content_hash", bank.content_hash()}};

  auto json_path = stem;
  json_path += ".json";
  std::ofstream json_out(json_path);
  if (!json_out) throw IoError("cannot write " + json_path.string());
  json_out << meta.dump(2) << '\n';

  auto bin_path = stem;
  bin_path += ".bin";
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot write " + bin_path.string());
  for (const auto& layer : model.net.layers()) {
    write_matrix_binary(bin, layer.weight);
    write_matrix_binary(bin, Matrix(1, layer.bias.size(), layer.bias));
  }
  write_matrix_binary(bin, bank.weights());
  write_matrix_binary(bin, bank.centers());
  write_matrix_binary(bin, head.class_centers());
  if (!bin) throw IoError("failed writing " + bin_path.string());
}

Model load_checkpoint(const std::filesystem::path& stem) {
  auto json_path = stem;
  json_path += ".json";
  std::ifstream json_in(json_path);
  if (!json_in) throw IoError("cannot open checkpoint " + json_path.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(json_in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed checkpoint metadata: " + std::string(e.what()));
  }

  auto bin_path = stem;
  bin_path += ".bin";
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("cannot open checkpoint " + bin_path.string());

  std::vector<DenseLayer> layers;
  for (const auto& l : meta.at("layers")) {
    DenseLayer layer;
    layer.weight = read_matrix_binary(bin);
    const Matrix bias = read_matrix_binary(bin);
    layer.bias = bias.data();
    layer.activation = parse_activation(l.at("activation").get<std::string>());
    if (layer.in_dim() != l.at("in").get<std::size_t>() ||
        layer.out_dim() != l.at("out").get<std::size_t>())
      throw IoError("checkpoint layer shape disagrees with its metadata");
    layers.push_back(std::move(layer));
  }
  const auto& h = meta.at("head");
  Matrix weights = read_matrix_binary(bin);
  Matrix centers = read_matrix_binary(bin);
  Matrix class_centers = read_matrix_binary(bin);
  SubCenterBank bank(std::move(centers), std::move(weights), h.at("s").get<std::size_t>(),
                     h.at("sigma2").get<double>(), h.at("seed").get<std::uint64_t>(),
                     h.at("frozen").get<bool>());
  if (bank.content_hash() != h.at("content_hash").get<std::string>())
    throw IoError("checkpoint head hash mismatch");

  ClassifierHead head(parse_head_variant(h.at("variant").get<std::string>()), std::move(bank),
                      h.at("beta").get<double>(),
                      parse_assignment_rule(h.at("assignment_rule").get<std::string>()));
  if (head.variant() == HeadVariant::kCenterLoss) head.set_class_centers(std::move(class_centers));
  return Model{MlpBackbone(std::move(layers)), std::move(head),
               meta.value("normalize_features", false)};
}

}  // namespace fsc
