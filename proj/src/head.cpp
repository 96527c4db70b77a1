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

#include "fsc/head.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "fsc/error.hpp"

namespace fsc {

AssignmentRule parse_assignment_rule(const std::string& name) {
  if (name == "argmax_logit" || name == "argmax-logit") return AssignmentRule::kArgmaxLogit;
  if (name == "nearest_euclidean" || name == "nearest-euclidean")
    return AssignmentRule::kNearestEuclidean;
  throw ContractError("unknown assignment rule '" + name + "'");
}

std::string to_string(AssignmentRule rule) {
  return rule == AssignmentRule::kArgmaxLogit ? "argmax_logit" : "nearest_euclidean";
}

SubCenterBank::SubCenterBank(Matrix centers, Matrix weights, std::size_t subcenters_per_class,
                             double sigma2, std::uint64_t seed, bool frozen)
    : centers_(std::move(centers)),
      weights_(std::move(weights)),
      s_(subcenters_per_class),
      sigma2_(sigma2),
      seed_(seed),
      frozen_(frozen) {
  require(centers_.rows() >= 1 && centers_.cols() >= 1, "bank needs c >= 1 and d >= 1");
  require(s_ >= 1, "bank needs s >= 1");
  require(sigma2_ >= 0.0, "bank sigma2 must be >= 0");
  require(weights_.rows() == centers_.rows() * s_ && weights_.cols() == centers_.cols(),
          "bank weights " + weights_.shape_string() + " inconsistent with centers " +
              centers_.shape_string() + " and s=" + std::to_string(s_));
}

Matrix& SubCenterBank::mutable_weights() {
  require(!frozen_, "sub-center bank is frozen; its weights cannot be modified");
  return weights_;
}

void SubCenterBank::set_weights(Matrix weights) {
  require(!frozen_, "sub-center bank is frozen; its weights cannot be modified");
  require(weights.rows() == weights_.rows() && weights.cols() == weights_.cols(),
          "set_weights: expected " + weights_.shape_string() + ", got " +
              weights.shape_string());
  weights_ = std::move(weights);
}

SubCenterBank SubCenterBank::trainable_copy() const {
  return SubCenterBank(centers_, weights_, s_, sigma2_, seed_, false);
}

double kaiming_uniform_bound(std::size_t fan_in) {
  require(fan_in >= 1, "kaiming_uniform_bound: fan_in must be >= 1");
  // gain √2 (ReLU) times √(3 / fan_in)
  return std::sqrt(6.0 / static_cast<double>(fan_in));
}

Matrix init_centers(std::size_t c, std::size_t d, RandomStream& stream) {
  require(c >= 1 && d >= 1, "init_centers: c and d must be >= 1");
  const double bound = kaiming_uniform_bound(d);
  return Matrix(c, d, sample_uniform(stream, -bound, bound, c * d));
}

SubCenterBank sample_subcenters(const Matrix& mu, std::size_t s, double sigma2,
                                RandomStream& stream) {
  require(s >= 1, "sample_subcenters: s must be >= 1");
  require(sigma2 >= 0.0, "sample_subcenters: negative sigma2 " + format_double(sigma2));
  const std::size_t c = mu.rows();
  const std::size_t d = mu.cols();
  const auto noise = sample_normal(stream, 0.0, sigma2, c * s * d);
  Matrix w(c * s, d);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < s; ++j)
      for (std::size_t k = 0; k < d; ++k) {
        const std::size_t row = i * s + j;
        w(row, k) = mu(i, k) + noise[row * d + k];
      }
  return SubCenterBank(mu, std::move(w), s, sigma2, stream.seed(), true);
}

SubCenterBank make_bank(std::size_t c, std::size_t s, std::size_t d, double sigma2,
                        std::uint64_t seed) {
  RandomStream root(seed);
  auto center_stream = root.child(1);
  auto sub_stream = root.child(2);
  Matrix mu = init_centers(c, d, center_stream);
  auto bank = sample_subcenters(mu, s, sigma2, sub_stream);
  return SubCenterBank(bank.centers(), bank.weights(), s, sigma2, seed, true);
}

void validate_batch(const SubCenterBank& bank, const FeatureBatch& batch) {
  require(batch.x.cols() == bank.dim(), "feature batch " + batch.x.shape_string() +
                                            " does not match head dimension " +
                                            std::to_string(bank.dim()));
  require(batch.x.all_finite(), "feature batch contains non-finite values");
  require(batch.y.empty() || batch.y.size() == batch.x.rows(),
          "label count " + std::to_string(batch.y.size()) + " does not match " +
              std::to_string(batch.x.rows()) + " feature rows");
  for (int label : batch.y)
    require(label >= 0 && static_cast<std::size_t>(label) < bank.classes(),
            "label " + std::to_string(label) + " outside [0, " +
                std::to_string(bank.classes()) + ")");
}

namespace {

std::vector<std::size_t> assign(const SubCenterBank& bank, const FeatureBatch& batch,
                                const Matrix& logits, AssignmentRule rule) {
  const std::size_t s = bank.subcenters_per_class();
  std::vector<std::size_t> out(batch.y.size());
  for (std::size_t i = 0; i < batch.y.size(); ++i) {
    const std::size_t base = static_cast<std::size_t>(batch.y[i]) * s;
    std::size_t best = 0;
    if (rule == AssignmentRule::kArgmaxLogit) {
      for (std::size_t m = 1; m < s; ++m)
        if (logits(i, base + m) > logits(i, base + best)) best = m;
    } else {
      double best_dist = squared_distance(batch.x.row(i), bank.weights().row(base));
      for (std::size_t m = 1; m < s; ++m) {
        const double dist = squared_distance(batch.x.row(i), bank.weights().row(base + m));
        if (dist < best_dist) {
          best_dist = dist;
          best = m;
        }
      }
    }
    out[i] = best;
  }
  return out;
}

}  // namespace

HeadOutput forward(const SubCenterBank& bank, const FeatureBatch& batch, AssignmentRule rule) {
  validate_batch(bank, batch);
  const std::size_t n = batch.x.rows();
  const std::size_t c = bank.classes();
  const std::size_t s = bank.subcenters_per_class();

  HeadOutput out;
  out.logits = matmul_bt(batch.x, bank.weights());
  out.subclass_probs = Matrix(n, c * s);
  out.class_probs = Matrix(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    const double lse = logsumexp(out.logits.row(i));
    for (std::size_t j = 0; j < c; ++j) {
      double class_sum = 0.0;
      for (std::size_t m = 0; m < s; ++m) {
        const double p = std::exp(out.logits(i, j * s + m) - lse);
        out.subclass_probs(i, j * s + m) = p;
        class_sum += p;
      }
      out.class_probs(i, j) = class_sum;
    }
  }
  out.assignment = assign(bank, batch, out.logits, rule);
  return out;
}

std::vector<int> predict_classes(const HeadOutput& out) {
  std::vector<int> pred(out.class_probs.rows());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    auto row = out.class_probs.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
      if (row[j] > row[best]) best = j;
    pred[i] = static_cast<int>(best);
  }
  return pred;
}

double compactness_loss(const SubCenterBank& bank, const FeatureBatch& batch,
                        std::span<const std::size_t> assignment) {
  validate_batch(bank, batch);
  require(assignment.size() == batch.x.rows() && batch.y.size() == batch.x.rows(),
          "compactness_loss: assignment length " + std::to_string(assignment.size()) +
              " does not match batch size " + std::to_string(batch.x.rows()));
  double total = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    require(assignment[i] < bank.subcenters_per_class(),
            "compactness_loss: assignment index out of range");
    total += squared_distance(batch.x.row(i),
                              bank.subcenter(static_cast<std::size_t>(batch.y[i]), assignment[i]));
  }
  return 0.5 * total;
}

HeadStep evaluate_head(const SubCenterBank& bank, const FeatureBatch& batch, double beta,
                       AssignmentRule rule, bool want_weight_grad) {
  require(beta >= 0.0, "beta must be >= 0, got " + format_double(beta));
  validate_batch(bank, batch);
  require(batch.y.size() == batch.x.rows() && !batch.y.empty(),
          "loss needs a non-empty labelled batch");

  const std::size_t n = batch.x.rows();
  const std::size_t d = bank.dim();
  const std::size_t s = bank.subcenters_per_class();
  const Matrix& w = bank.weights();

  HeadStep step;
  step.output = forward(bank, batch, rule);
  const Matrix& logits = step.output.logits;

  // Logit-space gradient of the cross-entropy, already divided by n:
  // (P̃_{i,(j,m)} − [j = y_i]·q_{i,m}) / n.
  Matrix dlogits(n, logits.cols());
  double ce_sum = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = logits.row(i);
    const std::size_t base = static_cast<std::size_t>(batch.y[i]) * s;
    const double lse_all = logsumexp(row);
    const double lse_true = logsumexp(row.subspan(base, s));
    ce_sum += lse_all - lse_true;
    for (std::size_t col = 0; col < row.size(); ++col)
      dlogits(i, col) = step.output.subclass_probs(i, col) * inv_n;
    for (std::size_t m = 0; m < s; ++m)
      dlogits(i, base + m) -= std::exp(row[base + m] - lse_true) * inv_n;
  }

  step.loss.beta = beta;
  step.loss.cross_entropy = ce_sum * inv_n;
  step.loss.compactness = compactness_loss(bank, batch, step.output.assignment);
  step.loss.total = step.loss.cross_entropy + beta * step.loss.compactness;

  step.feature_grad = matmul(dlogits, w);
  for (std::size_t i = 0; i < n; ++i) {
    auto target = bank.subcenter(static_cast<std::size_t>(batch.y[i]), step.output.assignment[i]);
    for (std::size_t k = 0; k < d; ++k)
      step.feature_grad(i, k) += beta * (batch.x(i, k) - target[k]);
  }

  if (want_weight_grad) {
    step.weight_grad = matmul_at(dlogits, batch.x);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t row = static_cast<std::size_t>(batch.y[i]) * s + step.output.assignment[i];
      for (std::size_t k = 0; k < d; ++k)
        step.weight_grad(row, k) -= beta * (batch.x(i, k) - w(row, k));
    }
  }
  return step;
}

LossBreakdown fsc_loss(const SubCenterBank& bank, const FeatureBatch& batch, double beta,
                       AssignmentRule rule) {
  return evaluate_head(bank, batch, beta, rule, false).loss;
}

Matrix loss_grad_features(const SubCenterBank& bank, const FeatureBatch& batch, double beta,
                          AssignmentRule rule) {
  return evaluate_head(bank, batch, beta, rule, false).feature_grad;
}

DispersionStats dispersion_stats(const SubCenterBank& bank) {
  const std::size_t s = bank.subcenters_per_class();
  require(s >= 2, "dispersion_stats: need s >= 2 for sub-center pairs");
  double dist_sum = 0.0;
  double cos_sum = 0.0;
  for (std::size_t i = 0; i < bank.classes(); ++i) {
    double class_dist = 0.0;
    double class_cos = 0.0;
    for (std::size_t a = 0; a < s; ++a) {
      for (std::size_t b = a + 1; b < s; ++b) {
        auto u = bank.subcenter(i, a);
        auto v = bank.subcenter(i, b);
        class_dist += squared_distance(u, v);
        const double denom = std::sqrt(dot(u, u) * dot(v, v));
        class_cos += denom > 0.0 ? dot(u, v) / denom : (squared_distance(u, v) == 0.0 ? 1.0 : 0.0);
      }
    }
    const double pairs = static_cast<double>(s * (s - 1) / 2);
    dist_sum += class_dist / pairs;
    cos_sum += class_cos / pairs;
  }
  const double c = static_cast<double>(bank.classes());
  return {dist_sum / c, cos_sum / c};
}

Matrix l2_normalize_rows(const Matrix& x) {
  Matrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double norm = std::sqrt(dot(x.row(i), x.row(i)));
    if (norm == 0.0) continue;
    for (auto& v : out.row(i)) v /= norm;
  }
  return out;
}

Matrix l2_normalize_backward(const Matrix& x, const Matrix& grad_normalized) {
  // d(x/‖x‖) = (g − (g·u)u) / ‖x‖ with u = x/‖x‖
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double norm = std::sqrt(dot(x.row(i), x.row(i)));
    if (norm == 0.0) continue;
    const double proj = dot(grad_normalized.row(i), x.row(i)) / norm;
    for (std::size_t k = 0; k < x.cols(); ++k)
      out(i, k) = (grad_normalized(i, k) - proj * x(i, k) / norm) / norm;
  }
  return out;
}

void save_bank(const std::filesystem::path& stem, const SubCenterBank& bank) {
  nlohmann::ordered_json header;
  header["c"] = bank.classes();
  header["s"] = bank.subcenters_per_class();
  header["d"] = bank.dim();
  header["sigma2"] = bank.sigma2();
  header["seed"] = bank.seed();
  header["frozen"] = bank.frozen();
  header["content_hash"] = bank.content_hash();

  auto json_path = stem;
  json_path += ".json";
  std::ofstream json_out(json_path);
  if (!json_out) throw IoError("cannot write " + json_path.string());
  json_out << header.dump(2) << '\n';

  auto bin_path = stem;
  bin_path += ".bin";
  std::ofstream bin_out(bin_path, std::ios::binary);
  if (!bin_out) throw IoError("cannot write " + bin_path.string());
  write_matrix_binary(bin_out, bank.weights());
  write_matrix_binary(bin_out, bank.centers());
}

SubCenterBank load_bank(const std::filesystem::path& stem) {
  auto json_path = stem;
  json_path += ".json";
  std::ifstream json_in(json_path);
  if (!json_in) throw IoError("cannot open " + json_path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(json_in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed bank header " + json_path.string() + ": " + e.what());
  }

  auto bin_path = stem;
  bin_path += ".bin";
  std::ifstream bin_in(bin_path, std::ios::binary);
  if (!bin_in) throw IoError("cannot open " + bin_path.string());
  Matrix weights = read_matrix_binary(bin_in);
  Matrix centers = read_matrix_binary(bin_in);

  SubCenterBank bank(std::move(centers), std::move(weights), header.at("s").get<std::size_t>(),
                     header.at("sigma2").get<double>(), header.at("seed").get<std::uint64_t>(),
                     header.value("frozen", true));
  if (bank.content_hash() != header.at("content_hash").get<std::string>())
    throw IoError("bank content hash mismatch for " + stem.string());
  return bank;
}

}  // namespace fsc
