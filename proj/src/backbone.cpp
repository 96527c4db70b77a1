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

#include "fsc/backbone.hpp"

#include <cmath>

#include "fsc/error.hpp"
#include "fsc/head.hpp"

namespace fsc {

std::string to_string(Activation act) { return act == Activation::kRelu ? "relu" : "identity"; }

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw ContractError("unknown activation '" + name + "'");
}

std::vector<std::span<const double>> MlpGradients::views() const {
  std::vector<std::span<const double>> out;
  for (std::size_t l = 0; l < weight.size(); ++l) {
    out.emplace_back(weight[l].values());
    out.emplace_back(bias[l]);
  }
  return out;
}

MlpBackbone::MlpBackbone(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  require(!layers_.empty(), "MLP needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    require(layers_[l].bias.size() == layers_[l].out_dim(),
            "layer " + std::to_string(l) + " bias length does not match its output width");
    if (l > 0)
      require(layers_[l].in_dim() == layers_[l - 1].out_dim(),
              "layer " + std::to_string(l) + " input width " +
                  std::to_string(layers_[l].in_dim()) + " does not chain with previous output " +
                  std::to_string(layers_[l - 1].out_dim()));
  }
}

MlpBackbone MlpBackbone::create(std::span<const std::size_t> widths, RandomStream& stream) {
  require(widths.size() >= 2, "MLP needs at least input and output widths");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    require(in >= 1 && out >= 1, "MLP widths must be >= 1");
    const double bound = kaiming_uniform_bound(in);
    DenseLayer layer;
    layer.weight = Matrix(in, out, sample_uniform(stream, -bound, bound, in * out));
    layer.bias.assign(out, 0.0);
    layer.activation = (l + 2 == widths.size()) ? Activation::kIdentity : Activation::kRelu;
    layers.push_back(std::move(layer));
  }
  return MlpBackbone(std::move(layers));
}

std::size_t MlpBackbone::parameter_count() const {
  std::size_t total = 0;
  for (const auto& layer : layers_) total += layer.weight.size() + layer.bias.size();
  return total;
}

Matrix MlpBackbone::run(const Matrix& input, std::vector<Matrix>* inputs,
                        std::vector<Matrix>* pre) const {
  require(!layers_.empty(), "MLP has no layers");
  require(input.cols() == input_dim(), "MLP input has " + std::to_string(input.cols()) +
                                           " columns, expected " + std::to_string(input_dim()));
  Matrix h = input;
  for (const auto& layer : layers_) {
    if (inputs) inputs->push_back(h);
    Matrix z = matmul(h, layer.weight);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto row = z.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += layer.bias[j];
    }
    if (pre) pre->push_back(z);
    if (layer.activation == Activation::kRelu)
      for (auto& v : z.values()) v = v > 0.0 ? v : 0.0;
    h = std::move(z);
  }
  return h;
}

Matrix MlpBackbone::forward(const Matrix& input) {
  clear_cache();
  return run(input, &cached_inputs_, &cached_pre_);
}

Matrix MlpBackbone::infer(const Matrix& input) const { return run(input, nullptr, nullptr); }

void MlpBackbone::clear_cache() {
  cached_inputs_.clear();
  cached_pre_.clear();
}

MlpGradients MlpBackbone::backward(const Matrix& grad_output) const {
  require(has_cache(), "mlp backward called without a cached forward pass");
  const Matrix& last_pre = cached_pre_.back();
  require(grad_output.rows() == last_pre.rows() && grad_output.cols() == last_pre.cols(),
          "mlp backward: gradient " + grad_output.shape_string() + " does not match output " +
              last_pre.shape_string());

  const std::size_t count = layers_.size();
  MlpGradients grads;
  grads.weight.resize(count);
  grads.bias.resize(count);

  Matrix g = grad_output;
  for (std::size_t l = count; l-- > 0;) {
    const auto& layer = layers_[l];
    if (layer.activation == Activation::kRelu) {
      const auto pre = cached_pre_[l].values();
      auto gv = g.values();
      for (std::size_t k = 0; k < gv.size(); ++k)
        if (!(pre[k] > 0.0)) gv[k] = 0.0;
    }
    grads.weight[l] = matmul_at(cached_inputs_[l], g);
    grads.bias[l].assign(layer.out_dim(), 0.0);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) grads.bias[l][j] += g(i, j);
    g = matmul_bt(g, layer.weight);
  }
  grads.input = std::move(g);
  return grads;
}

std::vector<std::span<double>> MlpBackbone::parameters() {
  std::vector<std::span<double>> out;
  for (auto& layer : layers_) {
    out.emplace_back(layer.weight.values());
    out.emplace_back(layer.bias);
  }
  return out;
}

}  // namespace fsc
