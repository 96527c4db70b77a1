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
#include <span>
#include <string>
#include <vector>

#include "fsc/numerics.hpp"

namespace fsc {

enum class Activation { kRelu, kIdentity };

std::string to_string(Activation act);
Activation parse_activation(const std::string& name);

/// out = act(in · weight + bias); weight is in × out.
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
};

struct MlpGradients {
  std::vector<Matrix> weight;
  std::vector<std::vector<double>> bias;
  Matrix input;  // ∂L/∂input, handy for composing further layers

  /// Flat views in the same order as MlpBackbone::parameters().
  std::vector<std::span<const double>> views() const;
};

class MlpBackbone {
 public:
  MlpBackbone() = default;
  explicit MlpBackbone(std::vector<DenseLayer> layers);

  /// widths = {input, hidden..., output}. Hidden layers use ReLU, the last
  /// layer is linear. Weights are kaiming-uniform, biases zero.
  static MlpBackbone create(std::span<const std::size_t> widths, RandomStream& stream);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  std::size_t input_dim() const { return layers_.front().in_dim(); }
  std::size_t output_dim() const { return layers_.back().out_dim(); }
  std::size_t parameter_count() const;

  /// Forward pass that caches activations for backward().
  Matrix forward(const Matrix& input);
  /// Forward pass without touching the cache.
  Matrix infer(const Matrix& input) const;
  /// Reverse-mode gradients for the batch seen by the last forward().
  MlpGradients backward(const Matrix& grad_output) const;

  bool has_cache() const { return !cached_inputs_.empty(); }
  void clear_cache();

  std::vector<std::span<double>> parameters();

 private:
  Matrix run(const Matrix& input, std::vector<Matrix>* inputs, std::vector<Matrix>* pre) const;

  std::vector<DenseLayer> layers_;
  std::vector<Matrix> cached_inputs_;  // input to each layer
  std::vector<Matrix> cached_pre_;     // pre-activation of each layer
};

inline Matrix mlp_forward(MlpBackbone& net, const Matrix& input) { return net.forward(input); }
inline MlpGradients mlp_backward(const MlpBackbone& net, const Matrix& grad_output) {
  return net.backward(grad_output);
}

}  // namespace fsc
