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

// Random head/backbone instances shared by the unit and acceptance tests.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "fsc/backbone.hpp"
#include "fsc/head.hpp"
#include "oracles.hpp"

namespace fsc::fixtures {

struct HeadInstance {
  SubCenterBank bank;
  FeatureBatch batch;
  double beta = 0.0;
};

/// c ≤ 5, s ≤ 4, d ≤ 16, n ≤ 8, β ∈ {0, 1e-4, 1e-1}. Sub-centers are unit
/// normal so the softmax is far from uniform.
inline HeadInstance random_head_instance(std::uint64_t seed) {
  constexpr std::array<double, 3> kBetas{0.0, 1e-4, 1e-1};
  RandomStream stream(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(stream.next_u64() % (hi - lo + 1));
  };
  const std::size_t c = pick(1, 5), s = pick(1, 4), d = pick(1, 16), n = pick(1, 8);
  const double beta = kBetas[pick(0, 2)];

  Matrix w(c * s, d, sample_normal(stream, 0.0, 1.0, c * s * d));
  Matrix mu(c, d);
  SubCenterBank bank(std::move(mu), std::move(w), s, 1.0, seed, true);
  FeatureBatch batch{Matrix(n, d, sample_normal(stream, 0.0, 1.0, n * d)), Labels(n)};
  for (auto& y : batch.y) y = static_cast<int>(pick(0, c - 1));
  return {std::move(bank), std::move(batch), beta};
}

/// Max relative error of loss_grad_features against central differences.
inline double head_gradient_error(HeadInstance inst) {
  const Matrix analytic = loss_grad_features(inst.bank, inst.batch, inst.beta);
  const auto numeric = oracle::central_difference(inst.batch.x.values(), [&] {
    return fsc_loss(inst.bank, inst.batch, inst.beta).total;
  });
  return oracle::max_relative_error(analytic.values(), numeric);
}

/// Max relative error of every backbone parameter gradient (and the input
/// gradient) for loss = fsc_loss(head, mlp(input)).
inline double composite_gradient_error(std::uint64_t seed) {
  HeadInstance inst = random_head_instance(seed);
  RandomStream stream(seed ^ 0x5bd1e995ULL);
  const std::size_t d = inst.bank.dim();
  const std::size_t n = inst.batch.y.size();
  const std::size_t in = 3 + static_cast<std::size_t>(stream.next_u64() % 4);
  const std::array<std::size_t, 3> widths{in, 6, d};
  MlpBackbone net = MlpBackbone::create(widths, stream);
  // Non-zero biases so ReLU kinks are away from the evaluation point.
  for (auto& layer : net.layers())
    for (auto& b : layer.bias) b = 0.1 * (stream.next_uniform() - 0.5);
  Matrix input(n, in, sample_normal(stream, 0.0, 1.0, n * in));

  auto loss = [&] {
    FeatureBatch batch{net.infer(input), inst.batch.y};
    return fsc_loss(inst.bank, batch, inst.beta).total;
  };
  FeatureBatch batch{net.forward(input), inst.batch.y};
  const MlpGradients grads = net.backward(loss_grad_features(inst.bank, batch, inst.beta));

  double worst = 0.0;
  auto params = net.parameters();
  const auto views = grads.views();
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto numeric = oracle::central_difference(params[p], loss);
    worst = std::max(worst, oracle::max_relative_error(views[p], numeric));
  }
  const auto numeric_input = oracle::central_difference(input.values(), loss);
  worst = std::max(worst, oracle::max_relative_error(grads.input.values(), numeric_input));
  return worst;
}

}  // namespace fsc::fixtures
