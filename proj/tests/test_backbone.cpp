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
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "fsc/backbone.hpp"
#include "fsc/error.hpp"
#include "fsc/optimizer.hpp"
#include "oracles.hpp"

namespace fsc {
namespace {

TEST(Mlp, ShapesAndInitialization) {
  RandomStream stream(1);
  const std::array<std::size_t, 4> widths{8, 16, 16, 4};
  MlpBackbone net = MlpBackbone::create(widths, stream);
  ASSERT_EQ(net.layers().size(), 3u);
  EXPECT_EQ(net.input_dim(), 8u);
  EXPECT_EQ(net.output_dim(), 4u);
  EXPECT_EQ(net.parameter_count(), 8u * 16 + 16 + 16 * 16 + 16 + 16 * 4 + 4);
  EXPECT_EQ(net.layers()[0].activation, Activation::kRelu);
  EXPECT_EQ(net.layers()[2].activation, Activation::kIdentity);
  for (const auto& layer : net.layers()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.in_dim()));
    for (double w : layer.weight.values()) EXPECT_LT(std::abs(w), bound);
    for (double b : layer.bias) EXPECT_EQ(b, 0.0);
  }
  EXPECT_EQ(net.forward(Matrix(5, 8)).rows(), 5u);
  EXPECT_THROW(net.forward(Matrix(5, 7)), ContractError);
}

TEST(Mlp, ReluZeroesNegativePreActivations) {
  DenseLayer layer{Matrix{{1.0, -1.0}}, {0.0, 0.0}, Activation::kRelu};
  MlpBackbone net({layer});
  const Matrix out = net.forward(Matrix{{2.0}});
  EXPECT_EQ(out, (Matrix{{2.0, 0.0}}));
  const MlpGradients g = net.backward(Matrix{{1.0, 1.0}});
  EXPECT_EQ(g.input(0, 0), 1.0);
  EXPECT_EQ(g.weight[0], (Matrix{{2.0, 0.0}}));
  EXPECT_EQ(g.bias[0], (std::vector<double>{1.0, 0.0}));
}

TEST(Mlp, BackwardRequiresForward) {
  RandomStream stream(2);
  const std::array<std::size_t, 2> widths{3, 2};
  MlpBackbone net = MlpBackbone::create(widths, stream);
  EXPECT_THROW(net.backward(Matrix(1, 2)), ContractError);
  net.forward(Matrix(1, 3));
  EXPECT_TRUE(net.has_cache());
  EXPECT_THROW(net.backward(Matrix(2, 2)), ContractError);
  net.clear_cache();
  EXPECT_FALSE(net.has_cache());
}

TEST(Mlp, InferMatchesForward) {
  RandomStream stream(3);
  const std::array<std::size_t, 3> widths{5, 7, 3};
  MlpBackbone net = MlpBackbone::create(widths, stream);
  const Matrix x(4, 5, sample_normal(stream, 0.0, 1.0, 20));
  EXPECT_EQ(net.infer(x), net.forward(x));
}

TEST(Mlp, CompositeGradientMatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 25; ++seed)
    EXPECT_LE(fixtures::composite_gradient_error(seed), 1e-4) << "seed " << seed;
}

TEST(CosineLr, KnownPoints) {
  EXPECT_DOUBLE_EQ(cosine_lr(0.01, 0, 100), 0.01);
  EXPECT_NEAR(cosine_lr(0.01, 50, 100), 0.005, 1e-17);
  EXPECT_NEAR(cosine_lr(0.01, 100, 100), 0.0, 1e-18);
  EXPECT_NEAR(cosine_lr(0.01, 25, 100), 0.005 * (1.0 + std::numbers::sqrt2 / 2.0), 1e-17);
  EXPECT_THROW(cosine_lr(0.01, 101, 100), ContractError);
  EXPECT_THROW(cosine_lr(0.01, 0, 0), ContractError);
}

TEST(CosineLr, MonotoneNonIncreasing) {
  double prev = cosine_lr(0.1, 0, 37);
  for (std::size_t t = 1; t <= 37; ++t) {
    const double lr = cosine_lr(0.1, t, 37);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
}

TEST(Sgd, TwoStepsByHand) {
  // p=1, grad=1, lr=1, momentum=0.9, wd=0: v=1 → p=0; v=1.9 → p=−1.9.
  std::vector<double> p{1.0}, v{0.0};
  const std::vector<double> g{1.0};
  sgd_update(p, g, v, 1.0, 0.9, 0.0);
  EXPECT_DOUBLE_EQ(p[0], 0.0);
  sgd_update(p, g, v, 1.0, 0.9, 0.0);
  EXPECT_DOUBLE_EQ(v[0], 1.9);
  EXPECT_DOUBLE_EQ(p[0], -1.9);
  sgd_update(p, g, v, 1.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(p[0], -2.9);
}

TEST(Sgd, WeightDecayFoldsIntoGradient) {
  std::vector<double> p{2.0}, v{0.0};
  const std::vector<double> g{0.0};
  sgd_update(p, g, v, 0.5, 0.0, 0.1);
  EXPECT_DOUBLE_EQ(p[0], 2.0 - 0.5 * 0.2);

  std::vector<double> short_grad;
  EXPECT_THROW(sgd_update(p, short_grad, v, 0.5, 0.0, 0.0), ContractError);
}

TEST(Sgd, StepFollowsScheduleAndStopsAtTotal) {
  std::vector<double> w{1.0, 1.0};
  const std::vector<double> g{1.0, -1.0};
  const std::vector<std::span<double>> params{w};
  const std::vector<std::span<const double>> grads{g};
  OptimizerState state = make_optimizer(params, 0.1, 0.0, 0.0, 2);
  EXPECT_DOUBLE_EQ(sgd_step(state, params, grads), 0.1);
  EXPECT_DOUBLE_EQ(w[0], 0.9);
  EXPECT_NEAR(sgd_step(state, params, grads), 0.05, 1e-17);
  EXPECT_EQ(state.current_step, 2u);
  EXPECT_THROW(sgd_step(state, params, grads), ContractError);
}

}  // namespace
}  // namespace fsc
