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

#include "fsc/optimizer.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fsc/error.hpp"

namespace fsc {

double cosine_lr(double lr0, std::size_t step, std::size_t total) {
  require(total >= 1, "cosine_lr: total steps must be >= 1");
  require(step <= total, "cosine_lr: step " + std::to_string(step) + " exceeds total " +
                             std::to_string(total));
  const double progress = static_cast<double>(step) / static_cast<double>(total);
  return 0.5 * lr0 * (1.0 + std::cos(std::numbers::pi * progress));
}

void sgd_update(std::span<double> param, std::span<const double> grad, std::span<double> velocity,
                double lr, double momentum, double weight_decay) {
  require(param.size() == grad.size() && param.size() == velocity.size(),
          "sgd_update: parameter, gradient and velocity sizes differ (" +
              std::to_string(param.size()) + ", " + std::to_string(grad.size()) + ", " +
              std::to_string(velocity.size()) + ")");
  for (std::size_t k = 0; k < param.size(); ++k) {
    const double g = grad[k] + weight_decay * param[k];
    velocity[k] = momentum * velocity[k] + g;
    param[k] -= lr * velocity[k];
  }
}

OptimizerState make_optimizer(std::span<const std::span<double>> params, double lr0,
                              double momentum, double weight_decay, std::size_t total_steps) {
  require(lr0 >= 0.0 && momentum >= 0.0 && weight_decay >= 0.0,
          "optimizer rates must be non-negative");
  require(total_steps >= 1, "optimizer needs total_steps >= 1");
  OptimizerState state;
  state.lr0 = lr0;
  state.momentum = momentum;
  state.weight_decay = weight_decay;
  state.total_steps = total_steps;
  for (auto p : params) state.velocity.emplace_back(p.size(), 0.0);
  return state;
}

double sgd_step(OptimizerState& state, std::span<const std::span<double>> params,
                std::span<const std::span<const double>> grads) {
  require(params.size() == grads.size() && params.size() == state.velocity.size(),
          "sgd_step: expected " + std::to_string(state.velocity.size()) +
              " parameter tensors, got " + std::to_string(params.size()) + " params and " +
              std::to_string(grads.size()) + " grads");
  require(state.current_step < state.total_steps, "sgd_step: schedule exhausted");
  const double lr = cosine_lr(state.lr0, state.current_step, state.total_steps);
  for (std::size_t t = 0; t < params.size(); ++t)
    sgd_update(params[t], grads[t], state.velocity[t], lr, state.momentum, state.weight_decay);
  ++state.current_step;
  return lr;
}

}  // namespace fsc
