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
#include <vector>

namespace fsc {

/// 0.5 · lr0 · (1 + cos(π · step / total)).
double cosine_lr(double lr0, std::size_t step, std::size_t total);

/// SGD with momentum and L2 weight decay folded into the gradient:
///   g ← grad + wd·p;  v ← momentum·v + g;  p ← p − lr·v
void sgd_update(std::span<double> param, std::span<const double> grad, std::span<double> velocity,
                double lr, double momentum, double weight_decay);

struct OptimizerState {
  std::vector<std::vector<double>> velocity;
  double lr0 = 0.01;
  double momentum = 0.9;
  double weight_decay = 4e-5;
  std::size_t total_steps = 1;
  std::size_t current_step = 0;
};

/// Zero velocities shaped like `params`.
OptimizerState make_optimizer(std::span<const std::span<double>> params, double lr0,
                              double momentum, double weight_decay, std::size_t total_steps);

/// One update of every parameter at the scheduled rate for current_step,
/// then advances the step. Returns the rate used.
double sgd_step(OptimizerState& state, std::span<const std::span<double>> params,
                std::span<const std::span<const double>> grads);

}  // namespace fsc
