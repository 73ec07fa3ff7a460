// Copyright 2026 The emcomm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <map>
#include <string>

#include "emcomm/core/errors.hpp"
#include "emcomm/nn/parameter_store.hpp"

namespace emcomm::nn {

enum class OptimizerRule { kSgd, kAdam };

struct OptimizerState {
  OptimizerRule rule = OptimizerRule::kAdam;
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::map<std::string, Array> first_moment;
  std::map<std::string, Array> second_moment;

  static OptimizerState sgd(double lr) {
    OptimizerState s;
    s.rule = OptimizerRule::kSgd;
    s.learning_rate = lr;
    return s;
  }

  static OptimizerState adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    OptimizerState s;
    s.rule = OptimizerRule::kAdam;
    s.learning_rate = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = eps;
    return s;
  }
};

// Applies one update in place. Parameters without a gradient entry are left
// alone; the store version increments on every call.
inline void optimizer_step(ParameterStore& params, const Gradients& grads, OptimizerState& state) {
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) throw UsageError("gradient for unknown parameter: " + name);
    if (params.get(name).shape() != g.shape()) {
      throw UsageError("gradient shape " + to_string(g.shape()) + " does not match parameter " + name);
    }
  }
  ++state.step;
  if (state.rule == OptimizerRule::kSgd) {
    for (const auto& [name, g] : grads) {
      Array& w = params.get(name);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= state.learning_rate * g[i];
    }
  } else {
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (const auto& [name, g] : grads) {
      Array& w = params.get(name);
      auto [m_it, m_new] = state.first_moment.try_emplace(name, Array::zeros_like(w));
      auto [v_it, v_new] = state.second_moment.try_emplace(name, Array::zeros_like(w));
      Array& m = m_it->second;
      Array& v = v_it->second;
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
        v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        w[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
      }
    }
  }
  params.bump_version();
}

}  // namespace emcomm::nn
