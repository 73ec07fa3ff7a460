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

#include <algorithm>
#include <span>
#include <vector>

#include "emcomm/core/errors.hpp"
#include "emcomm/nn/ops.hpp"

namespace emcomm::agents {

// y = r for terminal transitions, r + gamma * max_a' Q(s', a'; frozen) otherwise.
inline double bellman_target(double reward, bool done, double gamma, std::span<const double> next_q) {
  if (gamma < 0.0 || gamma > 1.0) throw UsageError("gamma must lie in [0, 1]");
  if (done || gamma == 0.0) return reward;
  if (next_q.empty()) throw UsageError("bootstrapped target needs next-state values");
  return reward + gamma * *std::max_element(next_q.begin(), next_q.end());
}

// Mean of mask * (y - Q)^2 over the rows of a [rows,1] column of chosen-action
// values. Targets enter as constants, so gradients flow only through Q.
inline nn::Var dqn_loss(const nn::Var& chosen_q, std::span<const double> targets,
                        std::span<const double> mask = {}) {
  const std::size_t rows = chosen_q.value().rows();
  if (rows == 0 || targets.empty()) throw UsageError("dqn_loss on an empty batch");
  if (targets.size() != rows || (!mask.empty() && mask.size() != rows)) {
    throw UsageError("dqn_loss target/mask size does not match the batch");
  }
  nn::Tape& t = chosen_q.tape();
  nn::Var diff = nn::sub(chosen_q, t.constant(nn::Array({rows, 1}, std::vector<double>(targets.begin(), targets.end()))));
  nn::Var sq = nn::square(diff);
  double count = static_cast<double>(rows);
  if (!mask.empty()) {
    count = 0.0;
    for (double m : mask) count += m;
    if (count == 0.0) throw UsageError("dqn_loss with every row masked out");
    sq = nn::mul(sq, t.constant(nn::Array({rows, 1}, std::vector<double>(mask.begin(), mask.end()))));
  }
  return nn::scale(nn::sum(sq), 1.0 / count);
}

}  // namespace emcomm::agents
