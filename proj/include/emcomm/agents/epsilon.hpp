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
#include <random>
#include <span>
#include <vector>

#include "emcomm/core/errors.hpp"
#include "emcomm/core/rng.hpp"

namespace emcomm::agents {

// Linear decay from `start` to `end` over `decay_episodes`, then flat.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  std::size_t decay_episodes = 1000;

  double at(std::size_t episode) const {
    if (decay_episodes == 0 || episode >= decay_episodes) return end;
    const double frac = static_cast<double>(episode) / static_cast<double>(decay_episodes);
    return std::clamp(start + (end - start) * frac, std::min(start, end), std::max(start, end));
  }
};

// Argmax with lowest-index tie-breaking over the legal actions (all actions
// when `legal` is empty).
inline std::size_t greedy_action(std::span<const double> q, const std::vector<bool>& legal = {}) {
  std::size_t best = q.size();
  for (std::size_t a = 0; a < q.size(); ++a) {
    if (!legal.empty() && !legal[a]) continue;
    if (best == q.size() || q[a] > q[best]) best = a;
  }
  if (best == q.size()) throw UsageError("no legal action");
  return best;
}

// With probability epsilon a uniformly random legal action, otherwise greedy.
inline std::size_t epsilon_greedy(std::span<const double> q, double epsilon, Rng& rng,
                                  const std::vector<bool>& legal = {}) {
  if (epsilon < 0.0 || epsilon > 1.0) throw UsageError("epsilon must lie in [0, 1]");
  if (q.empty()) throw UsageError("epsilon_greedy over an empty action set");
  if (epsilon > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng) < epsilon) {
    std::vector<std::size_t> options;
    for (std::size_t a = 0; a < q.size(); ++a)
      if (legal.empty() || legal[a]) options.push_back(a);
    if (options.empty()) throw UsageError("no legal action");
    return options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
  }
  return greedy_action(q, legal);
}

}  // namespace emcomm::agents
