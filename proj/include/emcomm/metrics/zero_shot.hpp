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
#include <cstdint>

#include "emcomm/agents/referential_agents.hpp"
#include "emcomm/core/errors.hpp"

namespace emcomm::metrics {

struct AccuracyEstimate {
  double accuracy = 0.0;
  double std_error = 0.0;
  std::size_t episodes = 0;
};

inline AccuracyEstimate accuracy_of(const std::vector<agents::ReferentialOutcome>& outcomes) {
  AccuracyEstimate a;
  a.episodes = outcomes.size();
  if (outcomes.empty()) return a;
  double hits = 0.0;
  for (const auto& o : outcomes) hits += o.success ? 1.0 : 0.0;
  a.accuracy = hits / static_cast<double>(outcomes.size());
  a.std_error = std::sqrt(a.accuracy * (1.0 - a.accuracy) / static_cast<double>(outcomes.size()));
  return a;
}

// Fails hard if any held-out object was ever shown during training.
inline void check_no_leak(const agents::ReferentialTrainer& trainer) {
  for (int idx : trainer.split().held_out()) {
    if (trainer.touched()[static_cast<std::size_t>(idx)]) {
      throw InconsistencyError("held-out object " + std::to_string(idx) + " leaked into training");
    }
  }
}

// Greedy accuracy on targets drawn from the held-out combinations.
inline AccuracyEstimate zero_shot_accuracy(const agents::ReferentialTrainer& trainer, std::size_t episodes,
                                           std::uint64_t seed) {
  check_no_leak(trainer);
  return accuracy_of(trainer.evaluate(env::SplitKind::kZeroShot, episodes, seed));
}

}  // namespace emcomm::metrics
