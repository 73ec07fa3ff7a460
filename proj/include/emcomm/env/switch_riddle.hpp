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
#include <random>
#include <string>
#include <vector>

#include "emcomm/core/errors.hpp"
#include "emcomm/core/rng.hpp"
#include "emcomm/env/step_result.hpp"

namespace emcomm::env {

enum class SwitchAction : int { kNone = 0, kToggle = 1, kTell = 2 };
inline constexpr std::size_t kSwitchActionCount = 3;
// Observation layout: [in_room, bulb_on]; absent agents see zeros.
inline constexpr std::size_t kSwitchObservationWidth = 2;

inline int default_max_days(int n) { return std::max(1, 4 * n - 6); }

struct SwitchRiddleState {
  int n_agents = 0;
  bool bulb_on = false;
  std::vector<bool> visited;
  int active_agent = 0;
  int day = 1;
  int max_days = 1;
  bool done = false;
  Rng rng;
  // Forced active agent per day (index day-1); empty means random draws.
  std::vector<int> schedule;

  bool all_visited() const {
    for (bool v : visited)
      if (!v) return false;
    return true;
  }
};

// Prisoners and a light bulb. One uniformly drawn agent is in the room each
// day; it may toggle the bulb or announce that everyone has visited.
// visited[i] flips to true while agent i's day is being stepped.
inline SwitchRiddleState switch_reset(int n, int max_days, std::uint64_t seed) {
  if (n < 2) throw ConfigurationError("switch riddle needs at least 2 agents, got " + std::to_string(n));
  if (max_days < 1) throw ConfigurationError("max_days must be >= 1");
  SwitchRiddleState s;
  s.n_agents = n;
  s.visited.assign(static_cast<std::size_t>(n), false);
  s.max_days = max_days;
  s.rng.seed(seed);
  s.active_agent = std::uniform_int_distribution<int>(0, n - 1)(s.rng);
  return s;
}

// Reset with a fixed active-agent sequence, used for exact enumeration.
inline SwitchRiddleState switch_reset_scheduled(int n, int max_days, std::vector<int> schedule) {
  SwitchRiddleState s = switch_reset(n, max_days, 0);
  if (schedule.size() < static_cast<std::size_t>(max_days)) {
    throw ConfigurationError("schedule shorter than max_days");
  }
  for (int a : schedule)
    if (a < 0 || a >= n) throw ConfigurationError("schedule names an unknown agent");
  s.schedule = std::move(schedule);
  s.active_agent = s.schedule[0];
  return s;
}

inline std::vector<double> switch_observation(const SwitchRiddleState& s, int agent) {
  if (agent != s.active_agent || s.done) return {0.0, 0.0};
  return {1.0, s.bulb_on ? 1.0 : 0.0};
}

inline std::vector<std::vector<double>> switch_observations(const SwitchRiddleState& s) {
  std::vector<std::vector<double>> out;
  for (int m = 0; m < s.n_agents; ++m) out.push_back(switch_observation(s, m));
  return out;
}

// Steps the day for the agent in the room. Rewards: +1 to every agent for a
// correct Tell, -1 for a wrong one, 0 when the day cap runs out.
inline StepResult switch_step(SwitchRiddleState& s, int agent, SwitchAction action) {
  if (s.done) throw UsageError("switch riddle episode already finished");
  if (agent != s.active_agent) {
    throw UsageError("agent " + std::to_string(agent) + " is not in the room (active agent is " +
                     std::to_string(s.active_agent) + ")");
  }
  s.visited[static_cast<std::size_t>(agent)] = true;
  StepResult r;
  r.rewards.assign(static_cast<std::size_t>(s.n_agents), 0.0);
  r.info["day"] = s.day;
  if (action == SwitchAction::kTell) {
    const double reward = s.all_visited() ? 1.0 : -1.0;
    r.rewards.assign(r.rewards.size(), reward);
    s.done = true;
    r.info["tell"] = 1.0;
  } else {
    if (action == SwitchAction::kToggle) s.bulb_on = !s.bulb_on;
    if (s.day >= s.max_days) {
      s.done = true;
      r.info["timeout"] = 1.0;
    } else {
      ++s.day;
      s.active_agent = s.schedule.empty()
                           ? std::uniform_int_distribution<int>(0, s.n_agents - 1)(s.rng)
                           : s.schedule[static_cast<std::size_t>(s.day - 1)];
    }
  }
  r.done = s.done;
  r.observations = switch_observations(s);
  return r;
}

struct OracleEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t episodes = 0;
};

// Omniscient strategy: Tell on the first day everyone has been in the room.
// Monte Carlo over seeded episodes; n = 1 is allowed here (Tell on day 1).
inline OracleEstimate switch_oracle_return(int n, int max_days, std::size_t seed_count,
                                           std::uint64_t seed = 0) {
  if (n < 1 || max_days < 1 || seed_count == 0) throw ConfigurationError("bad oracle arguments");
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  double sum = 0.0, sum_sq = 0.0;
  std::vector<bool> seen(static_cast<std::size_t>(n));
  for (std::size_t e = 0; e < seed_count; ++e) {
    std::fill(seen.begin(), seen.end(), false);
    int count = 0;
    double ret = 0.0;
    for (int d = 0; d < max_days; ++d) {
      const int a = pick(rng);
      if (!seen[static_cast<std::size_t>(a)]) {
        seen[static_cast<std::size_t>(a)] = true;
        ++count;
      }
      if (count == n) {
        ret = 1.0;
        break;
      }
    }
    sum += ret;
    sum_sq += ret * ret;
  }
  const double k = static_cast<double>(seed_count);
  const double mean = sum / k;
  const double var = std::max(0.0, sum_sq / k - mean * mean);
  return {mean, std::sqrt(var / k), seed_count};
}

// Exact oracle return: P(all n agents drawn within max_days uniform draws),
// by inclusion-exclusion.
inline double switch_oracle_exact(int n, int max_days) {
  if (n < 1 || max_days < 1) throw ConfigurationError("bad oracle arguments");
  double p = 0.0;
  double binom = 1.0;
  for (int k = 0; k <= n; ++k) {
    const double term = binom * std::pow(static_cast<double>(n - k) / n, max_days);
    p += (k % 2 == 0 ? term : -term);
    binom = binom * (n - k) / (k + 1);
  }
  return p;
}

}  // namespace emcomm::env
