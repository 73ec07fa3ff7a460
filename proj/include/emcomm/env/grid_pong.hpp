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
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "emcomm/core/errors.hpp"
#include "emcomm/core/rng.hpp"
#include "emcomm/env/step_result.hpp"

namespace emcomm::env {

enum class PongAction : int { kUp = 0, kDown = 1, kStay = 2 };
inline constexpr std::size_t kPongActionCount = 3;

enum class CommChannelMode { kNone, kPrivatePerTeam, kPublic, kAsymmetricPublicOneTeam };

inline std::string to_string(CommChannelMode m) {
  switch (m) {
    case CommChannelMode::kNone: return "none";
    case CommChannelMode::kPrivatePerTeam: return "private_per_team";
    case CommChannelMode::kPublic: return "public";
    case CommChannelMode::kAsymmetricPublicOneTeam: return "asymmetric_public_one_team";
  }
  return "none";
}

inline CommChannelMode comm_mode_from_string(const std::string& s) {
  for (auto m : {CommChannelMode::kNone, CommChannelMode::kPrivatePerTeam, CommChannelMode::kPublic,
                 CommChannelMode::kAsymmetricPublicOneTeam}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigurationError("unknown comm mode: " + s);
}

// Point-end rewards: the scoring side gets rho, the conceding side -1.
struct RewardScheme {
  double rho = 1.0;

  RewardScheme() = default;
  explicit RewardScheme(double r) : rho(r) {
    if (r < -1.0 || r > 1.0) throw ConfigurationError("rho must lie in [-1, 1]");
  }
};

struct PongConfig {
  int players = 2;
  double rho = 1.0;
  CommChannelMode comm_mode = CommChannelMode::kNone;
  int width = 16;
  int height = 16;
  int paddle_length = 3;
  int max_steps = 300;
  int points_per_episode = 1;
  int alphabet = 4;
  // Contact off the paddle centre adds spin: vy += offset, clamped to this.
  int max_vertical_speed = 2;
};

struct Paddle {
  int team = 0;
  int column = 0;
  int top = 0;
  int length = 3;
  int band_lo = 0;  // inclusive
  int band_hi = 0;  // exclusive

  bool covers(int row) const { return row >= top && row < top + length; }
  int center() const { return top + length / 2; }
};

struct GridPongState {
  PongConfig config;
  int ball_x = 0, ball_y = 0;
  int vel_x = 1, vel_y = 1;
  std::vector<Paddle> paddles;
  std::vector<double> score;  // per team
  int bounces = 0;            // in the current point
  int step = 0;
  int points_played = 0;
  bool done = false;
  std::vector<int> last_messages;  // per agent, -1 = none
  Rng rng;

  int team_of(std::size_t agent) const { return paddles[agent].team; }
};

namespace detail {

inline void serve(GridPongState& s) {
  s.ball_x = s.config.width / 2;
  s.ball_y = s.config.height / 2;
  std::uniform_int_distribution<int> coin(0, 1);
  s.vel_x = coin(s.rng) ? 1 : -1;
  s.vel_y = coin(s.rng) ? 1 : -1;
  s.bounces = 0;
}

}  // namespace detail

inline void validate(const PongConfig& c) {
  if (c.players != 2 && c.players != 4) throw ConfigurationError("pong supports 2 or 4 players");
  RewardScheme check(c.rho);
  if (c.width < 6 || c.height < 3) throw ConfigurationError("pong grid too small");
  const int band = c.players == 4 ? c.height / 2 : c.height;
  if (c.paddle_length < 1 || c.paddle_length > band) {
    throw ConfigurationError("paddle length does not fit the paddle band");
  }
  if (c.max_steps < 1 || c.points_per_episode < 1) throw ConfigurationError("bad pong episode limits");
  if (c.alphabet < 2 && c.comm_mode != CommChannelMode::kNone) throw ConfigurationError("alphabet must be >= 2");
  if (c.max_vertical_speed < 1) throw ConfigurationError("max_vertical_speed must be >= 1");
}

// Whether `sender`'s message reaches `receiver` under the channel mode.
inline bool audible(const GridPongState& s, std::size_t sender, std::size_t receiver) {
  const bool same_team = s.team_of(sender) == s.team_of(receiver);
  switch (s.config.comm_mode) {
    case CommChannelMode::kNone: return false;
    case CommChannelMode::kPrivatePerTeam: return same_team;
    case CommChannelMode::kPublic: return true;
    case CommChannelMode::kAsymmetricPublicOneTeam: return s.team_of(sender) == 0 || same_team;
  }
  return false;
}

inline std::size_t message_block_width(const PongConfig& c) {
  return c.comm_mode == CommChannelMode::kNone ? 0
                                               : static_cast<std::size_t>(c.players * c.alphabet);
}

inline std::size_t pong_observation_width(const PongConfig& c) { return 6 + message_block_width(c); }

// [ball_visible, x, y, vx, vy, own paddle centre | messages]. Ball entries are
// zero unless the ball is in the agent's half. The message block holds one
// one-hot slot per sender, zero where the sender is not audible.
inline std::vector<double> pong_observation(const GridPongState& s, std::size_t agent) {
  const PongConfig& c = s.config;
  std::vector<double> o(pong_observation_width(c), 0.0);
  const bool left = s.team_of(agent) == 0;
  const bool visible = left ? s.ball_x < c.width / 2 : s.ball_x >= c.width / 2;
  if (visible) {
    o[0] = 1.0;
    o[1] = static_cast<double>(s.ball_x) / (c.width - 1);
    o[2] = static_cast<double>(s.ball_y) / (c.height - 1);
    o[3] = s.vel_x;
    o[4] = static_cast<double>(s.vel_y) / c.max_vertical_speed;
  }
  o[5] = static_cast<double>(s.paddles[agent].center()) / (c.height - 1);
  if (c.comm_mode != CommChannelMode::kNone) {
    for (std::size_t sender = 0; sender < s.paddles.size(); ++sender) {
      const int sym = s.last_messages[sender];
      if (sym >= 0 && audible(s, sender, agent)) o[6 + sender * c.alphabet + static_cast<std::size_t>(sym)] = 1.0;
    }
  }
  return o;
}

inline std::vector<std::vector<double>> pong_observations(const GridPongState& s) {
  std::vector<std::vector<double>> out;
  for (std::size_t a = 0; a < s.paddles.size(); ++a) out.push_back(pong_observation(s, a));
  return out;
}

// Ball centred with a uniformly random diagonal velocity, paddles centred in
// their bands. In the 4-player game each side has a top-band and a
// bottom-band paddle on the same column; agents 0,1 are the left team.
inline GridPongState pong_reset(const PongConfig& config, std::uint64_t seed) {
  validate(config);
  GridPongState s;
  s.config = config;
  s.rng.seed(seed);
  const int per_side = config.players / 2;
  const int band = config.height / per_side;
  for (int p = 0; p < config.players; ++p) {
    Paddle pd;
    pd.team = p < per_side ? 0 : 1;
    pd.column = pd.team == 0 ? 0 : config.width - 1;
    const int slot = p % per_side;
    pd.band_lo = slot * band;
    pd.band_hi = slot == per_side - 1 ? config.height : (slot + 1) * band;
    pd.length = config.paddle_length;
    pd.top = pd.band_lo + (pd.band_hi - pd.band_lo - pd.length) / 2;
    s.paddles.push_back(pd);
  }
  s.score.assign(2, 0.0);
  s.last_messages.assign(static_cast<std::size_t>(config.players), -1);
  detail::serve(s);
  return s;
}

// Paddles move first, then the ball. Rows reflect off the top and bottom
// walls; a ball entering a paddle column either bounces (horizontal velocity
// reverses, bounce counter +1) or leaves the grid and the other team scores.
inline StepResult pong_step(GridPongState& s, const std::vector<PongAction>& actions,
                            const std::vector<int>& messages = {}) {
  const PongConfig& c = s.config;
  if (s.done) throw UsageError("pong episode already finished");
  if (actions.size() != s.paddles.size()) {
    throw UsageError("pong expects " + std::to_string(s.paddles.size()) + " actions, got " +
                     std::to_string(actions.size()));
  }
  if (c.comm_mode == CommChannelMode::kNone) {
    if (!messages.empty()) throw UsageError("messages sent with comm mode none");
  } else {
    if (messages.size() != s.paddles.size()) throw UsageError("one message per agent required");
    for (int m : messages)
      if (m < 0 || m >= c.alphabet) throw UsageError("message symbol outside the alphabet");
  }

  for (std::size_t p = 0; p < s.paddles.size(); ++p) {
    Paddle& pd = s.paddles[p];
    if (actions[p] == PongAction::kUp) pd.top -= 1;
    if (actions[p] == PongAction::kDown) pd.top += 1;
    pd.top = std::clamp(pd.top, pd.band_lo, pd.band_hi - pd.length);
  }

  StepResult r;
  r.rewards.assign(s.paddles.size(), 0.0);
  ++s.step;

  int ny = s.ball_y + s.vel_y;
  while (ny < 0 || ny > c.height - 1) {
    if (ny < 0) ny = -ny;
    if (ny > c.height - 1) ny = 2 * (c.height - 1) - ny;
    s.vel_y = -s.vel_y;
  }
  int nx = s.ball_x + s.vel_x;
  bool point = false;
  int scorer_team = -1;
  if (nx == 0 || nx == c.width - 1) {
    const int side = nx == 0 ? 0 : 1;
    const Paddle* hit = nullptr;
    for (const Paddle& pd : s.paddles)
      if (pd.team == side && pd.covers(ny)) hit = &pd;
    if (hit) {
      s.vel_x = -s.vel_x;
      nx = s.ball_x;
      s.vel_y = std::clamp(s.vel_y + (ny - hit->center()), -c.max_vertical_speed, c.max_vertical_speed);
      ++s.bounces;
      r.info["bounce"] = 1.0;
    } else {
      point = true;
      scorer_team = 1 - side;
    }
  }
  s.ball_x = nx;
  s.ball_y = ny;

  if (!messages.empty()) s.last_messages = messages;

  if (point) {
    for (std::size_t p = 0; p < s.paddles.size(); ++p) {
      r.rewards[p] = s.paddles[p].team == scorer_team ? c.rho : -1.0;
    }
    s.score[static_cast<std::size_t>(scorer_team)] += 1.0;
    r.info["point"] = 1.0;
    r.info["scorer_team"] = scorer_team;
    r.info["point_bounces"] = s.bounces;
    ++s.points_played;
    detail::serve(s);
  }
  const bool truncated = !point && s.step >= c.max_steps;
  if (truncated) {
    // A rally cut by the step cap still closes a point, without reward.
    r.info["point"] = 1.0;
    r.info["truncated"] = 1.0;
    r.info["point_bounces"] = s.bounces;
    ++s.points_played;
    s.bounces = 0;
  }
  s.done = s.points_played >= c.points_per_episode || s.step >= c.max_steps;
  r.info["bounces"] = s.bounces;
  r.done = s.done;
  r.observations = pong_observations(s);
  return r;
}

// Row at which the ball will next enter `column`, following wall reflections
// and treating the opposite paddle column as a plain reflector (no spin).
inline int predict_intercept_row(const GridPongState& s, int column) {
  const int h = s.config.height;
  int x = s.ball_x, y = s.ball_y, vx = s.vel_x, vy = s.vel_y;
  for (int guard = 0; guard < 4 * s.config.width; ++guard) {
    int ny = y + vy;
    while (ny < 0 || ny > h - 1) {
      if (ny < 0) ny = -ny;
      if (ny > h - 1) ny = 2 * (h - 1) - ny;
      vy = -vy;
    }
    int nx = x + vx;
    if (nx == column) return ny;
    if (nx == 0 || nx == s.config.width - 1) {
      vx = -vx;
      nx = x;
    }
    x = nx;
    y = ny;
  }
  return y;
}

// Full-state scripted controller: centres the paddle on the predicted
// intercept row (clamped to the paddle's band).
inline PongAction scripted_tracker(const GridPongState& s, std::size_t agent) {
  const Paddle& pd = s.paddles[agent];
  int target = predict_intercept_row(s, pd.column);
  target = std::clamp(target, pd.band_lo, pd.band_hi - 1);
  if (target < pd.center()) return PongAction::kUp;
  if (target > pd.center()) return PongAction::kDown;
  return PongAction::kStay;
}

}  // namespace emcomm::env
