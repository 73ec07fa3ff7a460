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

#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "emcomm/env/grid_pong.hpp"
#include "emcomm/env/referential.hpp"
#include "emcomm/env/switch_riddle.hpp"
#include "emcomm/env/trace.hpp"

namespace emcomm::env {
namespace {

// Chi-style check: every bucket within k standard deviations of its mean.
void expect_uniform(const std::vector<std::size_t>& counts, std::size_t draws, double k_sigma) {
  const double p = 1.0 / static_cast<double>(counts.size());
  const double mean = p * static_cast<double>(draws);
  const double sigma = std::sqrt(static_cast<double>(draws) * p * (1.0 - p));
  for (std::size_t i = 0; i < counts.size(); ++i) {
    EXPECT_LT(std::abs(static_cast<double>(counts[i]) - mean), k_sigma * sigma) << "bucket " << i;
  }
}

// Brute force over every sequence of active agents.
double enumerate_oracle(int n, int days) {
  std::vector<int> seq(static_cast<std::size_t>(days), 0);
  double total = 0.0;
  std::size_t count = 0;
  while (true) {
    std::set<int> seen;
    for (int a : seq) {
      seen.insert(a);
      if (static_cast<int>(seen.size()) == n) break;
    }
    total += static_cast<int>(seen.size()) == n ? 1.0 : 0.0;
    ++count;
    int i = 0;
    while (i < days && ++seq[static_cast<std::size_t>(i)] == n) seq[static_cast<std::size_t>(i++)] = 0;
    if (i == days) break;
  }
  return total / static_cast<double>(count);
}

TEST(SwitchRiddle, ResetIsSeededAndDeterministic) {
  SwitchRiddleState a = switch_reset(3, 6, 1234);
  SwitchRiddleState b = switch_reset(3, 6, 1234);
  EXPECT_EQ(a.active_agent, b.active_agent);
  EXPECT_EQ(a.rng, b.rng);
  EXPECT_FALSE(a.bulb_on);
  EXPECT_EQ(a.day, 1);
  for (bool v : a.visited) EXPECT_FALSE(v);
}

TEST(SwitchRiddle, FirstActiveAgentIsUniform) {
  std::vector<std::size_t> counts(3, 0);
  const std::size_t draws = 100000;
  for (std::size_t s = 0; s < draws; ++s) ++counts[static_cast<std::size_t>(switch_reset(3, 6, s).active_agent)];
  expect_uniform(counts, draws, 3.0);
}

TEST(SwitchRiddle, TooFewAgentsIsConfigurationError) {
  EXPECT_THROW(switch_reset(1, 6, 0), ConfigurationError);
  EXPECT_THROW(switch_reset(3, 0, 0), ConfigurationError);
}

TEST(SwitchRiddle, CorrectTellRewardsEveryone) {
  SwitchRiddleState s = switch_reset(2, 50, 3);
  std::set<int> seen;
  while (true) {
    seen.insert(s.active_agent);
    if (seen.size() == 2) break;
    switch_step(s, s.active_agent, SwitchAction::kNone);
  }
  StepResult r = switch_step(s, s.active_agent, SwitchAction::kTell);
  EXPECT_TRUE(r.done);
  for (double v : r.rewards) EXPECT_EQ(v, 1.0);
}

TEST(SwitchRiddle, EarlyTellPunishesEveryone) {
  SwitchRiddleState s = switch_reset(3, 6, 9);
  StepResult r = switch_step(s, s.active_agent, SwitchAction::kTell);
  EXPECT_TRUE(r.done);
  ASSERT_EQ(r.rewards.size(), 3u);
  for (double v : r.rewards) EXPECT_EQ(v, -1.0);
}

TEST(SwitchRiddle, ToggleFlipsBulbWithoutReward) {
  SwitchRiddleState s = switch_reset(3, 6, 5);
  StepResult r = switch_step(s, s.active_agent, SwitchAction::kToggle);
  EXPECT_TRUE(s.bulb_on);
  EXPECT_FALSE(r.done);
  for (double v : r.rewards) EXPECT_EQ(v, 0.0);
  // Only the agent in the room sees the bulb.
  for (int m = 0; m < 3; ++m) {
    const auto& o = r.observations[static_cast<std::size_t>(m)];
    if (m == s.active_agent) {
      EXPECT_EQ(o, (std::vector<double>{1.0, 1.0}));
    } else {
      EXPECT_EQ(o, (std::vector<double>{0.0, 0.0}));
    }
  }
}

TEST(SwitchRiddle, NonActiveAgentIsUsageError) {
  SwitchRiddleState s = switch_reset(3, 6, 5);
  EXPECT_THROW(switch_step(s, (s.active_agent + 1) % 3, SwitchAction::kNone), UsageError);
}

TEST(SwitchRiddle, TimeoutGivesZeroAndMonotoneVisits) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SwitchRiddleState s = switch_reset(4, 10, seed);
    std::vector<bool> prev = s.visited;
    int steps = 0;
    StepResult r;
    while (!s.done) {
      r = switch_step(s, s.active_agent, steps % 3 == 0 ? SwitchAction::kToggle : SwitchAction::kNone);
      ++steps;
      for (std::size_t i = 0; i < prev.size(); ++i) EXPECT_TRUE(!prev[i] || s.visited[i]);
      prev = s.visited;
    }
    EXPECT_EQ(steps, 10);
    for (double v : r.rewards) EXPECT_EQ(v, 0.0);
  }
}

TEST(SwitchOracle, SingleAgentTellsOnDayOne) {
  EXPECT_EQ(switch_oracle_return(1, 1, 10).mean, 1.0);
  EXPECT_EQ(switch_oracle_exact(1, 1), 1.0);
}

TEST(SwitchOracle, ExactFormulaMatchesEnumeration) {
  for (int n : {2, 3, 4})
    for (int d : {1, 3, 6, 8}) EXPECT_NEAR(switch_oracle_exact(n, d), enumerate_oracle(n, d), 1e-12) << n << "," << d;
}

TEST(SwitchOracle, MonteCarloPinnedForThreeAgentsTwelveDays) {
  const OracleEstimate e = switch_oracle_return(3, 12, 1000000, 0);
  EXPECT_NEAR(e.mean, 0.976798, 1e-12);
  EXPECT_LT(std::abs(e.mean - enumerate_oracle(3, 12)), 3.0 * e.std_error);
}

TEST(SwitchOracle, DecreasesAsDaysShrink) {
  double prev = 2.0;
  for (int d = 12; d >= 3; --d) {
    const double v = switch_oracle_return(3, d, 100000, 7).mean;
    EXPECT_LT(v, prev) << d;
    prev = v;
  }
}

TEST(Referential, SampleIsReproducible) {
  CombinationSplit split = CombinationSplit::all_train({5, 5});
  Rng a(42), b(42);
  ReferentialSample x = referential_sample(split, 2, SplitKind::kTrain, a);
  ReferentialSample y = referential_sample(split, 2, SplitKind::kTrain, b);
  EXPECT_EQ(x.candidates, y.candidates);
  EXPECT_EQ(x.target_index, y.target_index);
  EXPECT_NE(x.candidates[0], x.candidates[1]);
}

TEST(Referential, HeldOutCombosNeverAppearInTraining) {
  CombinationSplit split({5, 5}, 0.2, 3);
  EXPECT_EQ(split.held_out().size(), 5u);
  std::set<int> shapes, colors;
  for (int i : split.train()) {
    shapes.insert(split.space().object(i).shape);
    colors.insert(split.space().object(i).color);
  }
  EXPECT_EQ(shapes.size(), 5u);
  EXPECT_EQ(colors.size(), 5u);
  Rng rng(1);
  for (int k = 0; k < 5000; ++k) {
    ReferentialSample s = referential_sample(split, 4, SplitKind::kTrain, rng);
    for (const auto& c : s.candidates) EXPECT_FALSE(split.is_held_out(split.space().index(c)));
    ReferentialSample z = referential_sample(split, 4, SplitKind::kZeroShot, rng);
    EXPECT_TRUE(z.zero_shot);
    EXPECT_TRUE(split.is_held_out(split.space().index(z.target())));
  }
}

TEST(Referential, TargetIndexIsUniform) {
  CombinationSplit split = CombinationSplit::all_train({5, 5});
  Rng rng(8);
  std::vector<std::size_t> counts(4, 0);
  const std::size_t draws = 100000;
  for (std::size_t i = 0; i < draws; ++i) ++counts[referential_sample(split, 4, SplitKind::kTrain, rng).target_index];
  expect_uniform(counts, draws, 3.0);
}

TEST(Referential, TooManyCandidatesIsConfigurationError) {
  CombinationSplit split = CombinationSplit::all_train({2, 1});
  Rng rng(0);
  EXPECT_THROW(referential_sample(split, 3, SplitKind::kTrain, rng), ConfigurationError);
}

TEST(Referential, ScoreAndRandomBaseline) {
  EXPECT_EQ(referential_score(1, 1), 1.0);
  EXPECT_EQ(referential_score(0, 1), 0.0);
  CombinationSplit split = CombinationSplit::all_train({5, 5});
  Rng rng(4);
  const int n = 20000;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    ReferentialSample s = referential_sample(split, 2, SplitKind::kTrain, rng);
    total += referential_score(std::uniform_int_distribution<std::size_t>(0, 1)(rng), s.target_index);
  }
  const double sigma = std::sqrt(0.25 / n);
  EXPECT_LT(std::abs(total / n - 0.5), 3.0 * sigma);
}

TEST(Referential, EncodingIsTwoOneHotBlocks) {
  AttributeSpace space{4, 3};
  std::vector<double> v = space.encode({2, 1});
  EXPECT_EQ(v, (std::vector<double>{0, 0, 1, 0, 0, 1, 0}));
}

PongConfig two_player(double rho = 1.0) {
  PongConfig c;
  c.rho = rho;
  return c;
}

TEST(GridPong, ResetIsSeededWithCorrectPaddleCount) {
  GridPongState a = pong_reset(two_player(), 77);
  GridPongState b = pong_reset(two_player(), 77);
  EXPECT_EQ(a.ball_x, b.ball_x);
  EXPECT_EQ(a.vel_x, b.vel_x);
  EXPECT_EQ(a.vel_y, b.vel_y);
  EXPECT_EQ(a.paddles.size(), 2u);
  PongConfig four = two_player();
  four.players = 4;
  GridPongState c = pong_reset(four, 1);
  ASSERT_EQ(c.paddles.size(), 4u);
  EXPECT_EQ(c.paddles[0].band_hi, c.paddles[1].band_lo);
  EXPECT_EQ(c.paddles[2].band_hi, c.paddles[3].band_lo);
}

TEST(GridPong, InitialDiagonalIsUniform) {
  std::vector<std::size_t> counts(4, 0);
  const std::size_t draws = 100000;
  for (std::size_t s = 0; s < draws; ++s) {
    GridPongState g = pong_reset(two_player(), s);
    ++counts[static_cast<std::size_t>((g.vel_x > 0 ? 2 : 0) + (g.vel_y > 0 ? 1 : 0))];
  }
  expect_uniform(counts, draws, 3.0);
}

TEST(GridPong, InvalidDimsIsConfigurationError) {
  PongConfig c = two_player();
  c.height = 2;
  EXPECT_THROW(pong_reset(c, 0), ConfigurationError);
  c = two_player();
  c.players = 3;
  EXPECT_THROW(pong_reset(c, 0), ConfigurationError);
}

TEST(GridPong, PaddleHitReversesBallAndCountsBounce) {
  GridPongState s = pong_reset(two_player(), 0);
  s.ball_x = 1;
  s.ball_y = 8;
  s.vel_x = -1;
  s.vel_y = 1;
  s.paddles[0].top = 8;  // rows 8..10 cover row 9
  StepResult r = pong_step(s, {PongAction::kStay, PongAction::kStay});
  EXPECT_EQ(s.vel_x, 1);
  EXPECT_EQ(s.bounces, 1);
  EXPECT_EQ(r.info.at("bounces"), 1.0);
  EXPECT_FALSE(r.done);
}

TEST(GridPong, CooperativeMissPunishesBoth) {
  GridPongState s = pong_reset(two_player(-1.0), 0);
  s.ball_x = 14;
  s.ball_y = 0;
  s.vel_x = 1;
  s.vel_y = 1;
  s.paddles[1].top = 10;
  StepResult r = pong_step(s, {PongAction::kStay, PongAction::kStay});
  EXPECT_EQ(r.rewards, (std::vector<double>{-1.0, -1.0}));
  EXPECT_EQ(r.info.at("point"), 1.0);
  EXPECT_EQ(r.info.at("scorer_team"), 0.0);
  EXPECT_TRUE(r.done);
}

TEST(GridPong, CompetitiveTeamRewardsIn2v2) {
  PongConfig c = two_player(0.5);
  c.players = 4;
  GridPongState s = pong_reset(c, 0);
  s.ball_x = 1;
  s.ball_y = 4;
  s.vel_x = -1;
  s.vel_y = 0;
  s.paddles[0].top = 0;
  s.paddles[1].top = 10;
  StepResult r = pong_step(s, std::vector<PongAction>(4, PongAction::kStay));
  EXPECT_EQ(r.rewards, (std::vector<double>{-1.0, -1.0, 0.5, 0.5}));
}

TEST(GridPong, NoChannelMeansEmptyMessageBlock) {
  GridPongState s = pong_reset(two_player(), 0);
  StepResult r = pong_step(s, {PongAction::kStay, PongAction::kStay});
  for (const auto& o : r.observations) EXPECT_EQ(o.size(), 6u);
  EXPECT_THROW(pong_step(s, {PongAction::kStay, PongAction::kStay}, {0, 1}), UsageError);
}

TEST(GridPong, WrongActionCountIsUsageError) {
  GridPongState s = pong_reset(two_player(), 0);
  EXPECT_THROW(pong_step(s, {PongAction::kStay}), UsageError);
}

TEST(GridPong, AsymmetricRoutingMatchesDefinition) {
  PongConfig c = two_player();
  c.players = 4;
  c.comm_mode = CommChannelMode::kAsymmetricPublicOneTeam;
  GridPongState s = pong_reset(c, 2);
  StepResult r = pong_step(s, std::vector<PongAction>(4, PongAction::kStay), {0, 1, 2, 3});
  const std::size_t k = static_cast<std::size_t>(c.alphabet);
  for (std::size_t receiver = 0; receiver < 4; ++receiver) {
    const auto& o = r.observations[receiver];
    ASSERT_EQ(o.size(), 6 + 4 * k);
    for (std::size_t sender = 0; sender < 4; ++sender) {
      double slot = 0.0;
      for (std::size_t j = 0; j < k; ++j) slot += o[6 + sender * k + j];
      const bool team_a_sender = sender < 2;
      const bool team_b_receiver = receiver >= 2;
      const bool expect = team_a_sender || team_b_receiver;
      EXPECT_EQ(slot, expect ? 1.0 : 0.0) << sender << "->" << receiver;
      if (expect) {
        EXPECT_EQ(o[6 + sender * k + sender], 1.0);
      }
    }
  }
}

TEST(GridPong, PrivateAndPublicRouting) {
  PongConfig c = two_player();
  c.players = 4;
  c.comm_mode = CommChannelMode::kPrivatePerTeam;
  GridPongState s = pong_reset(c, 2);
  EXPECT_TRUE(audible(s, 0, 1));
  EXPECT_FALSE(audible(s, 0, 2));
  EXPECT_TRUE(audible(s, 3, 2));
  s.config.comm_mode = CommChannelMode::kPublic;
  EXPECT_TRUE(audible(s, 0, 3));
}

TEST(GridPong, BallInBoundsAndBouncesMonotoneWithinPoint) {
  PongConfig c = two_player();
  c.points_per_episode = 5;
  Rng pick(3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GridPongState s = pong_reset(c, seed);
    int last_bounces = 0;
    while (!s.done) {
      std::vector<PongAction> acts;
      for (int p = 0; p < 2; ++p) acts.push_back(static_cast<PongAction>(std::uniform_int_distribution<int>(0, 2)(pick)));
      StepResult r = pong_step(s, acts);
      EXPECT_GE(s.ball_x, 1);
      EXPECT_LE(s.ball_x, c.width - 2);
      EXPECT_GE(s.ball_y, 0);
      EXPECT_LT(s.ball_y, c.height);
      for (const auto& pd : s.paddles) {
        EXPECT_GE(pd.top, pd.band_lo);
        EXPECT_LE(pd.top + pd.length, pd.band_hi);
      }
      if (r.info.count("point")) {
        EXPECT_EQ(s.bounces, 0);
        last_bounces = 0;
      } else {
        EXPECT_GE(s.bounces, last_bounces);
        last_bounces = s.bounces;
      }
    }
  }
}

TEST(GridPong, PerfectTrackersKeepTheRallyAlive) {
  for (int players : {2, 4}) {
    PongConfig c = two_player();
    c.players = players;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      GridPongState s = pong_reset(c, seed);
      int steps = 0;
      StepResult r;
      while (!s.done) {
        std::vector<PongAction> acts;
        for (std::size_t p = 0; p < s.paddles.size(); ++p) acts.push_back(scripted_tracker(s, p));
        r = pong_step(s, acts);
        ++steps;
      }
      EXPECT_GE(steps, 50) << "players " << players << " seed " << seed;
    }
  }
}

EpisodeTrace run_pong_trace(std::uint64_t seed) {
  PongConfig c = two_player(0.0);
  c.players = 4;
  c.comm_mode = CommChannelMode::kPublic;
  c.max_steps = 80;
  GridPongState s = pong_reset(c, seed);
  Rng pick(seed + 1);
  EpisodeTrace t;
  t.environment = "grid_pong";
  std::size_t step = 0;
  while (!s.done) {
    std::vector<PongAction> acts;
    std::vector<int> msgs;
    for (int p = 0; p < 4; ++p) {
      acts.push_back(static_cast<PongAction>(std::uniform_int_distribution<int>(0, 2)(pick)));
      msgs.push_back(std::uniform_int_distribution<int>(0, 3)(pick));
    }
    StepResult r = pong_step(s, acts, msgs);
    TraceRecord rec;
    rec.episode = 0;
    rec.step = step++;
    for (const auto& o : r.observations) rec.obs_digest.push_back(observation_digest(o));
    for (auto a : acts) rec.actions.push_back(static_cast<int>(a));
    for (int m : msgs) rec.messages.push_back({static_cast<double>(m)});
    rec.rewards = r.rewards;
    rec.done = r.done;
    rec.info = r.info;
    t.records.push_back(rec);
  }
  return t;
}

TEST(Trace, IdenticalSeedsGiveBitIdenticalTraces) {
  std::ostringstream a, b;
  write_trace(a, run_pong_trace(5));
  write_trace(b, run_pong_trace(5));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Trace, RoundTripsThroughText) {
  EpisodeTrace t = run_pong_trace(9);
  t.records.front().posterior = {0.25, 0.75};
  std::stringstream ss;
  write_trace(ss, t);
  EXPECT_EQ(read_trace(ss), t);
}

TEST(Trace, TruncatedFileNamesOffendingLine) {
  std::stringstream ss;
  write_trace(ss, run_pong_trace(1));
  std::string text = ss.str();
  // Cut the third record in half.
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) pos = text.find('\n', pos) + 1;
  text = text.substr(0, pos + 20);
  std::istringstream bad(text);
  try {
    read_trace(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

}  // namespace
}  // namespace emcomm::env
