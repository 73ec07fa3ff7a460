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

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "emcomm/agents/pong_learner.hpp"
#include "emcomm/agents/switch_learner.hpp"
#include "emcomm/metrics/eval_report.hpp"
#include "emcomm/metrics/message_log.hpp"
#include "emcomm/metrics/returns.hpp"
#include "emcomm/metrics/trace_report.hpp"

namespace emcomm::metrics {
namespace {

MessageLog log_of(const std::vector<std::pair<std::vector<int>, int>>& rows) {
  MessageLog log;
  for (std::size_t i = 0; i < rows.size(); ++i) log.push_back({rows[i].first, 0, rows[i].second, i, true});
  return log;
}

TEST(Purity, OneCategoryPerMessageIsPure) {
  EXPECT_EQ(purity(log_of({{{1}, 0}, {{1}, 0}, {{2}, 1}, {{3, 4}, 2}})), 1.0);
}

TEST(Purity, HandCountedClusters) {
  // Clusters {A, A, B} and {B, B}: (2 + 2) / 5.
  EXPECT_DOUBLE_EQ(purity(log_of({{{1}, 0}, {{1}, 0}, {{1}, 1}, {{2}, 1}, {{2}, 1}})), 0.8);
}

TEST(Purity, OneRecordPerMessageIsExactlyOne) {
  EXPECT_EQ(purity(log_of({{{1}, 0}, {{2}, 1}, {{3}, 0}, {{1, 1}, 2}})), 1.0);
}

TEST(Purity, TiesResolveToLowestCategory) {
  const MessageLog log = log_of({{{5}, 2}, {{5}, 1}});
  EXPECT_EQ(purity(log), 0.5);
  EXPECT_EQ(cluster_majorities(log).at({5}), 1);
}

TEST(Purity, InvariantUnderRelabelingAndPermutation) {
  std::mt19937_64 rng(4);
  MessageLog log;
  for (int i = 0; i < 200; ++i) {
    log.push_back({{static_cast<int>(rng() % 6), static_cast<int>(rng() % 2)}, 0, static_cast<int>(rng() % 3),
                   static_cast<std::size_t>(i), true});
  }
  const double base = purity(log);
  MessageLog renamed = log;
  for (auto& r : renamed) r.message = {r.message[1] * 10 + r.message[0] + 100};
  EXPECT_EQ(purity(renamed), base);
  MessageLog shuffled = log;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EXPECT_DOUBLE_EQ(purity(shuffled), base);
  EXPECT_EQ(lexicon_size(shuffled), lexicon_size(log));
}

TEST(Purity, EmptyLogIsAnError) { EXPECT_THROW(purity({}), UsageError); }

TEST(LexiconSize, CountsDistinctSequences) {
  EXPECT_EQ(lexicon_size({}), 0U);
  EXPECT_EQ(lexicon_size(log_of({{{1}, 0}, {{1}, 0}, {{2, 3}, 0}})), 2U);
  EXPECT_EQ(max_lexicon(10, 2), 110.0);
  EXPECT_EQ(max_lexicon(17, 1), 17.0);
}

TEST(OracleNormalizedReturn, BasicCases) {
  EXPECT_EQ(oracle_normalized_return({0.7, 0.7}, 0.7), 1.0);
  EXPECT_EQ(oracle_normalized_return({0.0, 0.0, 0.0}, 0.74), 0.0);
  EXPECT_THROW(oracle_normalized_return({1.0}, 0.0), ConfigurationError);
  EXPECT_THROW(oracle_normalized_return({1.0}, -1.0), ConfigurationError);
}

TEST(OracleNormalizedReturn, IsLinearInReturns) {
  const std::vector<double> a{0.1, -0.5, 1.0}, b{0.3, 0.2, -1.0};
  std::vector<double> mix(3);
  for (std::size_t i = 0; i < 3; ++i) mix[i] = 2.0 * a[i] + 3.0 * b[i];
  EXPECT_NEAR(oracle_normalized_return(mix, 0.8),
              2.0 * oracle_normalized_return(a, 0.8) + 3.0 * oracle_normalized_return(b, 0.8), 1e-14);
}

TEST(EpisodesToThreshold, ConstantSeriesAboveThresholdReturnsWindow) {
  EXPECT_EQ(episodes_to_threshold(std::vector<double>(500, 1.0), 0.95, 100), 100U);
  EXPECT_EQ(episodes_to_threshold(std::vector<double>(5, 1.0), 0.95, 1), 1U);
}

TEST(EpisodesToThreshold, NeverReached) {
  EXPECT_FALSE(episodes_to_threshold(std::vector<double>(500, 0.5), 0.95, 100).has_value());
  EXPECT_FALSE(episodes_to_threshold(std::vector<double>(50, 1.0), 0.95, 100).has_value());
  EXPECT_THROW(episodes_to_threshold({1.0}, 0.5, 0), UsageError);
}

TEST(EpisodesToThreshold, FirstWindowCrossing) {
  // Windows of 2: (0,0) (0,1) (1,1) -> the mean first reaches 1 after 4 entries.
  EXPECT_EQ(episodes_to_threshold({0.0, 0.0, 1.0, 1.0, 1.0}, 1.0, 2), 4U);
  EXPECT_EQ(episodes_to_threshold({0.0, 0.0, 1.0, 1.0, 1.0}, 0.5, 2), 3U);
}

TEST(PaddleBounceRate, ScriptedTrackersNeverMiss) {
  env::PongConfig c;
  env::EpisodeTrace trace;
  const auto stats = agents::scripted_pong_play(c, agents::ScriptedPong::kTracker, 3, 0, &trace);
  const auto rate = paddle_bounce_rate({trace});
  ASSERT_TRUE(rate.has_value());
  EXPECT_GE(*rate, 10.0);
  EXPECT_EQ(*rate, stats.bounce_rate());
}

TEST(PaddleBounceRate, StillPaddlesRarelyBounce) {
  env::PongConfig c;
  c.points_per_episode = 5;
  env::EpisodeTrace trace;
  agents::scripted_pong_play(c, agents::ScriptedPong::kStill, 20, 0, &trace);
  const auto rate = paddle_bounce_rate({trace});
  ASSERT_TRUE(rate.has_value());
  EXPECT_LT(*rate, 1.0);
}

TEST(PaddleBounceRate, NoPointsIsMissing) {
  EXPECT_FALSE(paddle_bounce_rate({}).has_value());
  env::EpisodeTrace empty;
  empty.records.push_back({});
  EXPECT_FALSE(paddle_bounce_rate({empty}).has_value());
}

TEST(EvalReport, TextRoundTrip) {
  EvalReport r;
  r.config_hash = "00ff12ab34cd56ef";
  r.seed = 17;
  r.provenance = "emcomm 0.1.0 dial switch";
  r.metrics["return"] = {0.1 + 0.2, 1.0 / 3.0, 2000};
  r.metrics["bounce_rate"] = {-0.0, 0.0, 1};
  r.series["entropy_drop"] = {0.0, 1e-300, -2.5, 6.02214076e23};
  r.series["empty"] = {};
  const std::string text = report_to_string(r);
  std::istringstream is(text);
  const EvalReport back = read_report(is);
  EXPECT_EQ(back, r);
  EXPECT_EQ(report_to_string(back), text);
}

TEST(EvalReport, ParseErrorsNameTheLine) {
  auto fail_line = [](const std::string& text) -> std::size_t {
    std::istringstream is(text);
    try {
      read_report(is);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(fail_line("nonsense\n"), 1U);
  EXPECT_EQ(fail_line("emcomm-eval-report 1\nseed 3\nmetric x 1.0 oops 4\n"), 3U);
  EXPECT_EQ(fail_line("emcomm-eval-report 1\nseries s 3 1 2\n"), 2U);
  EXPECT_EQ(fail_line("emcomm-eval-report 1\nseed 1\nbogus\n"), 3U);
  EXPECT_EQ(fail_line(""), 1U);
}

TEST(ReplayConsistency, SwitchReportMatchesOnlineEvaluation) {
  agents::SwitchLearnerConfig c;
  c.exact_eval_limit = 0;
  agents::SwitchLearner learner(c, 3);
  for (int i = 0; i < 3; ++i) learner.update();
  for (auto ch : {agents::EvalChannel::kDiscrete, agents::EvalChannel::kReal}) {
    const double online = learner.evaluate(ch, 300, 9);
    std::stringstream ss;
    env::write_trace(ss, learner.trace(ch, 300, 9));
    const auto trace = env::read_trace(ss);
    const EvalReport rep = report_from_trace(trace);
    EXPECT_EQ(rep.metrics.at("return").value, online);
    EXPECT_EQ(rep.metrics.at("return").count, 300U);
    EXPECT_EQ(rep.metrics.at("normalized_return").value, online / learner.oracle());
    // Entropy series recomputed from the logged posteriors.
    std::vector<double> entropy;
    for (const auto& r : trace.records) entropy.push_back(belief::belief_entropy(r.posterior));
    EXPECT_EQ(rep.series.at("posterior_entropy"), entropy);
  }
}

TEST(ReplayConsistency, PongReportMatchesOnlineEvaluation) {
  agents::PongLearnerConfig c;
  c.warmup = 50;
  agents::PongLearner learner(c, 1);
  learner.train_episode();
  env::EpisodeTrace trace;
  const auto stats = learner.evaluate(3, 4, &trace);
  std::stringstream ss;
  env::write_trace(ss, trace);
  const EvalReport rep = report_from_trace(env::read_trace(ss));
  EXPECT_EQ(rep.metrics.at("points").value, static_cast<double>(stats.points));
  ASSERT_TRUE(rep.metrics.contains("bounce_rate"));
  EXPECT_EQ(rep.metrics.at("bounce_rate").value, stats.bounce_rate());
}

TEST(ReportFromTrace, UnknownEnvironmentIsAnError) {
  env::EpisodeTrace t;
  t.environment = "chess";
  EXPECT_THROW(report_from_trace(t), ConfigurationError);
  t.environment = "switch_riddle";
  EXPECT_THROW(report_from_trace(t), InconsistencyError);
}

}  // namespace
}  // namespace emcomm::metrics
