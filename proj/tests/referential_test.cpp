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
#include <vector>

#include <gtest/gtest.h>

#include "emcomm/agents/referential_agents.hpp"
#include "emcomm/metrics/message_log.hpp"
#include "emcomm/metrics/returns.hpp"
#include "emcomm/metrics/trace_report.hpp"
#include "emcomm/metrics/zero_shot.hpp"
#include "emcomm/nn/gradcheck.hpp"

namespace emcomm::agents {
namespace {

using nn::Array;
using nn::ParameterStore;
using nn::Tape;
using nn::Var;

Array one_hot_rows(const std::vector<std::size_t>& idx, std::size_t width) {
  Array a({idx.size(), width});
  for (std::size_t i = 0; i < idx.size(); ++i) a(i, idx[i]) = 1.0;
  return a;
}

TEST(SpeakerGenerate, LengthOneGivesOneSymbol) {
  const auto pair = SpeakerListenerPair::init(4, 5, 1, 8, 3);
  Tape t;
  Rng rng(1);
  const auto out = speaker_generate(t, pair, pair.speaker, one_hot_rows({0, 1, 2, 3}, 4), DecodeMode::kSample, rng);
  for (const auto& m : out.messages) {
    ASSERT_EQ(m.size(), 1U);
    EXPECT_GE(m[0], 0);
    EXPECT_LT(m[0], 5);
  }
}

TEST(SpeakerGenerate, DistributionsAreNormalizedAndMessagesBounded) {
  const auto pair = SpeakerListenerPair::init(4, 6, 4, 8, 5);
  Tape t;
  Rng rng(2);
  const auto out = speaker_generate(t, pair, pair.speaker, one_hot_rows({0, 1, 2, 3, 0, 1}, 4), DecodeMode::kSample, rng);
  ASSERT_EQ(out.distributions.size(), 4U);
  for (const Array& d : out.distributions)
    for (std::size_t b = 0; b < d.rows(); ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < d.cols(); ++j) s += d(b, j);
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  for (const auto& m : out.messages) {
    ASSERT_GE(m.size(), 1U);
    ASSERT_LE(m.size(), 4U);
    for (std::size_t i = 0; i + 1 < m.size(); ++i) EXPECT_NE(m[i], kStopSymbol);
    for (int s : m) EXPECT_TRUE(s >= 0 && s < 6);
  }
}

TEST(SpeakerGenerate, LogProbabilityIsSumOfEmittedSymbols) {
  const auto pair = SpeakerListenerPair::init(3, 4, 3, 6, 9);
  Tape t;
  Rng rng(4);
  const auto out = speaker_generate(t, pair, pair.speaker, one_hot_rows({0, 1, 2}, 3), DecodeMode::kSample, rng);
  for (std::size_t b = 0; b < 3; ++b) {
    double lp = 0.0;
    for (std::size_t pos = 0; pos < out.messages[b].size(); ++pos) {
      lp += std::log(out.distributions[pos](b, static_cast<std::size_t>(out.messages[b][pos])));
    }
    EXPECT_NEAR(out.log_prob.value()[b], lp, 1e-12);
  }
}

TEST(SpeakerGenerate, GreedyIsDeterministic) {
  const auto pair = SpeakerListenerPair::init(4, 5, 3, 8, 11);
  auto run = [&](std::uint64_t seed) {
    Tape t;
    Rng rng(seed);
    return speaker_generate(t, pair, pair.speaker, one_hot_rows({0, 1, 2, 3}, 4), DecodeMode::kGreedy, rng).messages;
  };
  EXPECT_EQ(run(1), run(999));
}

TEST(SpeakerListenerPair, StoresAreDisjoint) {
  const auto pair = SpeakerListenerPair::init(4, 5, 3, 8, 11);
  for (const auto& [name, v] : pair.speaker) {
    EXPECT_EQ(name.rfind("speaker/", 0), 0U);
    EXPECT_FALSE(pair.listener.contains(name));
  }
  for (const auto& [name, v] : pair.listener) EXPECT_EQ(name.rfind("listener/", 0), 0U);
  EXPECT_THROW(SpeakerListenerPair::init(4, 1, 3, 8, 0), ConfigurationError);
  EXPECT_THROW(SpeakerListenerPair::init(4, 5, 0, 8, 0), ConfigurationError);
}

TEST(ListenerChoose, IdenticalCandidatesGiveUniformChoice) {
  const auto pair = SpeakerListenerPair::init(4, 5, 2, 8, 2);
  Tape t;
  Rng rng(0);
  const auto out = listener_choose(t, pair, pair.listener, {{1, 2}, {3, 0}}, one_hot_rows({2, 2, 2, 1, 1, 1}, 4), 3,
                                   DecodeMode::kGreedy, rng);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(out.distribution(b, j), 1.0 / 3.0, 1e-12);
}

TEST(ListenerChoose, ZeroMessageEncodingGivesUniformChoice) {
  auto pair = SpeakerListenerPair::init(4, 5, 2, 8, 2);
  pair.listener.get("listener/msg/w") *= 0.0;
  pair.listener.get("listener/msg/b") *= 0.0;
  Tape t;
  Rng rng(0);
  const auto out = listener_choose(t, pair, pair.listener, {{1, 2}}, one_hot_rows({0, 1, 2, 3}, 4), 4,
                                   DecodeMode::kSample, rng);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out.distribution(0, j), 0.25, 1e-12);
}

TEST(ListenerChoose, RejectsSingleCandidate) {
  const auto pair = SpeakerListenerPair::init(4, 5, 2, 8, 2);
  Tape t;
  Rng rng(0);
  EXPECT_THROW(listener_choose(t, pair, pair.listener, {{1}}, one_hot_rows({0}, 4), 1, DecodeMode::kGreedy, rng),
               ConfigurationError);
}

TEST(ListenerChoose, PrefixDistributionEndsAtFinalDistribution) {
  const auto pair = SpeakerListenerPair::init(4, 5, 3, 8, 6);
  Tape t;
  Rng rng(0);
  const std::vector<Message> msgs{{1, 2, 0}, {4, 0}, {3}};
  const auto out = listener_choose(t, pair, pair.listener, msgs, one_hot_rows({0, 1, 2, 3, 0, 1}, 4), 2,
                                   DecodeMode::kGreedy, rng, true);
  ASSERT_EQ(out.prefix_distributions.size(), 3U);
  for (std::size_t b = 0; b < 3; ++b) {
    const std::size_t last = msgs[b].size() - 1;
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(out.prefix_distributions[last](b, j), out.distribution(b, j));
  }
}

TEST(SpeakerGradient, MatchesFiniteDifferences) {
  const auto pair = SpeakerListenerPair::init(3, 4, 3, 5, 21);
  const Array targets = one_hot_rows({0, 1, 2}, 3);
  auto loss = [&](Tape& t, const ParameterStore& p) {
    Rng rng(0);
    const auto out = speaker_generate(t, pair, p, targets, DecodeMode::kGreedy, rng);
    return nn::add(nn::sum(out.log_prob), nn::scale(nn::sum(out.entropy), 0.3));
  };
  const auto rep = nn::finite_diff_check(loss, pair.speaker);
  EXPECT_LT(rep.max_relative_error, 1e-4) << rep.worst_parameter << "[" << rep.worst_index << "]";
}

TEST(ListenerGradient, MatchesFiniteDifferences) {
  const auto pair = SpeakerListenerPair::init(3, 4, 3, 5, 22);
  const std::vector<Message> msgs{{1, 2, 0}, {3, 0}, {2}};
  const Array cands = one_hot_rows({0, 1, 2, 1, 2, 0}, 3);
  auto loss = [&](Tape& t, const ParameterStore& p) {
    Rng rng(0);
    return nn::sum(listener_choose(t, pair, p, msgs, cands, 2, DecodeMode::kGreedy, rng).log_prob);
  };
  const auto rep = nn::finite_diff_check(loss, pair.listener);
  EXPECT_LT(rep.max_relative_error, 1e-4) << rep.worst_parameter << "[" << rep.worst_index << "]";
}

TEST(Reinforce, RewardAtBaselineGivesZeroGradient) {
  const auto pair = SpeakerListenerPair::init(3, 4, 2, 5, 1);
  Tape t;
  Rng rng(3);
  const auto out = speaker_generate(t, pair, pair.speaker, one_hot_rows({0, 1, 2}, 3), DecodeMode::kSample, rng);
  const auto g = reinforce_update(t, reinforce_loss(out.log_prob, {0.4, 0.4, 0.4}, 0.4));
  for (const auto& [name, grad] : g.speaker)
    for (double v : grad.values()) EXPECT_EQ(v, 0.0) << name;
}

TEST(Reinforce, SingleRewardedEpisodeFollowsLogProbability) {
  const auto pair = SpeakerListenerPair::init(3, 4, 2, 5, 1);
  const Array target = one_hot_rows({1}, 3);
  const Array cands = one_hot_rows({1, 2}, 3);
  auto build = [&](Tape& t, Rng& rng) {
    const auto s = speaker_generate(t, pair, pair.speaker, target, DecodeMode::kSample, rng);
    const auto l = listener_choose(t, pair, pair.listener, s.messages, cands, 2, DecodeMode::kSample, rng);
    return nn::add(s.log_prob, l.log_prob);
  };
  Tape t1;
  Rng r1(8);
  const auto g = reinforce_update(t1, reinforce_loss(build(t1, r1), {1.0}, 0.0));
  Tape t2;
  Rng r2(8);
  const auto ref = t2.backward(nn::scale(nn::sum(build(t2, r2)), -1.0));
  for (const auto* part : {&g.speaker, &g.listener})
    for (const auto& [name, grad] : *part) {
      ASSERT_TRUE(ref.contains(name));
      for (std::size_t i = 0; i < grad.size(); ++i) EXPECT_NEAR(grad[i], ref.at(name)[i], 1e-14) << name;
    }
  EXPECT_EQ(g.speaker.size() + g.listener.size(), ref.size());
}

TEST(Reinforce, BaselineIsAnExponentialAverage) {
  BaselineState b;
  b.observe({1.0, 0.0}, 0.9);
  EXPECT_NEAR(b.value, 0.05, 1e-15);
  b.observe({1.0}, 0.9);
  EXPECT_NEAR(b.value, 0.145, 1e-15);
}

ReferentialConfig toy_config() {
  ReferentialConfig c;
  c.space = {1, 2};
  c.held_out_fraction = 0.0;
  c.n_candidates = 2;
  c.alphabet = 2;
  c.max_length = 1;
  return c;
}

TEST(ReferentialTrainer, ToyTaskConvergesOnMostSeeds) {
  int solved = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ReferentialTrainer tr(toy_config(), seed);
    while (tr.episodes() < 2000) tr.update();
    solved += metrics::accuracy_of(tr.evaluate(env::SplitKind::kTrain, 200, 7)).accuracy == 1.0;
  }
  EXPECT_GE(solved, 9);
}

TEST(ReferentialTrainer, DeterministicForSeed) {
  ReferentialConfig c;
  c.batch_episodes = 4;
  ReferentialTrainer a(c, 5), b(c, 5);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(a.update(), b.update());
  EXPECT_EQ(a.pair().speaker, b.pair().speaker);
  EXPECT_EQ(a.pair().listener, b.pair().listener);
  EXPECT_EQ(a.episodes(), 20U);
}

TEST(ReferentialTrainer, TrainingNeverTouchesHeldOut) {
  ReferentialConfig c;
  c.n_candidates = 4;
  ReferentialTrainer tr(c, 2);
  for (int i = 0; i < 50; ++i) tr.update();
  for (int idx : tr.split().held_out()) EXPECT_FALSE(tr.touched()[static_cast<std::size_t>(idx)]);
  EXPECT_NO_THROW(metrics::zero_shot_accuracy(tr, 10, 0));
  tr.touched()[static_cast<std::size_t>(tr.split().held_out().front())] = true;
  EXPECT_THROW(metrics::zero_shot_accuracy(tr, 10, 0), InconsistencyError);
}

TEST(ZeroShotAccuracy, UntrainedPairsAreAtChance) {
  // A single random network has its own preferences; chance level holds
  // on average over initialisations.
  ReferentialConfig c;
  c.n_candidates = 4;
  std::vector<double> acc;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    ReferentialTrainer tr(c, seed);
    const auto est = metrics::zero_shot_accuracy(tr, 200, seed);
    EXPECT_EQ(est.episodes, 200U);
    acc.push_back(est.accuracy);
  }
  const auto m = metrics::mean_estimate(acc);
  EXPECT_NEAR(m.mean, 0.25, 3.0 * m.std_error);
}

TEST(ReferentialTrace, ReportMatchesOnlineMetrics) {
  ReferentialConfig c;
  c.n_candidates = 3;
  c.max_length = 3;
  ReferentialTrainer tr(c, 4);
  for (int i = 0; i < 30; ++i) tr.update();
  const auto outcomes = tr.evaluate(env::SplitKind::kTrain, 300, 2);
  metrics::MessageLog log;
  for (std::size_t e = 0; e < outcomes.size(); ++e) {
    log.push_back({outcomes[e].message, c.space.index(outcomes[e].target), outcomes[e].target.shape, e,
                   outcomes[e].success});
  }
  const auto trace = referential_trace(outcomes, c.space, c.n_candidates);
  std::stringstream ss;
  env::write_trace(ss, trace);
  const auto rep = metrics::report_from_trace(env::read_trace(ss));
  EXPECT_EQ(rep.metrics.at("accuracy").value, metrics::accuracy_of(outcomes).accuracy);
  EXPECT_EQ(rep.metrics.at("accuracy").count, 300U);
  EXPECT_EQ(rep.metrics.at("purity").value, metrics::purity(log));
  EXPECT_EQ(rep.metrics.at("lexicon_size").value, static_cast<double>(metrics::lexicon_size(log)));
  std::vector<double> drops;
  for (const auto& o : outcomes) {
    std::vector<std::vector<double>> seq{std::vector<double>(3, 1.0 / 3.0)};
    seq.insert(seq.end(), o.prefix_posteriors.begin(), o.prefix_posteriors.end());
    const auto ev = belief::entropy_evolution(seq);
    for (std::size_t t = 1; t < ev.size(); ++t) drops.push_back(ev[t].drop);
  }
  EXPECT_EQ(rep.series.at("entropy_drop"), drops);
}

}  // namespace
}  // namespace emcomm::agents
