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
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "emcomm/agents/bellman.hpp"
#include "emcomm/agents/commnet.hpp"
#include "emcomm/agents/dial.hpp"
#include "emcomm/agents/epsilon.hpp"
#include "emcomm/agents/pong_learner.hpp"
#include "emcomm/agents/recurrent_qnet.hpp"
#include "emcomm/agents/replay_buffer.hpp"
#include "emcomm/agents/switch_learner.hpp"
#include "emcomm/nn/gradcheck.hpp"

namespace emcomm::agents {
namespace {

using nn::Array;
using nn::ParameterStore;
using nn::Tape;
using nn::Var;

TEST(BellmanTarget, BootstrapsFromMaxNextValue) {
  const std::vector<double> next{0.5, 2.0, -1.0};
  EXPECT_DOUBLE_EQ(bellman_target(1.0, false, 0.9, next), 2.8);
  EXPECT_EQ(bellman_target(1.0, true, 0.9, next), 1.0);
  EXPECT_EQ(bellman_target(-0.5, false, 0.0, next), -0.5);
  EXPECT_THROW(bellman_target(0.0, false, 1.5, next), UsageError);
}

TEST(DqnLoss, ZeroWhenTargetsMatch) {
  Tape t;
  Var q = t.constant(Array::matrix(3, 1, {0.1, -2.0, 4.0}));
  EXPECT_EQ(dqn_loss(q, std::vector<double>{0.1, -2.0, 4.0}).value()[0], 0.0);
}

TEST(DqnLoss, SingleItem) {
  Tape t;
  Var q = t.constant(Array::matrix(1, 1, {2.0}));
  EXPECT_NEAR(dqn_loss(q, std::vector<double>{2.8}).value()[0], 0.64, 1e-12);
}

TEST(DqnLoss, EmptyBatchIsAnError) {
  Tape t;
  Var q = t.constant(Array::matrix(1, 1, {2.0}));
  EXPECT_THROW(dqn_loss(q, std::vector<double>{}), UsageError);
}

TEST(DqnLoss, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  ParameterStore p;
  nn::add_dense(p, "h", 4, 6, rng);
  nn::add_dense(p, "q", 6, 3, rng);
  std::uniform_real_distribution<double> u(-1, 1);
  Array s({5, 4}), s2({5, 4});
  for (double& v : s.values()) v = u(rng);
  for (double& v : s2.values()) v = u(rng);
  const std::vector<std::size_t> actions{0, 2, 1, 1, 0};
  const std::vector<double> rewards{1, 0, -1, 0.5, 0};
  const std::vector<bool> done{false, true, false, false, true};
  // Targets come from a frozen copy, so they are fixed numbers here.
  ParameterStore frozen = p;
  std::vector<double> y;
  {
    Tape t;
    Array qn = nn::dense(t, frozen, "q", nn::tanh(nn::dense(t, frozen, "h", t.constant(s2)))).value();
    for (std::size_t i = 0; i < 5; ++i) {
      y.push_back(bellman_target(rewards[i], done[i], 0.9, std::span<const double>(qn.row_ptr(i), 3)));
    }
  }
  auto loss = [&](Tape& t, const ParameterStore& ps) {
    Var q = nn::dense(t, ps, "q", nn::tanh(nn::dense(t, ps, "h", t.constant(s))));
    return dqn_loss(nn::pick(q, actions), y);
  };
  EXPECT_LT(nn::finite_diff_check(loss, p).max_relative_error, 1e-4);
}

TEST(EpsilonGreedy, ZeroEpsilonIsArgmax) {
  Rng rng(1);
  EXPECT_EQ(epsilon_greedy(std::vector<double>{0.1, 0.9, -3.0}, 0.0, rng), 1u);
}

TEST(EpsilonGreedy, TiesGoToLowestIndex) {
  Rng rng(1);
  EXPECT_EQ(epsilon_greedy(std::vector<double>{0.0, 5.0, 1.0, 5.0}, 0.0, rng), 1u);
}

TEST(EpsilonGreedy, FullExplorationIsUniform) {
  Rng rng(11);
  const std::vector<double> q{3.0, 1.0, 2.0};
  const int draws = 100000;
  std::vector<int> counts(3, 0);
  for (int i = 0; i < draws; ++i) ++counts[epsilon_greedy(q, 1.0, rng)];
  const double p = 1.0 / 3.0, sigma = std::sqrt(draws * p * (1 - p));
  for (int c : counts) EXPECT_LT(std::abs(c - draws * p), 3 * sigma);
}

TEST(EpsilonGreedy, RespectsLegalMask) {
  Rng rng(5);
  const std::vector<bool> legal{true, false, false};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(epsilon_greedy(std::vector<double>{0, 9, 9}, 1.0, rng, legal), 0u);
  EXPECT_THROW(epsilon_greedy(std::vector<double>{0, 1}, 1.2, rng), UsageError);
}

TEST(EpsilonSchedule, MonotoneAndClamped) {
  EpsilonSchedule s{1.0, 0.1, 100};
  EXPECT_EQ(s.at(0), 1.0);
  EXPECT_NEAR(s.at(50), 0.55, 1e-12);
  EXPECT_EQ(s.at(100), 0.1);
  EXPECT_EQ(s.at(100000), 0.1);
  for (std::size_t e = 1; e < 200; ++e) EXPECT_LE(s.at(e), s.at(e - 1));
}

TEST(ReplayBuffer, OverwritesOldestOnceFull) {
  ReplayBuffer<int> buf(3);
  for (int i = 0; i < 5; ++i) buf.push(i);
  EXPECT_EQ(buf.size(), 3u);
  std::vector<int> held{buf[0], buf[1], buf[2]};
  std::sort(held.begin(), held.end());
  EXPECT_EQ(held, (std::vector<int>{2, 3, 4}));
  EXPECT_THROW(ReplayBuffer<int>(0), ConfigurationError);
  Rng rng(0);
  EXPECT_THROW(ReplayBuffer<int>(2).sample_indices(1, rng), UsageError);
}

TEST(ReplayBuffer, SamplingIsUniform) {
  ReplayBuffer<int> buf(10);
  for (int i = 0; i < 10; ++i) buf.push(i);
  Rng rng(42);
  const std::size_t draws = 1000000;
  std::vector<double> counts(10, 0.0);
  for (std::size_t i : buf.sample_indices(draws, rng)) counts[i] += 1.0;
  const double p = 0.1, sigma = std::sqrt(draws * p * (1 - p));
  for (double c : counts) EXPECT_LT(std::abs(c - draws * p), 4 * sigma);
}

RecurrentQNetSpec small_spec(std::size_t message_width) {
  RecurrentQNetSpec s;
  s.observation_width = 2;
  s.n_agents = 3;
  s.n_actions = 3;
  s.message_width = message_width;
  s.extra_width = 2;
  s.hidden = 5;
  return s;
}

Array agent_rows(const SharedRecurrentQNet& net, const std::vector<double>& obs) {
  Array fixed({3, net.fixed_width()});
  for (std::size_t m = 0; m < 3; ++m) net.encode(fixed.row_ptr(m), obs, m, 1, {0.0, 1.0});
  return fixed;
}

TEST(SharedRecurrentQNet, AgentsDifferOnlyThroughTheirIndex) {
  SharedRecurrentQNet net(small_spec(0));
  ParameterStore p = net.init(9);
  Tape t;
  Array q = net.step(t, p, agent_rows(net, {1.0, 0.0}), Var(), net.initial_state(t, 3)).q.value();
  EXPECT_GT(std::abs(q(0, 0) - q(1, 0)), 1e-9);

  Array& w = p.get("rnn/w_x");
  for (std::size_t m = 0; m < 3; ++m)
    for (std::size_t j = 0; j < w.cols(); ++j) w(2 + m, j) = 0.0;
  Tape t2;
  Array q2 = net.step(t2, p, agent_rows(net, {1.0, 0.0}), Var(), net.initial_state(t2, 3)).q.value();
  for (std::size_t m = 1; m < 3; ++m)
    for (std::size_t a = 0; a < 3; ++a) EXPECT_EQ(q2(m, a), q2(0, a));
}

TEST(SharedRecurrentQNet, MessageWidthMismatchIsAConfigurationError) {
  SharedRecurrentQNet net(small_spec(2));
  ParameterStore p = net.init(1);
  Tape t;
  Var wrong = t.constant(Array::zeros(3, 1));
  EXPECT_THROW(net.step(t, p, agent_rows(net, {1, 0}), wrong, net.initial_state(t, 3)), ConfigurationError);
}

TEST(SharedRecurrentQNet, IncomingMessageReachesRecipientQ) {
  SharedRecurrentQNet net(small_spec(1));
  ParameterStore p = net.init(4);
  auto q_for = [&](double msg) {
    Tape t;
    Var in = t.constant(Array::matrix(3, 1, {msg, msg, msg}));
    return net.step(t, p, agent_rows(net, {0, 0}), in, net.initial_state(t, 3)).q.value();
  };
  EXPECT_GT(nn::max_abs_diff(q_for(0.0), q_for(0.3)), 1e-6);
  Array& w = p.get("rnn/w_x");
  for (std::size_t j = 0; j < w.cols(); ++j) w(net.fixed_width(), j) = 0.0;
  EXPECT_EQ(nn::max_abs_diff(q_for(0.0), q_for(0.3)), 0.0);
}

// Sender emits a message at t; the recipient's loss at t+1 depends on it.
TEST(SharedRecurrentQNet, UnrolledMessageGradientMatchesFiniteDifferences) {
  SharedRecurrentQNet net(small_spec(1));
  ParameterStore p = net.init(8);
  const Array f0 = agent_rows(net, {1.0, 1.0});
  const Array f1 = agent_rows(net, {0.0, 1.0});
  auto loss = [&](Tape& t, const ParameterStore& ps) {
    nn::LstmState s = net.initial_state(t, 3);
    auto o0 = net.step(t, ps, f0, t.constant(Array::zeros(3, 1)), s);
    Var sent = nn::channel(nn::sigmoid(o0.message));
    Var in = nn::gather_rows(sent, {0, 0, 0});
    auto o1 = net.step(t, ps, f1, in, o0.state);
    return nn::sum(nn::square(nn::add_scalar(nn::pick(o1.q, {2, 0, 1}), -0.7)));
  };
  EXPECT_LT(nn::finite_diff_check(loss, p).max_relative_error, 1e-4);
}

TEST(DialMessage, ThresholdsAtStrictPositivity) {
  Array m = dial_execute_message(Array::vector({0.7, -0.3, 0.0}));
  EXPECT_EQ(m[0], 1.0);
  EXPECT_EQ(m[1], 0.0);
  EXPECT_EQ(m[2], 0.0);
  EXPECT_THROW(dial_execute_message(Array::vector({1.0}), MessagePhase::kTraining), UsageError);
}

TEST(DialMessage, NoiseFreeTrainingMessageIsSigmoid) {
  Tape t;
  Rng rng(0);
  Var m = dial_training_message(t.constant(Array::vector({0.0, 2.0})), 0.0, rng);
  EXPECT_DOUBLE_EQ(m.value()[0], 0.5);
  EXPECT_DOUBLE_EQ(m.value()[1], 1.0 / (1.0 + std::exp(-2.0)));
}

SwitchLearnerConfig tiny_switch(SwitchAlgorithm alg) {
  SwitchLearnerConfig c;
  c.n_agents = 3;
  c.algorithm = alg;
  c.hidden = 8;
  c.batch_episodes = 4;
  c.epsilon = EpsilonSchedule{0.5, 0.5, 0};
  return c;
}

TEST(SwitchLearner, GradientSplitsIntoRewardAndMessagePaths) {
  SwitchLearner learner(tiny_switch(SwitchAlgorithm::kDial), 3);
  const GradientSplit g = learner.gradient_split();
  double message_path_norm = 0.0;
  for (const auto& [name, total] : g.total) {
    Array sum = g.reward_path.at(name);
    sum += g.message_path.at(name);
    EXPECT_LE(nn::max_abs_diff(total, sum), 1e-10) << name;
    message_path_norm += nn::global_norm({{name, g.message_path.at(name)}});
  }
  EXPECT_GT(message_path_norm, 0.0);
  // With the channel severed nothing reaches the message head.
  for (const std::string name : {"msg/w", "msg/b"}) {
    EXPECT_EQ(nn::global_norm({{name, g.reward_path.at(name)}}), 0.0);
    EXPECT_GT(nn::global_norm({{name, g.total.at(name)}}), 0.0);
  }
}

TEST(SwitchLearner, SingleSharedStoreServesEveryAgent) {
  SwitchLearner learner(tiny_switch(SwitchAlgorithm::kDdrqn), 0);
  const std::size_t before = learner.params().scalar_count();
  learner.update();
  EXPECT_EQ(learner.params().scalar_count(), before);
  EXPECT_FALSE(learner.params().contains("msg/w"));
  EXPECT_EQ(learner.params().version(), 1u);
  EXPECT_EQ(learner.episodes(), 4u);
}

TEST(SwitchLearner, GreedyEvaluationIsDeterministic) {
  SwitchLearner a(tiny_switch(SwitchAlgorithm::kDial), 5);
  SwitchLearner b(tiny_switch(SwitchAlgorithm::kDial), 5);
  a.update();
  b.update();
  EXPECT_EQ(a.params(), b.params());
  EXPECT_EQ(a.evaluate(EvalChannel::kDiscrete), b.evaluate(EvalChannel::kDiscrete));
  EXPECT_EQ(a.evaluate(EvalChannel::kReal, 200, 3), a.evaluate(EvalChannel::kReal, 200, 3));
}

TEST(SwitchLearner, ExactEvaluationAgreesWithSampling) {
  SwitchLearnerConfig c = tiny_switch(SwitchAlgorithm::kDial);
  SwitchLearner exact(c, 2);
  c.exact_eval_limit = 0;
  SwitchLearner sampled(c, 2);
  const double e = exact.evaluate(EvalChannel::kDiscrete);
  const double s = sampled.evaluate(EvalChannel::kDiscrete, 20000, 1);
  EXPECT_NEAR(e, s, 4.0 / std::sqrt(20000.0));
}

TEST(SwitchLearner, TraceFollowsEnvironmentRules) {
  SwitchLearner learner(tiny_switch(SwitchAlgorithm::kDial), 1);
  const env::EpisodeTrace tr = learner.trace(EvalChannel::kDiscrete, 5, 9);
  ASSERT_FALSE(tr.records.empty());
  for (const auto& r : tr.records) {
    int acting = 0;
    for (int a : r.actions) acting += a != 0;
    EXPECT_LE(acting, 1);
    EXPECT_EQ(r.posterior.size(), 3u);
    for (const auto& m : r.messages) {
      ASSERT_EQ(m.size(), 1u);
      EXPECT_TRUE(m[0] == 0.0 || m[0] == 1.0);
    }
  }
}

TEST(CommNetLayer, ScalarHandExample) {
  Tape t;
  Var h = t.constant(Array::matrix(3, 1, {1.0, 2.0, 3.0}));
  Var one = t.constant(Array::matrix(1, 1, {1.0}));
  const Array out = commnet_layer(h, one, one, Nonlinearity::kIdentity, 3).value();
  EXPECT_DOUBLE_EQ(out[0], 3.5);
  EXPECT_DOUBLE_EQ(out[1], 4.0);
  EXPECT_DOUBLE_EQ(out[2], 4.5);
}

TEST(CommNetLayer, ZeroCommunicationMatrixLeavesAgentsIndependent) {
  Rng rng(2);
  std::normal_distribution<double> g;
  Array h({4, 3}), hm({3, 3});
  for (double& v : h.data()) v = g(rng);
  for (double& v : hm.data()) v = g(rng);
  Tape t;
  const Array out =
      commnet_layer(t.constant(h), t.constant(Array({3, 3})), t.constant(hm), Nonlinearity::kIdentity, 4).value();
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t j = 0; j < 3; ++j) {
      double expected = 0.0;
      for (std::size_t i = 0; i < 3; ++i) expected += h(m, i) * hm(i, j);
      EXPECT_NEAR(out(m, j), expected, 1e-14);
    }
}

TEST(CommNetLayer, PermutationEquivariant) {
  // Dyadic entries and five agents (mean weight 1/4) keep every product and
  // partial sum exact, so the comparison can be bitwise.
  Rng rng(5);
  std::uniform_int_distribution<int> g(-16, 16);
  const std::size_t agents = 5, d = 3;
  Array h({2 * agents, d}), c({d, d}), hm({d, d});
  for (Array* a : {&h, &c, &hm})
    for (double& v : a->data()) v = g(rng) / 8.0;
  const std::vector<std::size_t> perm{2, 0, 4, 3, 1};
  Array hp({2 * agents, d});
  for (std::size_t grp = 0; grp < 2; ++grp)
    for (std::size_t m = 0; m < agents; ++m)
      for (std::size_t j = 0; j < d; ++j) hp(grp * agents + m, j) = h(grp * agents + perm[m], j);
  for (auto f : {Nonlinearity::kTanh, Nonlinearity::kRelu, Nonlinearity::kSigmoid, Nonlinearity::kIdentity}) {
    Tape t;
    const Array out = commnet_layer(t.constant(h), t.constant(c), t.constant(hm), f, agents).value();
    const Array outp = commnet_layer(t.constant(hp), t.constant(c), t.constant(hm), f, agents).value();
    for (std::size_t grp = 0; grp < 2; ++grp)
      for (std::size_t m = 0; m < agents; ++m)
        for (std::size_t j = 0; j < d; ++j) EXPECT_EQ(outp(grp * agents + m, j), out(grp * agents + perm[m], j));
  }
}

TEST(CommNetLayer, PermutationEquivariantToRounding) {
  Rng rng(6);
  std::normal_distribution<double> g;
  const std::size_t agents = 4, d = 3;
  Array h({agents, d}), c({d, d}), hm({d, d});
  for (Array* a : {&h, &c, &hm})
    for (double& v : a->data()) v = g(rng);
  const std::vector<std::size_t> perm{3, 1, 0, 2};
  Array hp({agents, d});
  for (std::size_t m = 0; m < agents; ++m)
    for (std::size_t j = 0; j < d; ++j) hp(m, j) = h(perm[m], j);
  Tape t;
  const Array out = commnet_layer(t.constant(h), t.constant(c), t.constant(hm), Nonlinearity::kTanh, agents).value();
  const Array outp =
      commnet_layer(t.constant(hp), t.constant(c), t.constant(hm), Nonlinearity::kTanh, agents).value();
  for (std::size_t m = 0; m < agents; ++m)
    for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(outp(m, j), out(perm[m], j), 1e-15);
}

TEST(CommNetLayer, RejectsSingleAgent) {
  Tape t;
  Var h = t.constant(Array::matrix(2, 1, {1.0, 2.0}));
  Var one = t.constant(Array::matrix(1, 1, {1.0}));
  EXPECT_THROW(commnet_layer(h, one, one, Nonlinearity::kTanh, 1), ConfigurationError);
  EXPECT_THROW(commnet_layer(h, one, one, Nonlinearity::kTanh, 3), ConfigurationError);
  EXPECT_THROW(CommNetParams::init(1, 2, 4, 3, 2, Nonlinearity::kTanh, 0), ConfigurationError);
}

TEST(CommNetForward, GradientMatchesFiniteDifferences) {
  const auto p = CommNetParams::init(3, 2, 4, 5, 2, Nonlinearity::kTanh, 9);
  Rng rng(1);
  std::normal_distribution<double> g;
  Array x({6, 5});
  for (double& v : x.data()) v = g(rng);
  auto loss = [&](Tape& t, const ParameterStore& s) {
    Var y = commnet_forward(t, p, s, x);
    return nn::sum(nn::mul(y, y));
  };
  const auto rep = nn::finite_diff_check(loss, p.store);
  EXPECT_LT(rep.max_relative_error, 1e-4) << rep.worst_parameter;
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  ParameterStore s;
  Rng rng(3);
  add_mlp(s, "q", {4, 6, 6, 3}, rng);
  Array x({5, 4});
  std::normal_distribution<double> g;
  for (double& v : x.data()) v = g(rng);
  auto loss = [&](Tape& t, const ParameterStore& p) {
    return dqn_loss(nn::pick(mlp_forward(t, p, "q", 3, t.constant(x)), {0, 1, 2, 1, 0}),
                    std::vector<double>{0.5, -1.0, 2.0, 0.0, 1.0});
  };
  const auto rep = nn::finite_diff_check(loss, s);
  EXPECT_LT(rep.max_relative_error, 1e-4) << rep.worst_parameter;
}

TEST(RecurrentPongNet, WindowGradientMatchesFiniteDifferences) {
  PongLearnerConfig c;
  c.hidden = 5;
  c.env.width = 8;
  c.env.height = 6;
  PongLearner l(c, 4);
  const std::size_t width = env::pong_observation_width(c.env);
  Rng rng(9);
  std::normal_distribution<double> g;
  std::vector<Array> inputs(4, Array({3, width}));
  for (auto& x : inputs)
    for (double& v : x.data()) v = g(rng);
  auto loss = [&](Tape& t, const ParameterStore& p) {
    const auto q = l.q_sequence(t, p, inputs);
    Var total = dqn_loss(nn::pick(q[0], {0, 1, 2}), std::vector<double>{0.3, -0.2, 1.0});
    for (std::size_t k = 1; k < q.size(); ++k) {
      total = nn::add(total, dqn_loss(nn::pick(q[k], {2, 0, 1}), std::vector<double>{-0.5, 0.1, 0.4},
                                      std::vector<double>{1.0, k < 3 ? 1.0 : 0.0, 1.0}));
    }
    return total;
  };
  const auto rep = nn::finite_diff_check(loss, l.params(0));
  EXPECT_LT(rep.max_relative_error, 1e-4) << rep.worst_parameter;
}

TEST(RecurrentPongNet, StepwiseActingMatchesWindowUnroll) {
  PongLearnerConfig c;
  c.hidden = 6;
  PongLearner l(c, 1);
  const std::size_t width = env::pong_observation_width(c.env);
  std::vector<Array> inputs;
  auto mem = l.fresh_memory();
  std::vector<std::vector<double>> stepwise;
  for (int t = 0; t < 5; ++t) {
    std::vector<double> o(width);
    for (std::size_t j = 0; j < width; ++j) o[j] = 0.1 * t - 0.05 * static_cast<double>(j);
    inputs.push_back(Array::matrix(1, width, o));
    stepwise.push_back(l.q_values(l.params(0), o, mem));
  }
  Tape t;
  const auto q = l.q_sequence(t, l.params(0), inputs);
  for (int k = 0; k < 5; ++k) {
    const auto& v = q[static_cast<std::size_t>(k)].value().values();
    EXPECT_EQ(std::vector<double>(v.begin(), v.end()), stepwise[static_cast<std::size_t>(k)]);
  }
}

TEST(ReplayBuffer, ChronologicalOrderSurvivesWrap) {
  ReplayBuffer<int> buf(4);
  for (int i = 0; i < 3; ++i) buf.push(i);
  EXPECT_EQ(buf.chronological(2), 2);
  for (int i = 3; i < 7; ++i) buf.push(i);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(buf.chronological(static_cast<std::size_t>(k)), 3 + k);
  EXPECT_THROW(buf.chronological(4), UsageError);
}

TEST(PongLearner, FeedForwardVariantStillTrains) {
  PongLearnerConfig c;
  c.recurrent = false;
  c.warmup = 8;
  c.minibatch = 8;
  PongLearner l(c, 3);
  const ParameterStore before = l.params(0);
  for (int i = 0; i < 5; ++i) l.train_episode();
  ASSERT_GT(l.steps(), 8U);
  EXPECT_NE(l.params(0), before);
  auto mem = l.fresh_memory();
  EXPECT_EQ(l.q_values(l.params(0), std::vector<double>(env::pong_observation_width(c.env), 0.0), mem).size(), 3U);
}

TEST(PongLearner, OneStoreAndBufferPerAgent) {
  PongLearnerConfig c;
  c.env.players = 4;
  c.env.comm_mode = env::CommChannelMode::kPublic;
  PongLearner l(c, 0);
  EXPECT_EQ(l.agent_count(), 4U);
  EXPECT_EQ(l.action_count(), 3U * static_cast<std::size_t>(c.env.alphabet));
  EXPECT_FALSE(&l.params(0) == &l.params(1));
  auto mem = l.fresh_memory();
  EXPECT_EQ(l.q_values(l.params(2), std::vector<double>(env::pong_observation_width(c.env), 0.1), mem).size(),
            l.action_count());
}

TEST(PongLearner, DeterministicForSeed) {
  PongLearnerConfig c;
  c.warmup = 8;
  c.minibatch = 8;
  c.env.max_steps = 80;
  PongLearner a(c, 6), b(c, 6);
  const ParameterStore before = a.params(0);
  for (int i = 0; i < 5; ++i) {
    const auto sa = a.train_episode();
    const auto sb = b.train_episode();
    EXPECT_EQ(sa.returns, sb.returns);
    EXPECT_EQ(sa.steps, sb.steps);
  }
  EXPECT_NE(a.params(0), before);
  EXPECT_EQ(a.params(0), b.params(0));
  EXPECT_EQ(a.params(1), b.params(1));
}

TEST(PongLearner, GreedyEvaluationIsDeterministic) {
  PongLearnerConfig c;
  PongLearner l(c, 2);
  env::EpisodeTrace t1, t2;
  l.evaluate(2, 5, &t1);
  l.evaluate(2, 5, &t2);
  EXPECT_EQ(t1, t2);
}

TEST(PongLearner, RejectsZeroTrainInterval) {
  PongLearnerConfig c;
  c.train_every = 0;
  EXPECT_THROW(PongLearner(c, 0), ConfigurationError);
  c.train_every = 1;
  c.bptt_window = 0;
  EXPECT_THROW(PongLearner(c, 0), ConfigurationError);
}

}  // namespace
}  // namespace emcomm::agents
