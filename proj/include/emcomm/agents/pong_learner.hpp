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
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "emcomm/agents/bellman.hpp"
#include "emcomm/agents/epsilon.hpp"
#include "emcomm/agents/mlp.hpp"
#include "emcomm/agents/replay_buffer.hpp"
#include "emcomm/core/errors.hpp"
#include "emcomm/core/rng.hpp"
#include "emcomm/env/grid_pong.hpp"
#include "emcomm/env/trace.hpp"
#include "emcomm/nn/layers.hpp"
#include "emcomm/nn/optimizer.hpp"

namespace emcomm::agents {

struct PongLearnerConfig {
  env::PongConfig env{};
  std::size_t hidden = 64;
  double gamma = 0.99;
  double learning_rate = 1e-3;
  std::size_t replay_capacity = 50000;
  std::size_t minibatch = 32;
  std::size_t warmup = 1000;
  std::size_t train_every = 1;  // environment steps per learning step
  std::size_t target_refresh_steps = 1000;
  EpsilonSchedule epsilon{1.0, 0.05, 2000};
  double grad_clip = 10.0;
  // DRQN: recurrent trunk trained on replayed windows of bptt_window steps
  // from a zero state. Off: feed-forward DQN on single transitions.
  bool recurrent = true;
  std::size_t bptt_window = 20;
};

// Aggregate of played episodes.
struct PongPlayStats {
  std::size_t episodes = 0;
  std::size_t steps = 0;
  std::size_t points = 0;
  std::size_t bounces = 0;
  std::vector<double> returns;  // summed per agent

  double bounce_rate() const { return points == 0 ? std::nan("") : static_cast<double>(bounces) / points; }
};

// Independent DQN: every agent owns its network, frozen copy, replay buffer
// and optimizer, and treats the others as part of the environment. With a
// channel the action is the pair (move, symbol), flattened move * K + symbol.
class PongLearner {
 public:
  PongLearner(PongLearnerConfig config, std::uint64_t seed)
      : config_(config), env_rng_(make_rng(seed, Stream::kEnvironment)), agent_rng_(make_rng(seed, Stream::kAgent)) {
    env::validate(config.env);
    if (config.train_every == 0 || config.minibatch == 0 || config.target_refresh_steps == 0 ||
        (config.recurrent && config.bptt_window == 0)) {
      throw ConfigurationError("train_every, minibatch, target_refresh_steps and bptt_window must be positive");
    }
    Rng init = make_rng(seed, Stream::kAgent);
    init.discard(1);
    const std::size_t in = env::pong_observation_width(config.env);
    for (int a = 0; a < config.env.players; ++a) {
      Agent ag{{}, {}, nn::OptimizerState::adam(config.learning_rate), ReplayBuffer<Experience>(config.replay_capacity)};
      if (config.recurrent) {
        nn::add_lstm(ag.params, "q/lstm", in, config.hidden, init);
        add_mlp(ag.params, "q", {config.hidden, config.hidden, action_count()}, init);
      } else {
        add_mlp(ag.params, "q", {in, config.hidden, config.hidden, action_count()}, init);
      }
      ag.target = ag.params;
      agents_.push_back(std::move(ag));
    }
  }

  const PongLearnerConfig& config() const { return config_; }
  std::size_t agent_count() const { return agents_.size(); }
  nn::ParameterStore& params(std::size_t agent) { return agents_.at(agent).params; }
  const nn::ParameterStore& params(std::size_t agent) const { return agents_.at(agent).params; }
  nn::ParameterStore& target_params(std::size_t agent) { return agents_.at(agent).target; }
  const nn::ParameterStore& target_params(std::size_t agent) const { return agents_.at(agent).target; }
  nn::OptimizerState& optimizer(std::size_t agent) { return agents_.at(agent).optimizer; }
  const nn::OptimizerState& optimizer(std::size_t agent) const { return agents_.at(agent).optimizer; }
  ReplayBuffer<Experience>& replay(std::size_t agent) { return agents_.at(agent).replay; }
  const ReplayBuffer<Experience>& replay(std::size_t agent) const { return agents_.at(agent).replay; }
  Rng& env_rng() { return env_rng_; }
  const Rng& env_rng() const { return env_rng_; }
  Rng& agent_rng() { return agent_rng_; }
  const Rng& agent_rng() const { return agent_rng_; }
  std::size_t episodes() const { return episodes_; }
  void set_episodes(std::size_t e) { episodes_ = e; }
  std::size_t steps() const { return steps_; }
  void set_steps(std::size_t s) { steps_ = s; }

  std::size_t symbols() const {
    return config_.env.comm_mode == env::CommChannelMode::kNone ? 1 : static_cast<std::size_t>(config_.env.alphabet);
  }
  std::size_t action_count() const { return env::kPongActionCount * symbols(); }

  // One epsilon-greedy episode; every agent learns from its replay buffer
  // every `train_every` environment steps.
  PongPlayStats train_episode() {
    const double eps = config_.epsilon.at(episodes_);
    env::GridPongState s = env::pong_reset(config_.env, env_rng_());
    PongPlayStats stats;
    stats.returns.assign(agents_.size(), 0.0);
    std::vector<std::vector<double>> obs = env::pong_observations(s);
    std::vector<Memory> mem(agents_.size(), fresh_memory());
    while (!s.done) {
      std::vector<std::size_t> joint(agents_.size());
      for (std::size_t a = 0; a < agents_.size(); ++a) {
        joint[a] = epsilon_greedy(q_values(agents_[a].params, obs[a], mem[a]), eps, agent_rng_);
      }
      env::StepResult r = play_step(s, joint);
      tally(stats, r);
      const bool terminal = r.info.contains("point") && !r.info.contains("truncated");
      for (std::size_t a = 0; a < agents_.size(); ++a) {
        agents_[a].replay.push(Experience{obs[a], joint[a], r.rewards[a], r.observations[a], terminal, r.done});
      }
      if (terminal) mem.assign(agents_.size(), fresh_memory());
      obs = r.observations;
      ++steps_;
      if (steps_ % config_.train_every == 0)
        for (Agent& ag : agents_) learn(ag);
      if (steps_ % config_.target_refresh_steps == 0)
        for (Agent& ag : agents_) ag.target.copy_values_from(ag.params);
    }
    ++episodes_;
    ++stats.episodes;
    return stats;
  }

  // Greedy play on evaluation seeds; optionally records a trace.
  PongPlayStats evaluate(std::size_t episodes, std::uint64_t seed, env::EpisodeTrace* trace = nullptr) const {
    PongPlayStats stats;
    stats.returns.assign(agents_.size(), 0.0);
    if (trace) {
      trace->environment = "grid_pong";
      trace->meta = {{"players", config_.env.players}, {"rho", config_.env.rho}};
    }
    for (std::size_t e = 0; e < episodes; ++e) {
      env::GridPongState s = env::pong_reset(config_.env, derive_seed(seed, e));
      std::vector<std::vector<double>> obs = env::pong_observations(s);
      std::vector<Memory> mem(agents_.size(), fresh_memory());
      std::size_t t = 0;
      while (!s.done) {
        std::vector<std::size_t> joint(agents_.size());
        for (std::size_t a = 0; a < agents_.size(); ++a) {
          joint[a] = greedy_action(q_values(agents_[a].params, obs[a], mem[a]));
        }
        env::StepResult r = play_step(s, joint);
        tally(stats, r);
        if (r.info.contains("point") && !r.info.contains("truncated")) mem.assign(agents_.size(), fresh_memory());
        if (trace) {
          env::TraceRecord rec;
          rec.episode = e;
          rec.step = t;
          for (std::size_t a = 0; a < agents_.size(); ++a) {
            rec.obs_digest.push_back(env::observation_digest(obs[a]));
            rec.actions.push_back(static_cast<int>(joint[a] / symbols()));
            if (symbols() > 1) {
              rec.messages.push_back({static_cast<double>(joint[a] % symbols())});
            } else {
              rec.messages.emplace_back();
            }
          }
          rec.rewards = r.rewards;
          rec.done = r.done;
          rec.info = r.info;
          trace->records.push_back(std::move(rec));
        }
        obs = r.observations;
        ++t;
      }
      ++stats.episodes;
    }
    return stats;
  }

  // Recurrent state of one acting agent (empty when feed-forward).
  struct Memory {
    nn::Array h;
    nn::Array c;
  };

  Memory fresh_memory() const {
    if (!config_.recurrent) return {};
    return {nn::Array::zeros(1, config_.hidden), nn::Array::zeros(1, config_.hidden)};
  }

  // Q-values for one observation; advances `mem` for a recurrent net.
  std::vector<double> q_values(const nn::ParameterStore& p, const std::vector<double>& obs, Memory& mem) const {
    nn::Tape tape;
    nn::Var x = tape.constant(nn::Array::matrix(1, obs.size(), obs));
    if (config_.recurrent) {
      const nn::LstmState next =
          nn::gated_recurrent_step(tape, p, "q/lstm", x, {tape.constant(mem.h), tape.constant(mem.c)});
      mem = {next.h.value(), next.c.value()};
      x = next.h;
    }
    nn::Var q = mlp_forward(tape, p, "q", config_.recurrent ? 2 : 3, x);
    return {q.value().values().begin(), q.value().values().end()};
  }

  // Q-values along a batch of windows: rows are windows, inputs[t] the
  // step-t observations (zero rows past a window's end).
  std::vector<nn::Var> q_sequence(nn::Tape& t, const nn::ParameterStore& p, const std::vector<nn::Array>& inputs) const {
    if (!config_.recurrent) throw UsageError("q_sequence needs a recurrent learner");
    if (inputs.empty()) throw UsageError("q_sequence of an empty window");
    const std::size_t rows = inputs.front().rows();
    nn::LstmState st = nn::zero_state(t, rows, config_.hidden);
    std::vector<nn::Var> out;
    for (const auto& x : inputs) {
      st = nn::gated_recurrent_step(t, p, "q/lstm", t.constant(x), st);
      out.push_back(mlp_forward(t, p, "q", 2, st.h));
    }
    return out;
  }

 private:
  struct Agent {
    nn::ParameterStore params;
    nn::ParameterStore target;
    nn::OptimizerState optimizer;
    ReplayBuffer<Experience> replay;
  };

  env::StepResult play_step(env::GridPongState& s, const std::vector<std::size_t>& joint) const {
    std::vector<env::PongAction> moves;
    std::vector<int> msgs;
    for (std::size_t a : joint) {
      moves.push_back(static_cast<env::PongAction>(a / symbols()));
      if (symbols() > 1) msgs.push_back(static_cast<int>(a % symbols()));
    }
    return env::pong_step(s, moves, msgs);
  }

  static void tally(PongPlayStats& stats, const env::StepResult& r) {
    ++stats.steps;
    for (std::size_t a = 0; a < r.rewards.size(); ++a) stats.returns[a] += r.rewards[a];
    if (r.info.contains("point")) {
      ++stats.points;
      stats.bounces += static_cast<std::size_t>(r.info.at("point_bounces"));
    }
  }

  void learn(Agent& ag) {
    if (ag.replay.size() < std::max(config_.warmup, config_.minibatch)) return;
    if (config_.recurrent) {
      learn_sequences(ag);
      return;
    }
    const auto batch = ag.replay.sample(config_.minibatch, agent_rng_);
    const std::size_t width = batch.front()->state.size();
    nn::Array s({batch.size(), width}), s2({batch.size(), width});
    std::vector<std::size_t> actions;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      std::copy(batch[i]->state.begin(), batch[i]->state.end(), s.row_ptr(i));
      std::copy(batch[i]->next_state.begin(), batch[i]->next_state.end(), s2.row_ptr(i));
      actions.push_back(batch[i]->action);
    }
    std::vector<double> y;
    {
      nn::Tape t;
      const nn::Array qn = mlp_forward(t, ag.target, "q", 3, t.constant(s2)).value();
      for (std::size_t i = 0; i < batch.size(); ++i) {
        y.push_back(bellman_target(batch[i]->reward, batch[i]->done, config_.gamma,
                                   std::span<const double>(qn.row_ptr(i), qn.cols())));
      }
    }
    nn::Tape t;
    nn::Var loss = dqn_loss(nn::pick(mlp_forward(t, ag.params, "q", 3, t.constant(s)), actions), y);
    nn::Gradients g = t.backward(loss);
    nn::clip_global_norm(g, config_.grad_clip);
    nn::optimizer_step(ag.params, g, ag.optimizer);
  }

  // Windows of up to bptt_window consecutive transitions from uniform
  // starting points, cut at episode ends and terminals.
  void learn_sequences(Agent& ag) {
    const std::size_t b = config_.minibatch;
    std::vector<std::vector<const Experience*>> seqs;
    for (std::size_t start : ag.replay.sample_indices(b, agent_rng_)) {
      std::vector<const Experience*> seq;
      for (std::size_t k = start; k < ag.replay.size() && seq.size() < config_.bptt_window; ++k) {
        const Experience& e = ag.replay.chronological(k);
        seq.push_back(&e);
        if (e.done || e.episode_end) break;
      }
      seqs.push_back(std::move(seq));
    }
    std::size_t len = 0;
    for (const auto& q : seqs) len = std::max(len, q.size());
    const std::size_t width = seqs.front().front()->state.size();
    // inputs[t] = s_t; inputs[len] and the step after each window's end
    // hold the final next_state for the target net.
    std::vector<nn::Array> inputs(len + 1, nn::Array::zeros(b, width));
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t t = 0; t < seqs[i].size(); ++t) {
        std::copy(seqs[i][t]->state.begin(), seqs[i][t]->state.end(), inputs[t].row_ptr(i));
      }
      const auto& last = seqs[i].back()->next_state;
      std::copy(last.begin(), last.end(), inputs[seqs[i].size()].row_ptr(i));
    }
    std::vector<std::vector<double>> y(len, std::vector<double>(b, 0.0)), mask(len, std::vector<double>(b, 0.0));
    {
      nn::Tape t;
      const auto qn = q_sequence(t, ag.target, inputs);
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t k = 0; k < seqs[i].size(); ++k) {
          const nn::Array& next = qn[k + 1].value();
          y[k][i] = bellman_target(seqs[i][k]->reward, seqs[i][k]->done, config_.gamma,
                                   std::span<const double>(next.row_ptr(i), next.cols()));
          mask[k][i] = 1.0;
        }
    }
    inputs.pop_back();
    nn::Tape t;
    const auto q = q_sequence(t, ag.params, inputs);
    double count = 0.0;
    for (const auto& m : mask)
      for (double v : m) count += v;
    nn::Var total;
    for (std::size_t k = 0; k < len; ++k) {
      std::vector<std::size_t> actions(b, 0);
      for (std::size_t i = 0; i < b; ++i)
        if (k < seqs[i].size()) actions[i] = seqs[i][k]->action;
      nn::Var step = nn::scale(dqn_loss(nn::pick(q[k], actions), y[k], mask[k]),
                               std::accumulate(mask[k].begin(), mask[k].end(), 0.0) / count);
      total = k == 0 ? step : nn::add(total, step);
    }
    nn::Gradients g = t.backward(total);
    nn::clip_global_norm(g, config_.grad_clip);
    nn::optimizer_step(ag.params, g, ag.optimizer);
  }

  PongLearnerConfig config_;
  std::vector<Agent> agents_;
  Rng env_rng_;
  Rng agent_rng_;
  std::size_t episodes_ = 0;
  std::size_t steps_ = 0;
};

enum class ScriptedPong { kTracker, kStill };

inline std::string to_string(ScriptedPong p) { return p == ScriptedPong::kTracker ? "tracker" : "still"; }

inline ScriptedPong scripted_pong_from_string(const std::string& s) {
  if (s == "tracker") return ScriptedPong::kTracker;
  if (s == "still") return ScriptedPong::kStill;
  throw ConfigurationError("unknown scripted pong policy '" + s + "'");
}

// Hand-written controllers for every paddle; messages, when the channel is
// on, are always symbol 0. Optionally records a trace.
inline PongPlayStats scripted_pong_play(const env::PongConfig& config, ScriptedPong policy, std::size_t episodes,
                                        std::uint64_t seed, env::EpisodeTrace* trace = nullptr) {
  PongPlayStats stats;
  stats.returns.assign(static_cast<std::size_t>(config.players), 0.0);
  if (trace) {
    trace->environment = "grid_pong";
    trace->meta = {{"players", config.players}, {"rho", config.rho}};
  }
  const bool channel = config.comm_mode != env::CommChannelMode::kNone;
  for (std::size_t e = 0; e < episodes; ++e) {
    env::GridPongState s = env::pong_reset(config, derive_seed(seed, e));
    std::vector<std::vector<double>> obs = env::pong_observations(s);
    for (std::size_t t = 0; !s.done; ++t) {
      std::vector<env::PongAction> moves;
      for (std::size_t a = 0; a < s.paddles.size(); ++a) {
        moves.push_back(policy == ScriptedPong::kTracker ? env::scripted_tracker(s, a) : env::PongAction::kStay);
      }
      const std::vector<int> msgs(channel ? s.paddles.size() : 0, 0);
      env::StepResult r = env::pong_step(s, moves, msgs);
      ++stats.steps;
      for (std::size_t a = 0; a < r.rewards.size(); ++a) stats.returns[a] += r.rewards[a];
      if (r.info.contains("point")) {
        ++stats.points;
        stats.bounces += static_cast<std::size_t>(r.info.at("point_bounces"));
      }
      if (trace) {
        env::TraceRecord rec;
        rec.episode = e;
        rec.step = t;
        for (std::size_t a = 0; a < moves.size(); ++a) {
          rec.obs_digest.push_back(env::observation_digest(obs[a]));
          rec.actions.push_back(static_cast<int>(moves[a]));
          if (channel) {
            rec.messages.push_back({0.0});
          } else {
            rec.messages.emplace_back();
          }
        }
        rec.rewards = r.rewards;
        rec.done = r.done;
        rec.info = r.info;
        trace->records.push_back(std::move(rec));
      }
      obs = r.observations;
    }
    ++stats.episodes;
  }
  return stats;
}

}  // namespace emcomm::agents
