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
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emcomm/agents/bellman.hpp"
#include "emcomm/agents/dial.hpp"
#include "emcomm/agents/epsilon.hpp"
#include "emcomm/agents/recurrent_qnet.hpp"
#include "emcomm/core/errors.hpp"
#include "emcomm/core/rng.hpp"
#include "emcomm/env/switch_riddle.hpp"
#include "emcomm/env/trace.hpp"
#include "emcomm/nn/optimizer.hpp"

namespace emcomm::agents {

enum class SwitchAlgorithm { kDdrqn, kDial };

inline std::string to_string(SwitchAlgorithm a) { return a == SwitchAlgorithm::kDial ? "dial" : "ddrqn"; }

inline SwitchAlgorithm switch_algorithm_from_string(const std::string& s) {
  if (s == "dial") return SwitchAlgorithm::kDial;
  if (s == "ddrqn") return SwitchAlgorithm::kDdrqn;
  throw ConfigurationError("unknown switch-riddle algorithm: " + s);
}

struct SwitchLearnerConfig {
  int n_agents = 3;
  int max_days = 0;  // 0 selects default_max_days(n_agents)
  SwitchAlgorithm algorithm = SwitchAlgorithm::kDial;
  std::size_t hidden = 64;
  std::size_t message_width = 1;
  double message_noise = 0.5;
  bool day_input = true;
  std::size_t batch_episodes = 32;
  double gamma = 1.0;
  double learning_rate = 5e-3;
  std::size_t target_refresh_episodes = 100;
  EpsilonSchedule epsilon{0.05, 0.05, 0};
  double grad_clip = 10.0;
  // Greedy evaluation enumerates every active-agent schedule when n^days is
  // at most this many episodes; otherwise it samples.
  std::size_t exact_eval_limit = 20000;

  int days() const { return max_days > 0 ? max_days : env::default_max_days(n_agents); }
  bool has_channel() const { return algorithm == SwitchAlgorithm::kDial; }
};

struct SwitchUpdateStats {
  double loss = 0.0;
  double mean_return = 0.0;
  double epsilon = 0.0;
  double grad_norm = 0.0;
};

// Split of one batch gradient into the part that reaches parameters without
// crossing a message edge and the part carried back by recipients' errors.
struct GradientSplit {
  nn::Gradients total;
  nn::Gradients reward_path;
  nn::Gradients message_path;
};

class SwitchLearner {
 public:
  SwitchLearner(SwitchLearnerConfig config, std::uint64_t seed)
      : config_(config),
        net_(make_spec(config)),
        params_(net_.init(seed)),
        target_(params_),
        optimizer_(nn::OptimizerState::adam(config.learning_rate)),
        env_rng_(make_rng(seed, Stream::kEnvironment)),
        agent_rng_(make_rng(seed, Stream::kAgent)) {
    if (config.batch_episodes == 0) throw ConfigurationError("batch_episodes must be positive");
    if (config.gamma < 0.0 || config.gamma > 1.0) throw ConfigurationError("gamma must lie in [0, 1]");
    if (config.has_channel() && config.message_width == 0) {
      throw ConfigurationError("DIAL needs a positive message width");
    }
  }

  const SwitchLearnerConfig& config() const { return config_; }
  const SharedRecurrentQNet& net() const { return net_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }
  nn::ParameterStore& target_params() { return target_; }
  const nn::ParameterStore& target_params() const { return target_; }
  nn::OptimizerState& optimizer() { return optimizer_; }
  const nn::OptimizerState& optimizer() const { return optimizer_; }
  Rng& env_rng() { return env_rng_; }
  const Rng& env_rng() const { return env_rng_; }
  Rng& agent_rng() { return agent_rng_; }
  const Rng& agent_rng() const { return agent_rng_; }
  std::size_t episodes() const { return episodes_; }
  void set_episodes(std::size_t e) { episodes_ = e; }

  // Rolls batch_episodes episodes epsilon-greedily, then one full-episode
  // BPTT step on the shared store against the frozen copy.
  SwitchUpdateStats update() {
    SwitchUpdateStats stats;
    stats.epsilon = config_.epsilon.at(episodes_);
    nn::Tape tape;
    Rollout ro = rollout(fresh_envs(), &tape, params_, stats.epsilon, EvalChannel::kReal, agent_rng_);
    nn::Var loss = td_loss(ro);
    if (!std::isfinite(loss.value()[0])) throw InconsistencyError("non-finite TD loss");
    nn::Gradients g = tape.backward(loss);
    stats.grad_norm = nn::global_norm(g);
    nn::clip_global_norm(g, config_.grad_clip);
    nn::optimizer_step(params_, g, optimizer_);
    stats.loss = loss.value()[0];
    for (double r : ro.returns) stats.mean_return += r;
    stats.mean_return /= static_cast<double>(ro.returns.size());
    const std::size_t before = episodes_ / config_.target_refresh_episodes;
    episodes_ += config_.batch_episodes;
    if (episodes_ / config_.target_refresh_episodes != before) target_.copy_values_from(params_);
    return stats;
  }

  // Gradients of one fresh batch loss, total and split by channel crossing.
  GradientSplit gradient_split() {
    nn::Tape tape;
    Rollout ro = rollout(fresh_envs(), &tape, params_, config_.epsilon.at(episodes_), EvalChannel::kReal,
                         agent_rng_);
    nn::Var loss = td_loss(ro);
    GradientSplit out;
    out.total = tape.backward(loss, nn::ChannelMode::kOpen);
    out.reward_path = tape.backward(loss, nn::ChannelMode::kBlocked);
    const auto seeds = tape.channel_adjoints();
    out.message_path = tape.backward_from_seeds(seeds, nn::ChannelMode::kOpen);
    return out;
  }

  // Episodes used by greedy evaluation: every active-agent schedule when
  // there are at most exact_eval_limit of them, else `episodes` sampled from
  // `seed`. Each episode carries equal weight.
  std::vector<env::SwitchRiddleState> evaluation_episodes(std::size_t episodes, std::uint64_t seed) const {
    const int n = config_.n_agents, days = config_.days();
    std::vector<env::SwitchRiddleState> envs;
    if (auto count = schedule_count(); count && *count <= config_.exact_eval_limit) {
      for (std::size_t code = 0; code < *count; ++code) {
        std::vector<int> sched(static_cast<std::size_t>(days));
        std::size_t c = code;
        for (int d = 0; d < days; ++d) {
          sched[static_cast<std::size_t>(d)] = static_cast<int>(c % static_cast<std::size_t>(n));
          c /= static_cast<std::size_t>(n);
        }
        envs.push_back(env::switch_reset_scheduled(n, days, std::move(sched)));
      }
    } else {
      if (episodes == 0) throw UsageError("evaluation needs at least one episode");
      for (std::size_t i = 0; i < episodes; ++i) envs.push_back(env::switch_reset(n, days, derive_seed(seed, i)));
    }
    return envs;
  }

  // Mean greedy return over evaluation_episodes().
  double evaluate(EvalChannel channel, std::size_t episodes = 2000, std::uint64_t seed = 0) const {
    const std::vector<env::SwitchRiddleState> all = evaluation_episodes(episodes, seed);
    double sum = 0.0;
    Rng unused(0);
    const std::size_t chunk = 512;
    for (std::size_t lo = 0; lo < all.size(); lo += chunk) {
      std::vector<env::SwitchRiddleState> envs(all.begin() + static_cast<std::ptrdiff_t>(lo),
                                               all.begin() + static_cast<std::ptrdiff_t>(std::min(all.size(), lo + chunk)));
      Rollout ro = rollout(std::move(envs), nullptr, params_, 0.0, channel, unused);
      for (double r : ro.returns) sum += r;
    }
    return sum / static_cast<double>(all.size());
  }

  double oracle() const { return env::switch_oracle_exact(config_.n_agents, config_.days()); }

  // Greedy episodes recorded step by step. The posterior is the softmax of
  // the room agent's Q-values over its actions.
  env::EpisodeTrace trace(EvalChannel channel, std::size_t episodes, std::uint64_t seed) const {
    std::vector<env::SwitchRiddleState> envs = evaluation_episodes(episodes, seed);
    episodes = envs.size();
    Rng unused(0);
    Rollout ro = rollout(std::move(envs), nullptr, params_, 0.0, channel, unused, true);
    env::EpisodeTrace out;
    out.environment = "switch_riddle";
    out.meta = {{"n_agents", config_.n_agents}, {"max_days", config_.days()}};
    const std::size_t n = static_cast<std::size_t>(config_.n_agents);
    for (std::size_t b = 0; b < episodes; ++b) {
      for (std::size_t t = 0; t < ro.actions.size(); ++t) {
        if (ro.active[t][b] < 0) break;
        env::TraceRecord rec;
        rec.episode = b;
        rec.step = t;
        for (std::size_t m = 0; m < n; ++m) {
          const std::size_t row = b * n + m;
          std::vector<double> obs(ro.fixed[t].row_ptr(row), ro.fixed[t].row_ptr(row) + env::kSwitchObservationWidth);
          rec.obs_digest.push_back(env::observation_digest(obs));
          rec.actions.push_back(static_cast<int>(ro.actions[t][row]));
          if (config_.has_channel()) {
            const nn::Array& s = ro.sent_values[t];
            rec.messages.emplace_back(s.row_ptr(row), s.row_ptr(row) + s.cols());
          } else {
            rec.messages.emplace_back();
          }
          rec.rewards.push_back(ro.rewards[t][b]);
        }
        rec.done = ro.terminal[t][b];
        rec.info = ro.info[t][b];
        const std::size_t row = b * n + static_cast<std::size_t>(ro.active[t][b]);
        const nn::Array& q = ro.q_values[t];
        nn::Array qa = nn::Array::matrix(1, q.cols(), std::vector<double>(q.row_ptr(row), q.row_ptr(row) + q.cols()));
        nn::Array p = nn::softmax_rows_value(qa);
        rec.posterior.assign(p.values().begin(), p.values().end());
        out.records.push_back(std::move(rec));
      }
    }
    return out;
  }

 private:
  struct Rollout {
    std::vector<nn::Array> fixed;
    std::vector<nn::Array> incoming;
    std::vector<nn::Array> q_values;
    std::vector<nn::Array> sent_values;
    std::vector<nn::Var> q;
    std::vector<std::vector<std::size_t>> actions;
    std::vector<std::vector<int>> active;  // -1 once the episode is over
    std::vector<std::vector<double>> rewards;
    std::vector<std::vector<bool>> terminal;
    std::vector<std::vector<std::map<std::string, double>>> info;
    std::vector<double> returns;
  };

  static RecurrentQNetSpec make_spec(const SwitchLearnerConfig& c) {
    if (c.n_agents < 2) throw ConfigurationError("switch riddle needs at least 2 agents");
    RecurrentQNetSpec s;
    s.observation_width = env::kSwitchObservationWidth;
    s.n_agents = static_cast<std::size_t>(c.n_agents);
    s.n_actions = env::kSwitchActionCount;
    s.message_width = c.has_channel() ? c.message_width : 0;
    s.extra_width = c.day_input ? static_cast<std::size_t>(c.days()) : 0;
    s.hidden = c.hidden;
    return s;
  }

  std::optional<std::size_t> schedule_count() const {
    std::size_t count = 1;
    for (int d = 0; d < config_.days(); ++d) {
      count *= static_cast<std::size_t>(config_.n_agents);
      if (count > config_.exact_eval_limit) return std::nullopt;
    }
    return count;
  }

  std::vector<env::SwitchRiddleState> fresh_envs() {
    std::vector<env::SwitchRiddleState> envs;
    for (std::size_t b = 0; b < config_.batch_episodes; ++b) {
      envs.push_back(env::switch_reset(config_.n_agents, config_.days(), env_rng_()));
    }
    return envs;
  }

  // Steps a batch of episodes in lockstep, one row per (episode, agent).
  // With a graph tape the whole unroll stays differentiable and messages
  // pass through channel nodes; without one each step runs on a scratch tape.
  Rollout rollout(std::vector<env::SwitchRiddleState> envs, nn::Tape* graph, const nn::ParameterStore& params,
                  double epsilon, EvalChannel channel, Rng& rng, bool keep_info = false) const {
    const std::size_t batch = envs.size();
    const std::size_t n = static_cast<std::size_t>(config_.n_agents);
    const std::size_t rows = batch * n;
    const std::size_t days = static_cast<std::size_t>(config_.days());
    const std::size_t mw = net_.spec().message_width;
    Rollout ro;
    ro.returns.assign(batch, 0.0);

    std::optional<nn::Tape> scratch;
    nn::Tape* tape = graph;
    if (!tape) tape = &scratch.emplace();
    nn::LstmState state = net_.initial_state(*tape, rows);
    nn::Var sent_prev;
    nn::Array h_val, c_val;
    std::vector<std::size_t> prev_action(rows, 0);

    for (std::size_t t = 0; t < days; ++t) {
      bool any = false;
      for (const auto& e : envs) any = any || !e.done;
      if (!any) break;
      if (!graph) {
        scratch.emplace();
        tape = &*scratch;
        if (t == 0) {
          state = net_.initial_state(*tape, rows);
        } else {
          state = {tape->constant(h_val), tape->constant(c_val)};
        }
      }

      nn::Array fixed({rows, net_.fixed_width()});
      std::vector<double> day_hot(net_.spec().extra_width, 0.0);
      if (!day_hot.empty()) day_hot[t] = 1.0;
      std::vector<int> active(batch, -1);
      for (std::size_t b = 0; b < batch; ++b) {
        if (!envs[b].done) active[b] = envs[b].active_agent;
        for (std::size_t m = 0; m < n; ++m) {
          const std::size_t row = b * n + m;
          const std::vector<double> obs = env::switch_observation(envs[b], static_cast<int>(m));
          net_.encode(fixed.row_ptr(row), obs, m, t == 0 ? -1 : static_cast<int>(prev_action[row]), day_hot);
        }
      }

      nn::Var incoming;
      if (mw > 0) {
        if (t == 0) {
          incoming = tape->constant(nn::Array::zeros(rows, mw));
        } else {
          std::vector<std::size_t> from(rows);
          const auto& last_active = ro.active[t - 1];
          for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t sender = b * n + static_cast<std::size_t>(std::max(last_active[b], 0));
            for (std::size_t m = 0; m < n; ++m) from[b * n + m] = sender;
          }
          if (graph) {
            incoming = nn::gather_rows(sent_prev, std::move(from));
          } else {
            const nn::Array& prev = ro.sent_values.back();
            nn::Array in({rows, mw});
            for (std::size_t r = 0; r < rows; ++r) std::copy_n(prev.row_ptr(from[r]), mw, in.row_ptr(r));
            incoming = tape->constant(std::move(in));
          }
        }
        ro.incoming.push_back(incoming.value());
      }

      SharedRecurrentQNet::Output out = net_.step(*tape, params, fixed, incoming, state);
      const nn::Array& q = out.q.value();
      std::vector<std::size_t> actions(rows, static_cast<std::size_t>(env::SwitchAction::kNone));
      std::vector<double> rewards(batch, 0.0);
      std::vector<bool> terminal(batch, false);
      std::vector<std::map<std::string, double>> infos(keep_info ? batch : 0);
      for (std::size_t b = 0; b < batch; ++b) {
        if (active[b] < 0) continue;
        const std::size_t row = b * n + static_cast<std::size_t>(active[b]);
        const std::size_t a =
            epsilon_greedy(std::span<const double>(q.row_ptr(row), q.cols()), epsilon, rng);
        actions[row] = a;
        env::StepResult sr = env::switch_step(envs[b], active[b], static_cast<env::SwitchAction>(a));
        rewards[b] = sr.rewards[0];
        terminal[b] = sr.done;
        ro.returns[b] += sr.rewards[0];
        if (keep_info) infos[b] = std::move(sr.info);
      }

      if (mw > 0) {
        if (graph) {
          sent_prev = nn::channel(dial_training_message(out.message, config_.message_noise, rng));
          ro.sent_values.push_back(sent_prev.value());
        } else {
          ro.sent_values.push_back(dial_eval_message(out.message.value(), channel));
        }
      }
      ro.fixed.push_back(std::move(fixed));
      ro.q_values.push_back(q);
      if (graph) ro.q.push_back(out.q);
      ro.actions.push_back(actions);
      ro.active.push_back(std::move(active));
      ro.rewards.push_back(std::move(rewards));
      ro.terminal.push_back(std::move(terminal));
      if (keep_info) ro.info.push_back(std::move(infos));
      prev_action = std::move(actions);
      if (!graph) {
        h_val = out.state.h.value();
        c_val = out.state.c.value();
      }
      state = out.state;
    }
    return ro;
  }

  // Frozen-copy Q-values along the recorded inputs, messages held fixed.
  std::vector<nn::Array> target_q(const Rollout& ro) const {
    std::vector<nn::Array> out;
    const std::size_t rows = ro.fixed.front().rows();
    nn::Array h_val, c_val;
    for (std::size_t t = 0; t < ro.fixed.size(); ++t) {
      nn::Tape tape;
      nn::LstmState state = t == 0 ? net_.initial_state(tape, rows)
                                   : nn::LstmState{tape.constant(h_val), tape.constant(c_val)};
      nn::Var incoming;
      if (net_.spec().message_width > 0) incoming = tape.constant(ro.incoming[t]);
      SharedRecurrentQNet::Output o = net_.step(tape, target_, ro.fixed[t], incoming, state);
      out.push_back(o.q.value());
      h_val = o.state.h.value();
      c_val = o.state.c.value();
    }
    return out;
  }

  // Mean squared TD error over every live (episode, agent, day) row. Agents
  // outside the room have None as their only legal action.
  nn::Var td_loss(const Rollout& ro) const {
    const std::vector<nn::Array> next = target_q(ro);
    const std::size_t n = static_cast<std::size_t>(config_.n_agents);
    const std::size_t batch = ro.returns.size();
    const std::size_t rows = batch * n;
    nn::Tape& tape = ro.q.front().tape();
    nn::Var total;
    double count = 0.0;
    for (std::size_t t = 0; t < ro.q.size(); ++t) {
      std::vector<double> y(rows, 0.0), mask(rows, 0.0);
      for (std::size_t b = 0; b < batch; ++b) {
        if (ro.active[t][b] < 0) continue;
        for (std::size_t m = 0; m < n; ++m) {
          const std::size_t row = b * n + m;
          mask[row] = 1.0;
          const bool done = ro.terminal[t][b];
          double boot = 0.0;
          if (!done) {
            const nn::Array& qn = next[t + 1];
            const bool in_room = ro.active[t + 1][b] == static_cast<int>(m);
            boot = in_room ? *std::max_element(qn.row_ptr(row), qn.row_ptr(row) + qn.cols())
                           : qn(row, static_cast<std::size_t>(env::SwitchAction::kNone));
          }
          y[row] = done ? ro.rewards[t][b] : ro.rewards[t][b] + config_.gamma * boot;
        }
      }
      nn::Var chosen = nn::pick(ro.q[t], ro.actions[t]);
      nn::Var diff = nn::sub(chosen, tape.constant(nn::Array({rows, 1}, y)));
      nn::Var term = nn::sum(nn::mul(nn::square(diff), tape.constant(nn::Array({rows, 1}, mask))));
      for (double v : mask) count += v;
      total = total.valid() ? nn::add(total, term) : term;
    }
    return nn::scale(total, 1.0 / count);
  }

  SwitchLearnerConfig config_;
  SharedRecurrentQNet net_;
  nn::ParameterStore params_;
  nn::ParameterStore target_;
  nn::OptimizerState optimizer_;
  Rng env_rng_;
  Rng agent_rng_;
  std::size_t episodes_ = 0;
};

}  // namespace emcomm::agents
