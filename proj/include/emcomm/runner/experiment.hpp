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

#include <memory>
#include <optional>
#include <string>

#include "emcomm/agents/pong_learner.hpp"
#include "emcomm/agents/referential_agents.hpp"
#include "emcomm/agents/switch_learner.hpp"
#include "emcomm/metrics/trace_report.hpp"
#include "emcomm/metrics/zero_shot.hpp"
#include "emcomm/runner/config.hpp"
#include "emcomm/runner/state.hpp"

namespace emcomm::runner {

// One logged training step; `count` episodes ending at `episode`.
struct TrainRecord {
  std::size_t episode = 0;
  std::size_t count = 0;
  double mean_return = 0.0;
  std::optional<double> loss;
};

struct Evaluation {
  metrics::EvalReport report;
  env::EpisodeTrace trace;
};

// Uniform face of the three learners for the orchestrator.
class Experiment {
 public:
  virtual ~Experiment() = default;
  virtual std::size_t episodes() const = 0;
  virtual TrainRecord train_step() = 0;
  // Greedy evaluation; the report is computed from the trace alone.
  virtual Evaluation evaluate(std::size_t episodes, std::uint64_t seed) const = 0;
  virtual nn::Checkpoint save() const = 0;
  virtual void restore(const nn::Checkpoint& ckpt) = 0;
};

namespace detail {

inline Evaluation from_trace(env::EpisodeTrace trace) {
  Evaluation e;
  e.report = metrics::report_from_trace(trace);
  e.trace = std::move(trace);
  return e;
}

class SwitchExperiment final : public Experiment {
 public:
  explicit SwitchExperiment(const ExperimentConfig& c)
      : learner_(switch_config(c), c.seed), channel_(switch_eval_channel(c)) {}

  std::size_t episodes() const override { return learner_.episodes(); }

  TrainRecord train_step() override {
    const auto s = learner_.update();
    return {learner_.episodes(), learner_.config().batch_episodes, s.mean_return, s.loss};
  }

  Evaluation evaluate(std::size_t episodes, std::uint64_t seed) const override {
    return from_trace(learner_.trace(channel_, episodes, seed));
  }

  nn::Checkpoint save() const override {
    nn::Checkpoint c;
    c.meta["episodes"] = std::to_string(learner_.episodes());
    state::put_store(c, "online/", learner_.params());
    state::put_store(c, "target/", learner_.target_params());
    state::put_optimizer(c, "adam/", learner_.optimizer());
    state::put_rng(c, "rng_env", learner_.env_rng());
    state::put_rng(c, "rng_agent", learner_.agent_rng());
    return c;
  }

  void restore(const nn::Checkpoint& c) override {
    learner_.set_episodes(state::meta_uint(c, "episodes"));
    state::take_store(c, "online/", learner_.params());
    state::take_store(c, "target/", learner_.target_params());
    state::take_optimizer(c, "adam/", learner_.optimizer());
    state::take_rng(c, "rng_env", learner_.env_rng());
    state::take_rng(c, "rng_agent", learner_.agent_rng());
  }

  agents::SwitchLearner& learner() { return learner_; }

 private:
  agents::SwitchLearner learner_;
  agents::EvalChannel channel_;
};

class ReferentialExperiment final : public Experiment {
 public:
  explicit ReferentialExperiment(const ExperimentConfig& c) : trainer_(referential_config(c), c.seed) {}

  std::size_t episodes() const override { return trainer_.episodes(); }

  TrainRecord train_step() override {
    const double acc = trainer_.update();
    return {trainer_.episodes(), trainer_.config().batch_episodes, acc, std::nullopt};
  }

  Evaluation evaluate(std::size_t episodes, std::uint64_t seed) const override {
    const auto& cfg = trainer_.config();
    const auto seen = trainer_.evaluate(env::SplitKind::kTrain, episodes, seed);
    std::vector<agents::ReferentialOutcome> unseen;
    if (!trainer_.split().held_out().empty()) {
      metrics::check_no_leak(trainer_);
      unseen = trainer_.evaluate(env::SplitKind::kZeroShot, episodes, derive_seed(seed, 1));
    }
    return from_trace(agents::referential_trace(seen, cfg.space, cfg.n_candidates, unseen));
  }

  nn::Checkpoint save() const override {
    const auto& t = trainer_;
    nn::Checkpoint c;
    c.meta["episodes"] = std::to_string(t.episodes());
    c.meta["baseline"] = state::fmt(t.baseline().value);
    std::string touched;
    for (bool b : t.touched()) touched += b ? '1' : '0';
    c.meta["touched"] = touched;
    state::put_store(c, "", t.pair().speaker);
    state::put_store(c, "", t.pair().listener);
    state::put_optimizer(c, "adam_speaker/", t.speaker_optimizer());
    state::put_optimizer(c, "adam_listener/", t.listener_optimizer());
    state::put_rng(c, "rng_env", t.env_rng());
    state::put_rng(c, "rng_agent", t.agent_rng());
    return c;
  }

  void restore(const nn::Checkpoint& c) override {
    trainer_.set_episodes(state::meta_uint(c, "episodes"));
    trainer_.baseline().value = state::meta_double(c, "baseline");
    const std::string& touched = state::meta_at(c, "touched");
    if (touched.size() != trainer_.touched().size()) throw ConfigurationError("checkpoint split registry mismatch");
    for (std::size_t i = 0; i < touched.size(); ++i) trainer_.touched()[i] = touched[i] == '1';
    state::take_store(c, "", trainer_.pair().speaker);
    state::take_store(c, "", trainer_.pair().listener);
    state::take_optimizer(c, "adam_speaker/", trainer_.speaker_optimizer());
    state::take_optimizer(c, "adam_listener/", trainer_.listener_optimizer());
    state::take_rng(c, "rng_env", trainer_.env_rng());
    state::take_rng(c, "rng_agent", trainer_.agent_rng());
  }

  agents::ReferentialTrainer& trainer() { return trainer_; }

 private:
  agents::ReferentialTrainer trainer_;
};

class PongExperiment final : public Experiment {
 public:
  explicit PongExperiment(const ExperimentConfig& c) : learner_(pong_config(c), c.seed) {}

  std::size_t episodes() const override { return learner_.episodes(); }

  TrainRecord train_step() override {
    const auto s = learner_.train_episode();
    double r = 0.0;
    for (double x : s.returns) r += x;
    return {learner_.episodes(), 1, r / static_cast<double>(s.returns.size()), std::nullopt};
  }

  Evaluation evaluate(std::size_t episodes, std::uint64_t seed) const override {
    env::EpisodeTrace trace;
    learner_.evaluate(episodes, seed, &trace);
    return from_trace(std::move(trace));
  }

  nn::Checkpoint save() const override {
    const auto& l = learner_;
    nn::Checkpoint c;
    c.meta["episodes"] = std::to_string(l.episodes());
    c.meta["steps"] = std::to_string(l.steps());
    for (std::size_t a = 0; a < l.agent_count(); ++a) {
      const std::string p = "agent" + std::to_string(a) + "/";
      state::put_store(c, p + "online/", l.params(a));
      state::put_store(c, p + "target/", l.target_params(a));
      state::put_optimizer(c, p + "adam/", l.optimizer(a));
      state::put_replay(c, p + "replay/", l.replay(a));
    }
    state::put_rng(c, "rng_env", l.env_rng());
    state::put_rng(c, "rng_agent", l.agent_rng());
    return c;
  }

  void restore(const nn::Checkpoint& c) override {
    learner_.set_episodes(state::meta_uint(c, "episodes"));
    learner_.set_steps(state::meta_uint(c, "steps"));
    for (std::size_t a = 0; a < learner_.agent_count(); ++a) {
      const std::string p = "agent" + std::to_string(a) + "/";
      state::take_store(c, p + "online/", learner_.params(a));
      state::take_store(c, p + "target/", learner_.target_params(a));
      state::take_optimizer(c, p + "adam/", learner_.optimizer(a));
      state::take_replay(c, p + "replay/", learner_.replay(a));
    }
    state::take_rng(c, "rng_env", learner_.env_rng());
    state::take_rng(c, "rng_agent", learner_.agent_rng());
  }

  agents::PongLearner& learner() { return learner_; }

 private:
  agents::PongLearner learner_;
};

// Scripted paddles: training episodes are played for the log but nothing
// is learned.
class ScriptedPongExperiment final : public Experiment {
 public:
  explicit ScriptedPongExperiment(const ExperimentConfig& c)
      : config_(pong_env_config(c)),
        policy_(agents::scripted_pong_from_string(c.algorithm.at("policy").get<std::string>())),
        seed_(derive_seed(c.seed, Stream::kEnvironment)) {}

  std::size_t episodes() const override { return episodes_; }

  TrainRecord train_step() override {
    const auto s = agents::scripted_pong_play(config_, policy_, 1, derive_seed(seed_, episodes_));
    ++episodes_;
    double r = 0.0;
    for (double x : s.returns) r += x;
    return {episodes_, 1, r / static_cast<double>(s.returns.size()), std::nullopt};
  }

  Evaluation evaluate(std::size_t episodes, std::uint64_t seed) const override {
    env::EpisodeTrace trace;
    agents::scripted_pong_play(config_, policy_, episodes, seed, &trace);
    return from_trace(std::move(trace));
  }

  nn::Checkpoint save() const override {
    nn::Checkpoint c;
    c.meta["episodes"] = std::to_string(episodes_);
    return c;
  }

  void restore(const nn::Checkpoint& c) override { episodes_ = state::meta_uint(c, "episodes"); }

 private:
  env::PongConfig config_;
  agents::ScriptedPong policy_;
  std::uint64_t seed_;
  std::size_t episodes_ = 0;
};

}  // namespace detail

inline std::unique_ptr<Experiment> make_experiment(const ExperimentConfig& c) {
  const std::string env = c.environment_kind(), alg = c.algorithm_kind();
  if (env == "switch_riddle") return std::make_unique<detail::SwitchExperiment>(c);
  if (env == "referential") return std::make_unique<detail::ReferentialExperiment>(c);
  if (env == "grid_pong" && alg == "scripted") return std::make_unique<detail::ScriptedPongExperiment>(c);
  if (env == "grid_pong") return std::make_unique<detail::PongExperiment>(c);
  throw ConfigurationError("no experiment for environment '" + env + "'");
}

}  // namespace emcomm::runner
