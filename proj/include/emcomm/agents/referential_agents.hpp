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
#include <utility>
#include <vector>

#include "emcomm/core/errors.hpp"
#include "emcomm/core/rng.hpp"
#include "emcomm/env/referential.hpp"
#include "emcomm/env/trace.hpp"
#include "emcomm/nn/layers.hpp"
#include "emcomm/nn/ops.hpp"
#include "emcomm/nn/optimizer.hpp"
#include "emcomm/nn/parameter_store.hpp"

namespace emcomm::agents {

using Message = std::vector<int>;

// Symbol 0 is the stop symbol; it is emitted as part of the message.
inline constexpr int kStopSymbol = 0;

// Two separate stores: nothing is shared between speaker and listener.
struct SpeakerListenerPair {
  std::size_t object_width = 0;
  std::size_t alphabet = 0;
  std::size_t max_length = 0;
  std::size_t hidden = 0;
  nn::ParameterStore speaker;
  nn::ParameterStore listener;

  static SpeakerListenerPair init(std::size_t object_width, std::size_t alphabet, std::size_t max_length,
                                  std::size_t hidden, std::uint64_t seed) {
    if (alphabet < 2) throw ConfigurationError("alphabet size K must be at least 2");
    if (max_length < 1) throw ConfigurationError("max message length L must be at least 1");
    if (object_width == 0 || hidden == 0) throw ConfigurationError("speaker/listener widths must be positive");
    SpeakerListenerPair p{object_width, alphabet, max_length, hidden, {}, {}};
    Rng rng = make_rng(seed, Stream::kAgent);
    nn::add_dense(p.speaker, "speaker/obj", object_width, hidden, rng);
    nn::add_lstm(p.speaker, "speaker/rnn", alphabet, hidden, rng);
    nn::add_dense(p.speaker, "speaker/out", hidden, alphabet, rng);
    nn::add_lstm(p.listener, "listener/rnn", alphabet, hidden, rng);
    nn::add_dense(p.listener, "listener/msg", hidden, hidden, rng);
    nn::add_dense(p.listener, "listener/obj", object_width, hidden, rng);
    return p;
  }
};

enum class DecodeMode { kSample, kGreedy };

struct SpeakerOutput {
  std::vector<Message> messages;
  nn::Var log_prob;  // [batch, 1] summed over emitted symbols
  nn::Var entropy;   // [batch, 1] summed over emitted positions
  // Per position, the symbol distribution of every row (rows that already
  // stopped included); each row sums to one.
  std::vector<nn::Array> distributions;
};

// Autoregressive decoding for a batch of target encodings [batch, width].
// The object embedding initialises the hidden state; the first input is all
// zeros and later inputs are the previous symbol.
inline SpeakerOutput speaker_generate(nn::Tape& tape, const SpeakerListenerPair& pair,
                                      const nn::ParameterStore& speaker, const nn::Array& targets,
                                      DecodeMode mode, Rng& rng) {
  const std::size_t batch = targets.rows();
  const std::size_t k = pair.alphabet;
  if (targets.cols() != pair.object_width) throw ConfigurationError("speaker input width mismatch");
  SpeakerOutput out;
  out.messages.assign(batch, {});
  nn::LstmState state{nn::tanh(nn::dense(tape, speaker, "speaker/obj", tape.constant(targets))),
                      tape.constant(nn::Array::zeros(batch, pair.hidden))};
  nn::Array input = nn::Array::zeros(batch, k);
  std::vector<bool> alive(batch, true);
  for (std::size_t pos = 0; pos < pair.max_length; ++pos) {
    state = nn::gated_recurrent_step(tape, speaker, "speaker/rnn", tape.constant(input), state);
    nn::Var logits = nn::dense(tape, speaker, "speaker/out", state.h);
    nn::Var logp = nn::log_softmax_rows(logits);
    const nn::Array probs = nn::softmax_rows_value(logits.value());
    out.distributions.push_back(probs);
    std::vector<std::size_t> symbols(batch, 0);
    nn::Array mask({batch, 1});
    input = nn::Array::zeros(batch, k);
    for (std::size_t b = 0; b < batch; ++b) {
      if (!alive[b]) continue;
      mask[b] = 1.0;
      std::size_t s = 0;
      if (mode == DecodeMode::kGreedy) {
        for (std::size_t j = 1; j < k; ++j)
          if (probs(b, j) > probs(b, s)) s = j;
      } else {
        std::discrete_distribution<std::size_t> d(probs.row_ptr(b), probs.row_ptr(b) + k);
        s = d(rng);
      }
      symbols[b] = s;
      out.messages[b].push_back(static_cast<int>(s));
      input(b, s) = 1.0;
      if (static_cast<int>(s) == kStopSymbol) alive[b] = false;
    }
    nn::Var m = tape.constant(mask);
    nn::Var lp = nn::mul(nn::pick(logp, symbols), m);
    nn::Var ent = nn::mul(nn::softmax_entropy_rows(logits), m);
    out.log_prob = out.log_prob.valid() ? nn::add(out.log_prob, lp) : lp;
    out.entropy = out.entropy.valid() ? nn::add(out.entropy, ent) : ent;
  }
  return out;
}

struct ListenerOutput {
  std::vector<std::size_t> choices;
  nn::Var log_prob;           // [batch, 1] log-probability of the choice
  nn::Array distribution;     // [batch, n_candidates]
  // Listener distribution after each message prefix (filled on request).
  std::vector<nn::Array> prefix_distributions;
};

// Encodes each message with the listener's recurrent cell (rows stop
// updating after their last symbol), then scores candidate u against v by
// dot product. `candidates` holds n_candidates consecutive rows per episode.
inline ListenerOutput listener_choose(nn::Tape& tape, const SpeakerListenerPair& pair,
                                      const nn::ParameterStore& listener, const std::vector<Message>& messages,
                                      const nn::Array& candidates, std::size_t n_candidates, DecodeMode mode,
                                      Rng& rng, bool with_prefixes = false) {
  const std::size_t batch = messages.size();
  if (n_candidates < 2) throw ConfigurationError("listener needs at least 2 candidates");
  if (candidates.rows() != batch * n_candidates || candidates.cols() != pair.object_width) {
    throw ConfigurationError("candidate block does not match the batch");
  }
  std::size_t longest = 0;
  for (const Message& m : messages) {
    if (m.empty()) throw ConfigurationError("empty message");
    longest = std::max(longest, m.size());
  }
  nn::Var u = nn::dense(tape, listener, "listener/obj", tape.constant(candidates));
  std::vector<std::size_t> owner(batch * n_candidates);
  for (std::size_t r = 0; r < owner.size(); ++r) owner[r] = r / n_candidates;
  auto score = [&](const nn::Var& h) {
    nn::Var v = nn::dense(tape, listener, "listener/msg", h);
    return nn::reshape(nn::rowwise_dot(u, nn::gather_rows(v, owner)), {batch, n_candidates});
  };
  ListenerOutput out;
  nn::LstmState state = nn::zero_state(tape, batch, pair.hidden);
  for (std::size_t pos = 0; pos < longest; ++pos) {
    nn::Array x = nn::Array::zeros(batch, pair.alphabet);
    std::vector<bool> active(batch, false);
    for (std::size_t b = 0; b < batch; ++b) {
      if (pos >= messages[b].size()) continue;
      const int s = messages[b][pos];
      if (s < 0 || static_cast<std::size_t>(s) >= pair.alphabet) throw ConfigurationError("symbol outside alphabet");
      x(b, static_cast<std::size_t>(s)) = 1.0;
      active[b] = true;
    }
    nn::LstmState next = nn::gated_recurrent_step(tape, listener, "listener/rnn", tape.constant(x), state);
    state = {nn::select_rows(active, next.h, state.h), nn::select_rows(active, next.c, state.c)};
    if (with_prefixes) out.prefix_distributions.push_back(nn::softmax_rows_value(score(state.h).value()));
  }
  nn::Var scores = score(state.h);
  nn::Var logp = nn::log_softmax_rows(scores);
  out.distribution = nn::softmax_rows_value(scores.value());
  for (std::size_t b = 0; b < batch; ++b) {
    const double* p = out.distribution.row_ptr(b);
    std::size_t c = 0;
    if (mode == DecodeMode::kGreedy) {
      for (std::size_t j = 1; j < n_candidates; ++j)
        if (p[j] > p[c]) c = j;
    } else {
      c = std::discrete_distribution<std::size_t>(p, p + n_candidates)(rng);
    }
    out.choices.push_back(c);
  }
  out.log_prob = nn::pick(logp, out.choices);
  return out;
}

struct ReinforceConfig {
  double baseline_decay = 0.99;
  double entropy_coef = 0.01;
};

// Moving-average reward baseline.
struct BaselineState {
  double value = 0.0;

  void observe(const std::vector<double>& rewards, double decay) {
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());
    value = decay * value + (1.0 - decay) * mean;
  }
};

// Surrogate whose gradient is the score-function estimator:
//   -mean_b[(r_b - baseline) * log p_b] - entropy_coef * mean_b[H_b]
inline nn::Var reinforce_loss(const nn::Var& log_prob, const std::vector<double>& rewards, double baseline,
                              const nn::Var& entropy = {}, double entropy_coef = 0.0) {
  const std::size_t batch = log_prob.value().rows();
  if (rewards.size() != batch || batch == 0) throw UsageError("reinforce_loss reward count mismatch");
  nn::Array adv({batch, 1});
  for (std::size_t b = 0; b < batch; ++b) adv[b] = rewards[b] - baseline;
  nn::Tape& t = log_prob.tape();
  nn::Var loss = nn::scale(nn::sum(nn::mul(log_prob, t.constant(std::move(adv)))), -1.0 / static_cast<double>(batch));
  if (entropy.valid() && entropy_coef != 0.0) {
    loss = nn::sub(loss, nn::scale(nn::sum(entropy), entropy_coef / static_cast<double>(batch)));
  }
  return loss;
}

struct ReferentialGradients {
  nn::Gradients speaker;
  nn::Gradients listener;
};

// Splits one backward pass over the joint surrogate into the two stores.
inline ReferentialGradients reinforce_update(nn::Tape& tape, const nn::Var& loss) {
  ReferentialGradients g;
  for (auto& [name, grad] : tape.backward(loss)) {
    (name.rfind("speaker/", 0) == 0 ? g.speaker : g.listener).emplace(name, std::move(grad));
  }
  return g;
}

struct ReferentialConfig {
  env::AttributeSpace space{};
  double held_out_fraction = 0.2;
  std::size_t n_candidates = 2;
  std::size_t alphabet = 10;
  std::size_t max_length = 2;
  std::size_t hidden = 64;
  std::size_t batch_episodes = 8;
  double learning_rate = 2e-3;
  ReinforceConfig reinforce{};
};

struct ReferentialOutcome {
  Message message;
  env::AttributeObject target;
  std::size_t choice = 0;
  std::size_t target_index = 0;
  bool success = false;
  std::vector<double> listener_posterior;
  // Listener distribution after each received symbol.
  std::vector<std::vector<double>> prefix_posteriors;
};

class ReferentialTrainer {
 public:
  ReferentialTrainer(ReferentialConfig config, std::uint64_t seed)
      : config_(config),
        split_(config.space, config.held_out_fraction, derive_seed(seed, Stream::kSplit)),
        pair_(SpeakerListenerPair::init(config.space.encoding_width(), config.alphabet, config.max_length,
                                        config.hidden, seed)),
        speaker_opt_(nn::OptimizerState::adam(config.learning_rate)),
        listener_opt_(nn::OptimizerState::adam(config.learning_rate)),
        env_rng_(make_rng(seed, Stream::kEnvironment)),
        agent_rng_(make_rng(seed, Stream::kAgent)),
        touched_(static_cast<std::size_t>(config.space.size()), false) {
    if (config.batch_episodes == 0) throw ConfigurationError("batch_episodes must be positive");
  }

  const ReferentialConfig& config() const { return config_; }
  const env::CombinationSplit& split() const { return split_; }
  SpeakerListenerPair& pair() { return pair_; }
  const SpeakerListenerPair& pair() const { return pair_; }
  const BaselineState& baseline() const { return baseline_; }
  BaselineState& baseline() { return baseline_; }
  nn::OptimizerState& speaker_optimizer() { return speaker_opt_; }
  const nn::OptimizerState& speaker_optimizer() const { return speaker_opt_; }
  nn::OptimizerState& listener_optimizer() { return listener_opt_; }
  const nn::OptimizerState& listener_optimizer() const { return listener_opt_; }
  Rng& env_rng() { return env_rng_; }
  const Rng& env_rng() const { return env_rng_; }
  Rng& agent_rng() { return agent_rng_; }
  const Rng& agent_rng() const { return agent_rng_; }
  std::size_t episodes() const { return episodes_; }
  void set_episodes(std::size_t e) { episodes_ = e; }
  // Every object index that has appeared as a candidate during training.
  const std::vector<bool>& touched() const { return touched_; }
  std::vector<bool>& touched() { return touched_; }

  // One batch of sampled games and one update of both agents. Returns the
  // batch success rate.
  double update() {
    std::vector<env::ReferentialSample> samples;
    for (std::size_t b = 0; b < config_.batch_episodes; ++b) {
      samples.push_back(env::referential_sample(split_, config_.n_candidates, env::SplitKind::kTrain, env_rng_));
      for (const auto& o : samples.back().candidates) touched_[static_cast<std::size_t>(split_.space().index(o))] = true;
    }
    nn::Tape tape;
    Played p = play(tape, samples, DecodeMode::kSample, agent_rng_);
    nn::Var loss = reinforce_loss(nn::add(p.speaker.log_prob, p.listener.log_prob), p.rewards, baseline_.value,
                                  p.speaker.entropy, config_.reinforce.entropy_coef);
    ReferentialGradients g = reinforce_update(tape, loss);
    nn::optimizer_step(pair_.speaker, g.speaker, speaker_opt_);
    nn::optimizer_step(pair_.listener, g.listener, listener_opt_);
    baseline_.observe(p.rewards, config_.reinforce.baseline_decay);
    episodes_ += samples.size();
    double acc = 0.0;
    for (double r : p.rewards) acc += r;
    return acc / static_cast<double>(p.rewards.size());
  }

  // Greedy speaker and argmax listener on fresh samples of the given kind.
  std::vector<ReferentialOutcome> evaluate(env::SplitKind kind, std::size_t episodes, std::uint64_t seed) const {
    Rng rng(derive_seed(seed, Stream::kEvaluation));
    std::vector<ReferentialOutcome> out;
    const std::size_t chunk = 256;
    while (out.size() < episodes) {
      std::vector<env::ReferentialSample> samples;
      for (std::size_t b = 0; b < std::min(chunk, episodes - out.size()); ++b) {
        samples.push_back(env::referential_sample(split_, config_.n_candidates, kind, rng));
      }
      nn::Tape tape;
      Played p = play(tape, samples, DecodeMode::kGreedy, rng, true);
      for (std::size_t b = 0; b < samples.size(); ++b) {
        ReferentialOutcome o;
        o.message = p.speaker.messages[b];
        o.target = samples[b].target();
        o.choice = p.listener.choices[b];
        o.target_index = samples[b].target_index;
        o.success = p.rewards[b] > 0.0;
        const double* d = p.listener.distribution.row_ptr(b);
        o.listener_posterior.assign(d, d + config_.n_candidates);
        for (std::size_t pos = 0; pos < o.message.size(); ++pos) {
          const double* q = p.listener.prefix_distributions[pos].row_ptr(b);
          o.prefix_posteriors.emplace_back(q, q + config_.n_candidates);
        }
        out.push_back(std::move(o));
      }
    }
    return out;
  }

 private:
  struct Played {
    SpeakerOutput speaker;
    ListenerOutput listener;
    std::vector<double> rewards;
  };

  Played play(nn::Tape& tape, const std::vector<env::ReferentialSample>& samples, DecodeMode mode, Rng& rng,
              bool with_prefixes = false) const {
    const std::size_t batch = samples.size();
    const std::size_t w = split_.space().encoding_width();
    nn::Array targets({batch, w});
    nn::Array cands({batch * config_.n_candidates, w});
    for (std::size_t b = 0; b < batch; ++b) {
      const auto t = split_.space().encode(samples[b].target());
      std::copy(t.begin(), t.end(), targets.row_ptr(b));
      for (std::size_t j = 0; j < config_.n_candidates; ++j) {
        const auto c = split_.space().encode(samples[b].candidates[j]);
        std::copy(c.begin(), c.end(), cands.row_ptr(b * config_.n_candidates + j));
      }
    }
    Played p;
    p.speaker = speaker_generate(tape, pair_, pair_.speaker, targets, mode, rng);
    p.listener = listener_choose(tape, pair_, pair_.listener, p.speaker.messages, cands, config_.n_candidates, mode,
                                 rng, with_prefixes);
    for (std::size_t b = 0; b < batch; ++b) {
      p.rewards.push_back(env::referential_score(p.listener.choices[b], samples[b].target_index));
    }
    return p;
  }

  ReferentialConfig config_;
  env::CombinationSplit split_;
  SpeakerListenerPair pair_;
  nn::OptimizerState speaker_opt_;
  nn::OptimizerState listener_opt_;
  BaselineState baseline_;
  Rng env_rng_;
  Rng agent_rng_;
  std::size_t episodes_ = 0;
  std::vector<bool> touched_;
};

// One record per received symbol. The posterior is the listener's
// distribution over candidates after that symbol; the last record of an
// episode carries the choice, the shared reward and the outcome. Zero-shot
// episodes follow the training-pool ones and are flagged in the info map.
inline env::EpisodeTrace referential_trace(const std::vector<ReferentialOutcome>& outcomes,
                                           const env::AttributeSpace& space, std::size_t n_candidates,
                                           const std::vector<ReferentialOutcome>& zero_shot = {}) {
  env::EpisodeTrace out;
  out.environment = "referential";
  out.meta = {{"n_candidates", static_cast<double>(n_candidates)},
              {"n_shapes", space.n_shapes},
              {"n_colors", space.n_colors}};
  std::size_t e = 0;
  for (const auto* group : {&outcomes, &zero_shot}) {
    const double held_out = group == &zero_shot ? 1.0 : 0.0;
    for (const ReferentialOutcome& o : *group) {
      for (std::size_t t = 0; t < o.message.size(); ++t) {
        const bool last = t + 1 == o.message.size();
        env::TraceRecord rec;
        rec.episode = e;
        rec.step = t;
        rec.obs_digest = {env::observation_digest(space.encode(o.target))};
        rec.actions = {o.message[t], last ? static_cast<int>(o.choice) : -1};
        rec.messages = {{static_cast<double>(o.message[t])}};
        const double r = last && o.success ? 1.0 : 0.0;
        rec.rewards = {r, r};
        rec.done = last;
        rec.info = {{"object", space.index(o.target)}, {"category", o.target.shape}, {"zero_shot", held_out}};
        if (last) {
          rec.info["target_index"] = static_cast<double>(o.target_index);
          rec.info["success"] = o.success ? 1.0 : 0.0;
        }
        rec.posterior = o.prefix_posteriors.at(t);
        out.records.push_back(std::move(rec));
      }
      ++e;
    }
  }
  return out;
}

}  // namespace emcomm::agents
