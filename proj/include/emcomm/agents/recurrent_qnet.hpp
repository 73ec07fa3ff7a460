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

#include <cstdint>
#include <string>
#include <vector>

#include "emcomm/core/errors.hpp"
#include "emcomm/core/rng.hpp"
#include "emcomm/nn/layers.hpp"
#include "emcomm/nn/ops.hpp"
#include "emcomm/nn/parameter_store.hpp"
#include "emcomm/nn/tape.hpp"

namespace emcomm::agents {

struct RecurrentQNetSpec {
  std::size_t observation_width = 0;
  std::size_t n_agents = 0;
  std::size_t n_actions = 0;
  // Width of both the outgoing message head and the incoming message input.
  // Zero gives a plain DRQN with no channel.
  std::size_t message_width = 0;
  // Extra per-step features appended after the last-action block.
  std::size_t extra_width = 0;
  std::size_t hidden = 64;
};

// Recurrent trunk shared by every agent, with a Q head and an optional
// real-valued message head. Input row layout:
//   [observation | agent one-hot | last action one-hot | extra | message]
class SharedRecurrentQNet {
 public:
  struct Output {
    nn::Var q;
    nn::Var message;  // raw message logits; invalid when message_width == 0
    nn::LstmState state;
  };

  SharedRecurrentQNet() = default;
  explicit SharedRecurrentQNet(RecurrentQNetSpec spec) : spec_(spec) {
    if (spec.observation_width == 0 || spec.n_agents == 0 || spec.n_actions == 0 || spec.hidden == 0) {
      throw ConfigurationError("recurrent Q-net dimensions must be positive");
    }
  }

  const RecurrentQNetSpec& spec() const { return spec_; }

  std::size_t fixed_width() const {
    return spec_.observation_width + spec_.n_agents + spec_.n_actions + spec_.extra_width;
  }
  std::size_t input_width() const { return fixed_width() + spec_.message_width; }

  nn::ParameterStore init(std::uint64_t seed) const {
    Rng rng = make_rng(seed, Stream::kAgent);
    nn::ParameterStore p;
    nn::add_lstm(p, "rnn", input_width(), spec_.hidden, rng);
    nn::add_dense(p, "trunk", spec_.hidden, spec_.hidden, rng);
    nn::add_dense(p, "q", spec_.hidden, spec_.n_actions, rng);
    if (spec_.message_width > 0) nn::add_dense(p, "msg", spec_.hidden, spec_.message_width, rng);
    return p;
  }

  // Writes one fixed-input row. last_action < 0 means no previous action.
  void encode(double* row, const std::vector<double>& observation, std::size_t agent, int last_action,
              const std::vector<double>& extra = {}) const {
    if (observation.size() != spec_.observation_width || agent >= spec_.n_agents ||
        last_action >= static_cast<int>(spec_.n_actions) || extra.size() != spec_.extra_width) {
      throw ConfigurationError("recurrent Q-net input does not match its spec");
    }
    std::fill(row, row + fixed_width(), 0.0);
    std::copy(observation.begin(), observation.end(), row);
    std::size_t at = spec_.observation_width;
    row[at + agent] = 1.0;
    at += spec_.n_agents;
    if (last_action >= 0) row[at + static_cast<std::size_t>(last_action)] = 1.0;
    at += spec_.n_actions;
    std::copy(extra.begin(), extra.end(), row + at);
  }

  nn::LstmState initial_state(nn::Tape& tape, std::size_t rows) const {
    return nn::zero_state(tape, rows, spec_.hidden);
  }

  // One step for a block of agent rows. `incoming` is ignored (and may be
  // invalid) when the net has no channel.
  Output step(nn::Tape& tape, const nn::ParameterStore& params, const nn::Array& fixed,
              const nn::Var& incoming, const nn::LstmState& prev) const {
    if (fixed.cols() != fixed_width()) {
      throw ConfigurationError("fixed input width " + std::to_string(fixed.cols()) + " != " +
                               std::to_string(fixed_width()));
    }
    nn::Var x = tape.constant(fixed);
    if (spec_.message_width > 0) {
      if (!incoming.valid() || incoming.value().cols() != spec_.message_width ||
          incoming.value().rows() != fixed.rows()) {
        throw ConfigurationError("message width mismatch: expected " + std::to_string(spec_.message_width));
      }
      x = nn::concat_cols({x, incoming});
    }
    Output out;
    out.state = nn::gated_recurrent_step(tape, params, "rnn", x, prev);
    nn::Var z = nn::relu(nn::dense(tape, params, "trunk", out.state.h));
    out.q = nn::dense(tape, params, "q", z);
    if (spec_.message_width > 0) out.message = nn::dense(tape, params, "msg", z);
    return out;
  }

 private:
  RecurrentQNetSpec spec_;
};

}  // namespace emcomm::agents
