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

#include <random>
#include <string>

#include "emcomm/core/errors.hpp"
#include "emcomm/core/rng.hpp"
#include "emcomm/nn/ops.hpp"

namespace emcomm::agents {

enum class MessagePhase { kTraining, kExecution };

// How messages travel during evaluation: the noise-free sigmoid of the
// training channel, the thresholded bit, or nothing at all.
enum class EvalChannel { kReal, kDiscrete, kSilent };

inline std::string to_string(EvalChannel c) {
  switch (c) {
    case EvalChannel::kReal: return "real";
    case EvalChannel::kDiscrete: return "discrete";
    case EvalChannel::kSilent: return "silent";
  }
  return "?";
}

inline EvalChannel eval_channel_from_string(const std::string& s) {
  if (s == "real") return EvalChannel::kReal;
  if (s == "discrete") return EvalChannel::kDiscrete;
  if (s == "silent") return EvalChannel::kSilent;
  throw ConfigurationError("unknown evaluation channel: " + s);
}

// Execution-time channel: strict positivity gives a 1 bit.
inline nn::Array dial_execute_message(const nn::Array& raw, MessagePhase phase = MessagePhase::kExecution) {
  if (phase != MessagePhase::kExecution) throw UsageError("discretized messages are for execution only");
  nn::Array out(raw.shape());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] > 0.0 ? 1.0 : 0.0;
  return out;
}

// Training-time channel: sigmoid(raw + N(0, sigma)), kept on the tape.
inline nn::Var dial_training_message(const nn::Var& raw, double sigma, Rng& rng) {
  if (sigma < 0.0) throw ConfigurationError("message noise must be non-negative");
  if (sigma == 0.0) return nn::sigmoid(raw);
  nn::Array noise(raw.value().shape());
  std::normal_distribution<double> gauss(0.0, sigma);
  for (double& v : noise.values()) v = gauss(rng);
  return nn::sigmoid(nn::add(raw, raw.tape().constant(std::move(noise))));
}

inline nn::Array dial_eval_message(const nn::Array& raw, EvalChannel channel) {
  switch (channel) {
    case EvalChannel::kDiscrete: return dial_execute_message(raw);
    case EvalChannel::kSilent: return nn::Array::zeros_like(raw);
    case EvalChannel::kReal: break;
  }
  nn::Array out(raw.shape());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = nn::detail::stable_sigmoid(raw[i]);
  return out;
}

}  // namespace emcomm::agents
