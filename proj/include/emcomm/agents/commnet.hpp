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

#include <string>
#include <vector>

#include "emcomm/core/errors.hpp"
#include "emcomm/core/rng.hpp"
#include "emcomm/nn/layers.hpp"
#include "emcomm/nn/ops.hpp"
#include "emcomm/nn/parameter_store.hpp"

namespace emcomm::agents {

enum class Nonlinearity { kIdentity, kTanh, kRelu, kSigmoid };

inline nn::Var apply(Nonlinearity f, const nn::Var& x) {
  switch (f) {
    case Nonlinearity::kTanh: return nn::tanh(x);
    case Nonlinearity::kRelu: return nn::relu(x);
    case Nonlinearity::kSigmoid: return nn::sigmoid(x);
    case Nonlinearity::kIdentity: break;
  }
  return x;
}

// Row-block averaging operator: for each group of `agents` consecutive rows,
// row m receives the mean of the other rows of its group.
inline nn::Array mean_of_others(std::size_t groups, std::size_t agents) {
  if (agents < 2) throw ConfigurationError("CommNet needs at least 2 agents");
  const std::size_t rows = groups * agents;
  nn::Array a({rows, rows});
  const double w = 1.0 / static_cast<double>(agents - 1);
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t i = 0; i < agents; ++i)
      for (std::size_t j = 0; j < agents; ++j)
        if (i != j) a(g * agents + i, g * agents + j) = w;
  return a;
}

// h_m' = f(C c_m + H h_m) with c_m the mean of the other agents' states. Rows
// are agent states, so C and H act from the right (they hold the transposed
// matrices).
inline nn::Var commnet_layer(const nn::Var& h_all, const nn::Var& C, const nn::Var& H, Nonlinearity f,
                             std::size_t agents) {
  const std::size_t rows = h_all.value().rows();
  if (agents < 2) throw ConfigurationError("CommNet needs at least 2 agents");
  if (rows % agents != 0) throw ConfigurationError("CommNet rows must be whole groups of agents");
  const std::size_t d = h_all.value().cols();
  if (C.value().rows() != d || C.value().cols() != d || H.value().rows() != d || H.value().cols() != d) {
    throw ConfigurationError("CommNet C and H must be square with the state width");
  }
  nn::Var c = nn::matmul(h_all.tape().constant(mean_of_others(rows / agents, agents)), h_all);
  return apply(f, nn::add(nn::matmul(c, C), nn::matmul(h_all, H)));
}

struct CommNetParams {
  std::size_t agents = 2;
  std::size_t layers = 2;
  std::size_t width = 16;
  std::size_t input_width = 0;
  std::size_t output_width = 0;
  Nonlinearity nonlinearity = Nonlinearity::kTanh;
  nn::ParameterStore store;

  static CommNetParams init(std::size_t agents, std::size_t layers, std::size_t width, std::size_t input_width,
                            std::size_t output_width, Nonlinearity f, std::uint64_t seed) {
    if (agents < 2) throw ConfigurationError("CommNet needs at least 2 agents");
    if (layers == 0 || width == 0 || input_width == 0 || output_width == 0) {
      throw ConfigurationError("CommNet dimensions must be positive");
    }
    CommNetParams p{agents, layers, width, input_width, output_width, f, {}};
    Rng rng = make_rng(seed, Stream::kAgent);
    nn::add_dense(p.store, "encode", input_width, width, rng);
    for (std::size_t i = 0; i < layers; ++i) {
      p.store.add_glorot("comm/" + std::to_string(i) + "/C", width, width, rng);
      p.store.add_glorot("comm/" + std::to_string(i) + "/H", width, width, rng);
    }
    nn::add_dense(p.store, "decode", width, output_width, rng);
    return p;
  }
};

// Encoder, N communication layers, per-agent decoder. Input rows are grouped
// by episode, `agents` rows per group.
inline nn::Var commnet_forward(nn::Tape& tape, const CommNetParams& p, const nn::ParameterStore& store,
                               const nn::Array& inputs) {
  nn::Var h = apply(p.nonlinearity, nn::dense(tape, store, "encode", tape.constant(inputs)));
  for (std::size_t i = 0; i < p.layers; ++i) {
    const std::string k = "comm/" + std::to_string(i);
    h = commnet_layer(h, tape.param(store, k + "/C"), tape.param(store, k + "/H"), p.nonlinearity, p.agents);
  }
  return nn::dense(tape, store, "decode", h);
}

}  // namespace emcomm::agents
