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
#include <utility>

#include "emcomm/core/errors.hpp"
#include "emcomm/core/rng.hpp"
#include "emcomm/nn/ops.hpp"
#include "emcomm/nn/parameter_store.hpp"
#include "emcomm/nn/tape.hpp"

namespace emcomm::nn {

// xW + b, with b broadcast over rows.
inline Var dense_forward(const Var& x, const Var& w, const Var& b) {
  const Array& wv = w.value();
  if (x.value().cols() != wv.rows()) {
    throw ConfigurationError("dense input width " + std::to_string(x.value().cols()) +
                             " does not match weight " + to_string(wv.shape()));
  }
  if (b.value().size() != wv.cols()) {
    throw ConfigurationError("dense bias " + to_string(b.value().shape()) + " does not match weight " +
                             to_string(wv.shape()));
  }
  return add(matmul(x, w), b);
}

inline void add_dense(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t out,
                      Rng& rng) {
  store.add_glorot(prefix + "/w", in, out, rng);
  store.add_zeros(prefix + "/b", {out});
}

inline Var dense(Tape& tape, const ParameterStore& store, const std::string& prefix, const Var& x) {
  return dense_forward(x, tape.param(store, prefix + "/w"), tape.param(store, prefix + "/b"));
}

struct LstmState {
  Var h;
  Var c;
};

// Gate blocks are laid out [input | forget | candidate | output] along the
// 4*hidden axis of <prefix>/w_x, <prefix>/w_h and <prefix>/b.
inline void add_lstm(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t hidden,
                     Rng& rng, double forget_bias = 1.0) {
  store.add_glorot(prefix + "/w_x", in, 4 * hidden, rng);
  store.add_glorot(prefix + "/w_h", hidden, 4 * hidden, rng);
  Array b({4 * hidden});
  for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] = forget_bias;
  store.add(prefix + "/b", std::move(b));
}

inline std::size_t lstm_hidden(const ParameterStore& store, const std::string& prefix) {
  return store.get(prefix + "/w_h").rows();
}

// One gated recurrent step:
//   i = s(.), f = s(.), g = tanh(.), o = s(.)
//   c = f*c_prev + i*g,  h = o*tanh(c)
inline LstmState gated_recurrent_step(Tape& tape, const ParameterStore& store, const std::string& prefix,
                                      const Var& x, const LstmState& prev) {
  const std::size_t hidden = lstm_hidden(store, prefix);
  if (prev.h.value().cols() != hidden || prev.c.value().cols() != hidden) {
    throw ConfigurationError("recurrent state width " + std::to_string(prev.h.value().cols()) + "/" +
                             std::to_string(prev.c.value().cols()) + " does not match cell width " +
                             std::to_string(hidden));
  }
  if (prev.h.value().rows() != x.value().rows() || prev.c.value().rows() != x.value().rows()) {
    throw ConfigurationError("recurrent state rows do not match input rows");
  }
  const Var& w_x = tape.param(store, prefix + "/w_x");
  if (x.value().cols() != w_x.value().rows()) {
    throw ConfigurationError("recurrent input width " + std::to_string(x.value().cols()) +
                             " does not match " + to_string(w_x.value().shape()));
  }
  Var z = add(add(matmul(x, w_x), matmul(prev.h, tape.param(store, prefix + "/w_h"))),
              tape.param(store, prefix + "/b"));
  Var i = sigmoid(slice_cols(z, 0, hidden));
  Var f = sigmoid(slice_cols(z, hidden, 2 * hidden));
  Var g = tanh(slice_cols(z, 2 * hidden, 3 * hidden));
  Var o = sigmoid(slice_cols(z, 3 * hidden, 4 * hidden));
  Var c = add(mul(f, prev.c), mul(i, g));
  Var h = mul(o, tanh(c));
  return {h, c};
}

inline LstmState zero_state(Tape& tape, std::size_t rows, std::size_t hidden) {
  return {tape.constant(Array::zeros(rows, hidden)), tape.constant(Array::zeros(rows, hidden))};
}

}  // namespace emcomm::nn
