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

// Plain ReLU multilayer perceptron: sizes = {in, hidden..., out}.
inline void add_mlp(nn::ParameterStore& store, const std::string& prefix, const std::vector<std::size_t>& sizes,
                    Rng& rng) {
  if (sizes.size() < 2) throw ConfigurationError("an MLP needs at least an input and an output size");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    nn::add_dense(store, prefix + "/" + std::to_string(i), sizes[i], sizes[i + 1], rng);
  }
}

inline nn::Var mlp_forward(nn::Tape& tape, const nn::ParameterStore& store, const std::string& prefix,
                           std::size_t layers, nn::Var x) {
  for (std::size_t i = 0; i < layers; ++i) {
    x = nn::dense(tape, store, prefix + "/" + std::to_string(i), x);
    if (i + 1 < layers) x = nn::relu(x);
  }
  return x;
}

}  // namespace emcomm::agents
