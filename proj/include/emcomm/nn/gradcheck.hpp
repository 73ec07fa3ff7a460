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
#include <functional>
#include <string>

#include "emcomm/nn/parameter_store.hpp"
#include "emcomm/nn/tape.hpp"

namespace emcomm::nn {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t entries_checked = 0;
};

// Builds the loss on the given tape from the given parameters.
using LossBuilder = std::function<Var(Tape&, const ParameterStore&)>;

// Compares tape gradients against central differences entry by entry.
// Relative error is |a - n| / max(|a|, |n|, abs_floor).
inline GradCheckReport finite_diff_check(const LossBuilder& loss_fn, const ParameterStore& params,
                                         double step = 1e-5, double abs_floor = 1e-6,
                                         const std::vector<std::string>& only = {}) {
  Gradients analytic;
  {
    Tape tape;
    analytic = tape.backward(loss_fn(tape, params));
  }
  auto eval = [&](const ParameterStore& p) {
    Tape tape;
    return loss_fn(tape, p).value()[0];
  };
  GradCheckReport report;
  ParameterStore probe = params;
  for (const auto& [name, value] : params) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    const auto it = analytic.find(name);
    for (std::size_t i = 0; i < value.size(); ++i) {
      Array& slot = probe.get(name);
      const double orig = slot[i];
      slot[i] = orig + step;
      const double up = eval(probe);
      slot[i] = orig - step;
      const double down = eval(probe);
      slot[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double a = it == analytic.end() ? 0.0 : it->second[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), abs_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.entries_checked;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_parameter = name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace emcomm::nn
