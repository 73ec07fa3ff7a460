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
#include <optional>
#include <vector>

#include "emcomm/core/errors.hpp"
#include "emcomm/env/trace.hpp"

namespace emcomm::metrics {

inline double oracle_normalized_return(const std::vector<double>& returns, double oracle) {
  if (!(oracle > 0.0)) throw ConfigurationError("oracle return must be positive");
  if (returns.empty()) throw UsageError("no returns to normalize");
  double sum = 0.0;
  for (double r : returns) sum += r;
  return sum / static_cast<double>(returns.size()) / oracle;
}

// First episode count i >= window at which the mean of series[i-window, i)
// reaches the threshold.
inline std::optional<std::size_t> episodes_to_threshold(const std::vector<double>& series, double threshold,
                                                        std::size_t window) {
  if (window == 0) throw UsageError("smoothing window must be at least 1");
  double sum = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    sum += series[i];
    if (i >= window) sum -= series[i - window];
    if (i + 1 >= window && sum / static_cast<double>(window) >= threshold) return i + 1;
  }
  return std::nullopt;
}

struct BounceTally {
  std::size_t points = 0;
  std::size_t bounces = 0;
};

inline BounceTally tally_bounces(const std::vector<env::EpisodeTrace>& traces) {
  BounceTally t;
  for (const auto& tr : traces)
    for (const auto& r : tr.records) {
      const auto it = r.info.find("point");
      if (it == r.info.end() || it->second == 0.0) continue;
      ++t.points;
      t.bounces += static_cast<std::size_t>(r.info.at("point_bounces"));
    }
  return t;
}

// Mean paddle bounces per played point; empty when no point was played.
inline std::optional<double> paddle_bounce_rate(const std::vector<env::EpisodeTrace>& traces) {
  const BounceTally t = tally_bounces(traces);
  if (t.points == 0) return std::nullopt;
  return static_cast<double>(t.bounces) / static_cast<double>(t.points);
}

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

inline MeanEstimate mean_estimate(const std::vector<double>& xs) {
  MeanEstimate m;
  m.count = xs.size();
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std_error = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return m;
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw UsageError("median of nothing");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace emcomm::metrics
