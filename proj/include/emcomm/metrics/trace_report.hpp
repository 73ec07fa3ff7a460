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
#include <map>
#include <string>
#include <vector>

#include "emcomm/belief/public_belief.hpp"
#include "emcomm/core/errors.hpp"
#include "emcomm/env/switch_riddle.hpp"
#include "emcomm/env/trace.hpp"
#include "emcomm/metrics/eval_report.hpp"
#include "emcomm/metrics/message_log.hpp"
#include "emcomm/metrics/returns.hpp"

namespace emcomm::metrics {

namespace detail {

inline double meta_at(const env::EpisodeTrace& trace, const std::string& key) {
  const auto it = trace.meta.find(key);
  if (it == trace.meta.end()) throw InconsistencyError("trace meta lacks '" + key + "'");
  return it->second;
}

inline Metric as_metric(const MeanEstimate& m) { return {m.mean, m.std_error, m.count}; }

// Records grouped by episode, in file order.
inline std::map<std::size_t, std::vector<const env::TraceRecord*>> by_episode(const env::EpisodeTrace& trace) {
  std::map<std::size_t, std::vector<const env::TraceRecord*>> out;
  for (const auto& r : trace.records) out[r.episode].push_back(&r);
  return out;
}

// Entropy and entropy drop of each posterior, the prior counting as step 0.
inline void append_entropy(const std::vector<double>& prior, const std::vector<const env::TraceRecord*>& recs,
                           std::vector<double>& entropy, std::vector<double>& drop) {
  std::vector<std::vector<double>> seq{prior};
  for (const auto* r : recs) seq.push_back(r->posterior);
  const auto steps = belief::entropy_evolution(seq);
  for (std::size_t t = 1; t < steps.size(); ++t) {
    entropy.push_back(steps[t].entropy);
    drop.push_back(steps[t].drop);
  }
}

}  // namespace detail

// Episode returns are agent 0's summed rewards (every agent shares them).
inline EvalReport switch_report(const env::EpisodeTrace& trace) {
  const int n = static_cast<int>(detail::meta_at(trace, "n_agents"));
  const int days = static_cast<int>(detail::meta_at(trace, "max_days"));
  std::vector<double> returns, entropy, drop;
  for (const auto& [ep, recs] : detail::by_episode(trace)) {
    double ret = 0.0;
    for (const auto* r : recs) ret += r->rewards.at(0);
    returns.push_back(ret);
    if (!recs.front()->posterior.empty()) {
      const std::size_t k = recs.front()->posterior.size();
      detail::append_entropy(std::vector<double>(k, 1.0 / static_cast<double>(k)), recs, entropy, drop);
    }
  }
  EvalReport rep;
  const MeanEstimate m = mean_estimate(returns);
  const double oracle = env::switch_oracle_exact(n, days);
  rep.metrics["return"] = detail::as_metric(m);
  rep.metrics["oracle"] = {oracle, 0.0, 1};
  rep.metrics["normalized_return"] = {m.mean / oracle, m.std_error / oracle, m.count};
  rep.series["episode_return"] = returns;
  rep.series["posterior_entropy"] = entropy;
  rep.series["entropy_drop"] = drop;
  return rep;
}

// Messages are rebuilt from the per-symbol records; the category is the
// target's shape. Message statistics cover training-pool episodes only.
inline EvalReport referential_report(const env::EpisodeTrace& trace) {
  const auto k = static_cast<std::size_t>(detail::meta_at(trace, "n_candidates"));
  MessageLog log;
  std::vector<double> success, zero_shot, entropy, drop;
  std::vector<std::vector<double>> drop_by_position;
  for (const auto& [ep, recs] : detail::by_episode(trace)) {
    const env::TraceRecord& last = *recs.back();
    const bool held_out = last.info.contains("zero_shot") && last.info.at("zero_shot") > 0.0;
    const bool hit = last.info.at("success") > 0.0;
    if (held_out) {
      zero_shot.push_back(hit ? 1.0 : 0.0);
      continue;
    }
    MessageRecord m;
    for (const auto* r : recs) m.message.push_back(r->actions.at(0));
    m.object_label = static_cast<int>(last.info.at("object"));
    m.category = static_cast<int>(last.info.at("category"));
    m.episode = ep;
    m.success = hit;
    log.push_back(m);
    success.push_back(hit ? 1.0 : 0.0);
    std::vector<double> e, d;
    detail::append_entropy(std::vector<double>(k, 1.0 / static_cast<double>(k)), recs, e, d);
    for (std::size_t t = 0; t < d.size(); ++t) {
      if (drop_by_position.size() <= t) drop_by_position.emplace_back();
      drop_by_position[t].push_back(d[t]);
    }
    entropy.insert(entropy.end(), e.begin(), e.end());
    drop.insert(drop.end(), d.begin(), d.end());
  }
  EvalReport rep;
  rep.metrics["accuracy"] = detail::as_metric(mean_estimate(success));
  if (!log.empty()) {
    rep.metrics["purity"] = {purity(log), 0.0, log.size()};
    rep.metrics["lexicon_size"] = {static_cast<double>(lexicon_size(log)), 0.0, log.size()};
  }
  if (!zero_shot.empty()) {
    rep.metrics["zero_shot_accuracy"] = detail::as_metric(mean_estimate(zero_shot));
    if (!success.empty() && rep.metrics["accuracy"].value > 0.0) {
      rep.metrics["zero_shot_ratio"] = {rep.metrics["zero_shot_accuracy"].value / rep.metrics["accuracy"].value, 0.0,
                                        zero_shot.size()};
    }
  }
  std::vector<double> mean_drop;
  for (const auto& xs : drop_by_position) mean_drop.push_back(mean_estimate(xs).mean);
  rep.series["episode_success"] = success;
  rep.series["posterior_entropy"] = entropy;
  rep.series["entropy_drop"] = drop;
  rep.series["mean_entropy_drop_by_position"] = mean_drop;
  return rep;
}

inline EvalReport pong_report(const env::EpisodeTrace& trace) {
  const auto players = static_cast<std::size_t>(detail::meta_at(trace, "players"));
  std::vector<double> returns;
  for (const auto& [ep, recs] : detail::by_episode(trace)) {
    double ret = 0.0;
    for (const auto* r : recs)
      for (std::size_t a = 0; a < players; ++a) ret += r->rewards.at(a);
    returns.push_back(ret / static_cast<double>(players));
  }
  const BounceTally t = tally_bounces({trace});
  EvalReport rep;
  rep.metrics["return"] = detail::as_metric(mean_estimate(returns));
  rep.metrics["points"] = {static_cast<double>(t.points), 0.0, returns.size()};
  if (t.points > 0) {
    rep.metrics["bounce_rate"] = {static_cast<double>(t.bounces) / static_cast<double>(t.points), 0.0, t.points};
  }
  rep.series["episode_return"] = returns;
  return rep;
}

// Dispatches on the trace's environment name.
inline EvalReport report_from_trace(const env::EpisodeTrace& trace) {
  if (trace.environment == "switch_riddle") return switch_report(trace);
  if (trace.environment == "referential") return referential_report(trace);
  if (trace.environment == "grid_pong") return pong_report(trace);
  throw ConfigurationError("no report for environment '" + trace.environment + "'");
}

}  // namespace emcomm::metrics
