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

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "emcomm/env/trace.hpp"
#include "emcomm/metrics/eval_report.hpp"
#include "emcomm/runner/config.hpp"
#include "emcomm/runner/experiment.hpp"

namespace emcomm::runner {

// Evaluation seed stream of the final evaluation, distinct from the
// periodic ones (which use the episode count).
inline constexpr std::uint64_t kFinalEvalStream = 0xf17a1ULL;

struct RunOptions {
  // Empty: <output root>/<run label>.
  std::string directory;
  // Continue from <directory>/checkpoint.ckpt when it exists.
  bool resume = false;
  // Stop (with a checkpoint) once this many episodes are done, as if the
  // process had been killed.
  std::optional<std::size_t> interrupt_after;
  std::ostream* progress = nullptr;
};

struct EvalPoint {
  std::size_t episode = 0;
  metrics::EvalReport report;
};

struct RunRecord {
  std::string config_hash;
  std::string directory;
  std::vector<TrainRecord> training;
  std::vector<EvalPoint> evaluations;
  metrics::EvalReport final_report;
  std::string checkpoint;
  double wall_clock_seconds = 0.0;
  bool stopped_early = false;
  bool interrupted = false;

  // Value of `metric` at each periodic evaluation.
  std::vector<double> eval_series(const std::string& metric) const {
    std::vector<double> out;
    for (const auto& e : evaluations) out.push_back(e.report.metrics.at(metric).value);
    return out;
  }
};

inline std::string provenance(const ExperimentConfig& c) {
  return std::string("emcomm ") + kVersion + " " + c.environment_kind() + "/" + c.algorithm_kind();
}

inline std::string experiment_kind(const ExperimentConfig& c) {
  return c.environment_kind() + "/" + c.algorithm_kind();
}

namespace detail {

inline Json metrics_json(const metrics::EvalReport& r) {
  Json m = Json::object();
  for (const auto& [name, v] : r.metrics) m[name] = {{"value", v.value}, {"std_error", v.std_error}, {"count", v.count}};
  return m;
}

inline metrics::EvalReport report_from_metrics_json(const Json& m) {
  metrics::EvalReport r;
  for (const auto& [name, v] : m.items()) {
    r.metrics[name] = {v.at("value").get<double>(), v.at("std_error").get<double>(), v.at("count").get<std::size_t>()};
  }
  return r;
}

inline Json train_json(const TrainRecord& t) {
  Json j{{"episode", t.episode}, {"count", t.count}, {"return", t.mean_return}};
  j["loss"] = t.loss ? Json(*t.loss) : Json(nullptr);
  return j;
}

inline TrainRecord train_from_json(const Json& j) {
  TrainRecord t;
  t.episode = j.at("episode").get<std::size_t>();
  t.count = j.at("count").get<std::size_t>();
  t.mean_return = j.at("return").get<double>();
  if (!j.at("loss").is_null()) t.loss = j.at("loss").get<double>();
  return t;
}

// Keeps the JSON lines whose "episode" is at most `limit`; returns them.
inline std::vector<Json> truncate_log(const std::filesystem::path& path, std::size_t limit) {
  std::vector<Json> kept;
  std::ifstream is(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string() + ": " + e.what(), n);
    }
    if (j.at("episode").get<std::size_t>() <= limit) kept.push_back(std::move(j));
  }
  is.close();
  std::ofstream os(path, std::ios::trunc);
  for (const auto& j : kept) os << j.dump() << "\n";
  return kept;
}

// Provenance on the report and, for replay, on the trace.
inline void stamp(Evaluation& e, const ExperimentConfig& c, std::uint64_t seed) {
  e.report.config_hash = config_hash(c);
  e.report.seed = seed;
  e.report.provenance = provenance(c);
  e.trace.labels = {{"config_hash", e.report.config_hash}, {"seed", std::to_string(seed)}, {"provenance", e.report.provenance}};
}

inline std::size_t next_eval_after(std::size_t episode, std::size_t every) { return (episode / every + 1) * every; }

}  // namespace detail

inline std::string run_directory(const ExperimentConfig& c, const RunOptions& opt = {}) {
  if (!opt.directory.empty()) return opt.directory;
  return (std::filesystem::path(output_root(c)) / run_label(c)).string();
}

// Loads a run checkpoint into a fresh experiment for `config`.
inline std::unique_ptr<Experiment> restore_experiment(const ExperimentConfig& c, const nn::Checkpoint& ckpt) {
  const auto it = ckpt.meta.find("experiment");
  if (it == ckpt.meta.end() || it->second != experiment_kind(c)) {
    throw ConfigurationError("checkpoint was written by a different experiment kind (" +
                             (it == ckpt.meta.end() ? std::string("unknown") : it->second) + " vs " +
                             experiment_kind(c) + ")");
  }
  auto exp = make_experiment(c);
  exp->restore(ckpt);
  return exp;
}

// Greedy evaluation of a saved state; the report carries the config hash,
// seed and provenance.
inline Evaluation evaluate_checkpoint(const ExperimentConfig& c, const std::string& checkpoint_path,
                                      std::optional<std::uint64_t> seed = std::nullopt) {
  const auto exp = restore_experiment(c, nn::load_checkpoint(checkpoint_path));
  const std::uint64_t s = seed.value_or(derive_seed(c.eval_seed, kFinalEvalStream));
  Evaluation e = exp->evaluate(c.eval_episodes, s);
  detail::stamp(e, c, s);
  return e;
}

// Trains to the episode budget, evaluating greedily every eval_every
// episodes (and at episode 0). Output files in the run directory:
//   config.json      canonical config
//   train.jsonl      one record per training step
//   eval.jsonl       one record per periodic evaluation
//   wallclock.jsonl  elapsed seconds at each evaluation (not deterministic)
//   checkpoint.ckpt  latest full learner state
//   report.txt       final evaluation report
//   trace.jsonl      episode trace of the final evaluation
inline RunRecord run(const ExperimentConfig& config, const RunOptions& opt = {}) {
  namespace fs = std::filesystem;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  RunRecord rec;
  rec.config_hash = config_hash(config);
  rec.directory = run_directory(config, opt);
  const fs::path dir(rec.directory);
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "config.json");
    os << serialize_config(config);
  }
  const fs::path ckpt_path = dir / "checkpoint.ckpt";
  rec.checkpoint = ckpt_path.string();

  std::unique_ptr<Experiment> exp;
  std::size_t streak = 0;
  double clock_offset = 0.0;
  if (opt.resume && fs::exists(ckpt_path)) {
    const nn::Checkpoint ckpt = nn::load_checkpoint(ckpt_path.string());
    if (ckpt.config_hash != rec.config_hash) {
      throw ConfigurationError("checkpoint belongs to config " + ckpt.config_hash + ", not " + rec.config_hash);
    }
    exp = restore_experiment(config, ckpt);
    streak = state::meta_uint(ckpt, "stop_streak");
    const std::size_t at = exp->episodes();
    for (const auto& j : detail::truncate_log(dir / "train.jsonl", at)) rec.training.push_back(detail::train_from_json(j));
    for (const auto& j : detail::truncate_log(dir / "eval.jsonl", at)) {
      rec.evaluations.push_back({j.at("episode").get<std::size_t>(), detail::report_from_metrics_json(j.at("metrics"))});
    }
    for (const auto& j : detail::truncate_log(dir / "wallclock.jsonl", at)) clock_offset = j.at("seconds").get<double>();
  } else {
    exp = make_experiment(config);
    for (const char* f : {"train.jsonl", "eval.jsonl", "wallclock.jsonl"}) std::ofstream(dir / f, std::ios::trunc);
  }
  std::ofstream train_log(dir / "train.jsonl", std::ios::app);
  std::ofstream eval_log(dir / "eval.jsonl", std::ios::app);
  std::ofstream clock_log(dir / "wallclock.jsonl", std::ios::app);

  auto save = [&](const fs::path& path) {
    nn::Checkpoint c = exp->save();
    c.config_hash = rec.config_hash;
    c.meta["experiment"] = experiment_kind(config);
    c.meta["stop_streak"] = std::to_string(streak);
    nn::save_checkpoint(path.string(), c);
  };
  auto periodic_eval = [&] {
    const std::size_t e = exp->episodes();
    metrics::EvalReport r = exp->evaluate(config.eval_episodes, derive_seed(config.eval_seed, e)).report;
    eval_log << Json{{"episode", e}, {"metrics", detail::metrics_json(r)}}.dump() << "\n" << std::flush;
    clock_log << Json{{"episode", e}, {"seconds", clock_offset + elapsed()}}.dump() << "\n" << std::flush;
    if (opt.progress) {
      *opt.progress << "[" << run_label(config) << "] episode " << e;
      for (const auto& [name, m] : r.metrics) *opt.progress << " " << name << "=" << m.value;
      *opt.progress << "\n" << std::flush;
    }
    if (config.stop.threshold) {
      const auto it = r.metrics.find(config.stop.metric);
      if (it == r.metrics.end()) throw ConfigurationError("stop metric '" + config.stop.metric + "' is not reported");
      streak = it->second.value >= *config.stop.threshold ? streak + 1 : 0;
    }
    rec.evaluations.push_back({e, std::move(r)});
  };

  if (rec.evaluations.empty()) periodic_eval();
  std::size_t next_eval = detail::next_eval_after(exp->episodes(), config.eval_every);
  auto stop_now = [&] { return config.stop.threshold && streak >= config.stop.patience; };
  rec.stopped_early = stop_now();
  while (exp->episodes() < config.episodes && !rec.stopped_early) {
    TrainRecord t;
    try {
      t = exp->train_step();
    } catch (const InconsistencyError&) {
      save(dir / "nan_dump.ckpt");
      throw;
    }
    train_log << detail::train_json(t).dump() << "\n";
    rec.training.push_back(t);
    if (exp->episodes() >= next_eval) {
      train_log.flush();
      periodic_eval();
      save(ckpt_path);
      next_eval = detail::next_eval_after(exp->episodes(), config.eval_every);
      rec.stopped_early = stop_now();
    }
    if (opt.interrupt_after && exp->episodes() >= *opt.interrupt_after && exp->episodes() < config.episodes) {
      train_log.flush();
      save(ckpt_path);
      rec.interrupted = true;
      rec.wall_clock_seconds = clock_offset + elapsed();
      return rec;
    }
  }
  train_log.flush();

  const std::uint64_t final_seed = derive_seed(config.eval_seed, kFinalEvalStream);
  Evaluation fin = exp->evaluate(config.eval_episodes, final_seed);
  detail::stamp(fin, config, final_seed);
  metrics::save_report((dir / "report.txt").string(), fin.report);
  env::save_trace((dir / "trace.jsonl").string(), fin.trace);
  rec.final_report = std::move(fin.report);
  save(ckpt_path);
  rec.wall_clock_seconds = clock_offset + elapsed();
  clock_log << Json{{"episode", exp->episodes()}, {"seconds", rec.wall_clock_seconds}, {"final", true}}.dump() << "\n";
  return rec;
}

// Recomputes an evaluation report from a trace file alone.
inline metrics::EvalReport replay(const std::string& trace_path) {
  const env::EpisodeTrace trace = env::load_trace(trace_path);
  metrics::EvalReport r = metrics::report_from_trace(trace);
  auto label = [&](const char* key) {
    const auto it = trace.labels.find(key);
    return it == trace.labels.end() ? std::string() : it->second;
  };
  r.config_hash = label("config_hash");
  r.provenance = label("provenance");
  if (const std::string s = label("seed"); !s.empty()) {
    try {
      r.seed = std::stoull(s);
    } catch (const std::logic_error&) {
      throw ParseError("trace label 'seed' is not an integer: " + s, 1);
    }
  }
  return r;
}

}  // namespace emcomm::runner
