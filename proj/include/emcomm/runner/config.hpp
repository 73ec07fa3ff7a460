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
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "emcomm/agents/pong_learner.hpp"
#include "emcomm/agents/referential_agents.hpp"
#include "emcomm/agents/switch_learner.hpp"
#include "emcomm/core/errors.hpp"
#include "emcomm/core/rng.hpp"

namespace emcomm::runner {

using Json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

// Early stop once `metric` of the periodic evaluation reaches `threshold`
// on `patience` consecutive evaluations. Disabled when threshold is null.
struct StopRule {
  std::optional<double> threshold;
  std::size_t patience = 3;
  std::string metric = "normalized_return";

  bool operator==(const StopRule&) const = default;
};

// Blocks are stored in canonical form: every key present, defaults filled.
struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  std::size_t episodes = 0;
  std::size_t eval_every = 1000;
  std::size_t eval_episodes = 1000;
  std::uint64_t eval_seed = 1;
  std::string output_dir = "runs";
  StopRule stop;
  Json environment = Json::object();
  Json algorithm = Json::object();
  Json nn = Json::object();
  Json schedule = Json::object();

  std::string environment_kind() const { return environment.at("kind").get<std::string>(); }
  std::string algorithm_kind() const { return algorithm.at("kind").get<std::string>(); }

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

// Default value per key; the default's JSON type is the accepted type.
using Schema = std::vector<std::pair<std::string, Json>>;

inline Schema environment_schema(const std::string& kind) {
  if (kind == "switch_riddle") return {{"kind", kind}, {"n_agents", 3}, {"max_days", 0}};
  if (kind == "referential") {
    return {{"kind", kind},        {"n_shapes", 5},      {"n_colors", 5},  {"held_out_fraction", 0.2},
            {"n_candidates", 2},   {"alphabet", 10},     {"max_length", 2}};
  }
  if (kind == "grid_pong") {
    return {{"kind", kind},         {"players", 2},        {"rho", 1.0},        {"comm_mode", "none"},
            {"width", 16},          {"height", 16},        {"paddle_length", 3}, {"max_steps", 300},
            {"points_per_episode", 1}, {"alphabet", 4},    {"max_vertical_speed", 2}};
  }
  throw ConfigurationError("unknown environment kind '" + kind + "'");
}

inline Schema algorithm_schema(const std::string& env, const std::string& kind) {
  if (env == "switch_riddle" && (kind == "dial" || kind == "ddrqn")) {
    return {{"kind", kind},           {"message_width", 1},          {"message_noise", 0.5},
            {"day_input", true},      {"eval_channel", "discrete"},  {"exact_eval_limit", 20000}};
  }
  if (env == "referential" && kind == "reinforce") {
    return {{"kind", kind}, {"baseline_decay", 0.99}, {"entropy_coef", 0.01}};
  }
  if (env == "grid_pong" && kind == "idqn") {
    return {{"kind", kind}, {"replay_capacity", 50000}, {"warmup", 1000}, {"train_every", 1}, {"minibatch", 32},
            {"recurrent", true}, {"bptt_window", 20}};
  }
  if (env == "grid_pong" && kind == "scripted") return {{"kind", kind}, {"policy", "tracker"}};
  throw ConfigurationError("algorithm '" + kind + "' is not available for environment '" + env + "'");
}

inline Schema nn_schema(const std::string& env, const std::string& alg) {
  if (env == "switch_riddle") return {{"hidden", 64}, {"learning_rate", 5e-3}, {"grad_clip", 10.0}};
  if (env == "referential") return {{"hidden", 64}, {"learning_rate", 2e-3}};
  if (alg == "scripted") return {};
  return {{"hidden", 64}, {"learning_rate", 1e-3}, {"grad_clip", 10.0}};
}

inline Schema schedule_schema(const std::string& env, const std::string& alg) {
  if (env == "switch_riddle") {
    return {{"batch_episodes", 32}, {"gamma", 1.0},         {"target_refresh", 100},
            {"epsilon_start", 0.05}, {"epsilon_end", 0.05}, {"epsilon_decay", 0}};
  }
  if (env == "referential") return {{"batch_episodes", 8}};
  if (alg == "scripted") return {};
  return {{"gamma", 0.99},        {"target_refresh", 1000}, {"epsilon_start", 1.0},
          {"epsilon_end", 0.05},  {"epsilon_decay", 2000}};
}

inline bool same_kind(const Json& value, const Json& def) {
  if (def.is_boolean()) return value.is_boolean();
  if (def.is_string()) return value.is_string();
  if (def.is_number_float()) return value.is_number();
  if (def.is_number_unsigned() || def.is_number_integer()) {
    return value.is_number_integer() && value.get<std::int64_t>() >= 0;
  }
  return value.type() == def.type();
}

inline Json canonical_block(const Json& given, const Schema& schema, const std::string& path) {
  if (!given.is_object()) throw ConfigurationError(path + " must be an object");
  Json out = Json::object();
  for (const auto& [key, def] : schema) {
    if (!given.contains(key)) {
      out[key] = def;
      continue;
    }
    const Json& v = given.at(key);
    if (!same_kind(v, def)) {
      throw ConfigurationError(path + "." + key + " has the wrong type (expected " + std::string(def.type_name()) +
                               "-like, got " + v.dump() + ")");
    }
    out[key] = def.is_number_float() ? Json(v.get<double>()) : v;
  }
  for (const auto& [key, v] : given.items()) {
    bool known = false;
    for (const auto& [k, d] : schema) known = known || k == key;
    if (!known) throw ConfigurationError("unknown config key '" + path + "." + key + "'");
  }
  return out;
}

template <typename T>
T get_as(const Json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigurationError(path + "." + key + " has the wrong type");
  }
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& c);

// Strict parse: unknown keys anywhere are errors; missing keys take defaults.
inline ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigurationError("config must be a JSON object");
  static const std::vector<std::string> top{"name",     "seed",          "episodes",  "eval_every",
                                            "eval_episodes", "eval_seed", "output_dir", "stop",
                                            "environment", "algorithm",  "nn",         "schedule"};
  for (const auto& [key, v] : j.items()) {
    if (std::find(top.begin(), top.end(), key) == top.end()) throw ConfigurationError("unknown config key '" + key + "'");
  }
  ExperimentConfig c;
  auto uint_at = [&](const char* key, auto& slot) {
    if (!j.contains(key)) return;
    const Json& v = j.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw ConfigurationError(std::string(key) + " must be a non-negative integer");
    }
    slot = v.get<std::remove_reference_t<decltype(slot)>>();
  };
  if (j.contains("name")) c.name = detail::get_as<std::string>(j, "name", "config");
  if (j.contains("output_dir")) c.output_dir = detail::get_as<std::string>(j, "output_dir", "config");
  uint_at("seed", c.seed);
  uint_at("episodes", c.episodes);
  uint_at("eval_every", c.eval_every);
  uint_at("eval_episodes", c.eval_episodes);
  uint_at("eval_seed", c.eval_seed);
  if (c.eval_every == 0) throw ConfigurationError("eval_every must be positive");
  if (c.eval_episodes == 0) throw ConfigurationError("eval_episodes must be positive");

  if (j.contains("stop")) {
    const Json& s = j.at("stop");
    if (!s.is_object()) throw ConfigurationError("stop must be an object");
    for (const auto& [key, v] : s.items()) {
      if (key != "threshold" && key != "patience" && key != "metric") {
        throw ConfigurationError("unknown config key 'stop." + key + "'");
      }
    }
    if (s.contains("threshold") && !s.at("threshold").is_null()) {
      if (!s.at("threshold").is_number()) throw ConfigurationError("stop.threshold must be a number or null");
      c.stop.threshold = s.at("threshold").get<double>();
    }
    if (s.contains("patience")) {
      if (!s.at("patience").is_number_integer() || s.at("patience").get<std::int64_t>() < 1) {
        throw ConfigurationError("stop.patience must be a positive integer");
      }
      c.stop.patience = s.at("patience").get<std::size_t>();
    }
    if (s.contains("metric")) c.stop.metric = detail::get_as<std::string>(s, "metric", "stop");
  }

  if (!j.contains("environment") || !j.at("environment").is_object() || !j.at("environment").contains("kind")) {
    throw ConfigurationError("environment.kind is required");
  }
  if (!j.contains("algorithm") || !j.at("algorithm").is_object() || !j.at("algorithm").contains("kind")) {
    throw ConfigurationError("algorithm.kind is required");
  }
  const std::string env = detail::get_as<std::string>(j.at("environment"), "kind", "environment");
  const std::string alg = detail::get_as<std::string>(j.at("algorithm"), "kind", "algorithm");
  c.environment = detail::canonical_block(j.at("environment"), detail::environment_schema(env), "environment");
  c.algorithm = detail::canonical_block(j.at("algorithm"), detail::algorithm_schema(env, alg), "algorithm");
  c.nn = detail::canonical_block(j.value("nn", Json::object()), detail::nn_schema(env, alg), "nn");
  c.schedule = detail::canonical_block(j.value("schedule", Json::object()), detail::schedule_schema(env, alg),
                                       "schedule");
  validate_config(c);
  return c;
}

inline Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["episodes"] = c.episodes;
  j["eval_every"] = c.eval_every;
  j["eval_episodes"] = c.eval_episodes;
  j["eval_seed"] = c.eval_seed;
  j["output_dir"] = c.output_dir;
  j["stop"] = {{"threshold", c.stop.threshold ? Json(*c.stop.threshold) : Json(nullptr)},
               {"patience", c.stop.patience},
               {"metric", c.stop.metric}};
  j["environment"] = c.environment;
  j["algorithm"] = c.algorithm;
  j["nn"] = c.nn;
  j["schedule"] = c.schedule;
  return j;
}

inline ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigurationError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline std::string serialize_config(const ExperimentConfig& c) { return config_to_json(c).dump(2) + "\n"; }

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigurationError("cannot open config: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

// Identity of what the run computes: everything except the name and where
// the outputs go.
inline std::string config_hash(const ExperimentConfig& c) {
  Json j = config_to_json(c);
  j.erase("name");
  j.erase("output_dir");
  return hex64(fnv1a64(j.dump()));
}

// Sets one key. `key` is a dotted path ("environment.rho") or a bare name
// that occurs in exactly one block ("rho"). The value is read as JSON when
// it parses, else as a string.
inline ExperimentConfig with_override(const ExperimentConfig& c, const std::string& key, const std::string& value) {
  Json j = config_to_json(c);
  Json v;
  try {
    v = Json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    v = value;
  }
  std::string path = key;
  if (key.find('.') == std::string::npos && !j.contains(key)) {
    std::vector<std::string> hits;
    for (const char* block : {"environment", "algorithm", "nn", "schedule", "stop"}) {
      if (j.at(block).contains(key)) hits.push_back(std::string(block) + "." + key);
    }
    if (hits.empty()) throw ConfigurationError("no config key named '" + key + "'");
    if (hits.size() > 1) throw ConfigurationError("config key '" + key + "' is ambiguous; use a dotted path");
    path = hits.front();
  }
  const auto dot = path.find('.');
  if (dot == std::string::npos) {
    j[path] = v;
  } else {
    const std::string block = path.substr(0, dot), leaf = path.substr(dot + 1);
    if (!j.contains(block) || !j.at(block).is_object()) throw ConfigurationError("no config block '" + block + "'");
    j[block][leaf] = v;
  }
  return config_from_json(j);
}

// Effective output directory: EMCOMM_OUTPUT_DIR, when set, replaces the
// configured root.
inline std::string output_root(const ExperimentConfig& c) {
  if (const char* env = std::getenv("EMCOMM_OUTPUT_DIR"); env && *env) return env;
  return c.output_dir;
}

inline std::string run_label(const ExperimentConfig& c) { return c.name.empty() ? config_hash(c) : c.name; }

// ---- typed views of the blocks ----

inline agents::SwitchLearnerConfig switch_config(const ExperimentConfig& c) {
  agents::SwitchLearnerConfig s;
  const Json &e = c.environment, &a = c.algorithm, &n = c.nn, &k = c.schedule;
  s.n_agents = e.at("n_agents").get<int>();
  s.max_days = e.at("max_days").get<int>();
  s.algorithm = agents::switch_algorithm_from_string(a.at("kind").get<std::string>());
  s.message_width = a.at("message_width").get<std::size_t>();
  s.message_noise = a.at("message_noise").get<double>();
  s.day_input = a.at("day_input").get<bool>();
  s.exact_eval_limit = a.at("exact_eval_limit").get<std::size_t>();
  s.hidden = n.at("hidden").get<std::size_t>();
  s.learning_rate = n.at("learning_rate").get<double>();
  s.grad_clip = n.at("grad_clip").get<double>();
  s.batch_episodes = k.at("batch_episodes").get<std::size_t>();
  s.gamma = k.at("gamma").get<double>();
  s.target_refresh_episodes = k.at("target_refresh").get<std::size_t>();
  s.epsilon = {k.at("epsilon_start").get<double>(), k.at("epsilon_end").get<double>(),
               k.at("epsilon_decay").get<std::size_t>()};
  if (s.n_agents < 2) throw ConfigurationError("switch riddle needs at least 2 agents");
  if (s.target_refresh_episodes == 0) throw ConfigurationError("schedule.target_refresh must be positive");
  return s;
}

inline agents::EvalChannel switch_eval_channel(const ExperimentConfig& c) {
  return agents::eval_channel_from_string(c.algorithm.at("eval_channel").get<std::string>());
}

inline agents::ReferentialConfig referential_config(const ExperimentConfig& c) {
  agents::ReferentialConfig r;
  const Json &e = c.environment, &a = c.algorithm;
  r.space = {e.at("n_shapes").get<int>(), e.at("n_colors").get<int>()};
  r.held_out_fraction = e.at("held_out_fraction").get<double>();
  r.n_candidates = e.at("n_candidates").get<std::size_t>();
  r.alphabet = e.at("alphabet").get<std::size_t>();
  r.max_length = e.at("max_length").get<std::size_t>();
  r.hidden = c.nn.at("hidden").get<std::size_t>();
  r.learning_rate = c.nn.at("learning_rate").get<double>();
  r.batch_episodes = c.schedule.at("batch_episodes").get<std::size_t>();
  r.reinforce = {a.at("baseline_decay").get<double>(), a.at("entropy_coef").get<double>()};
  return r;
}

inline env::PongConfig pong_env_config(const ExperimentConfig& c) {
  const Json& e = c.environment;
  env::PongConfig p;
  p.players = e.at("players").get<int>();
  p.rho = e.at("rho").get<double>();
  p.comm_mode = env::comm_mode_from_string(e.at("comm_mode").get<std::string>());
  p.width = e.at("width").get<int>();
  p.height = e.at("height").get<int>();
  p.paddle_length = e.at("paddle_length").get<int>();
  p.max_steps = e.at("max_steps").get<int>();
  p.points_per_episode = e.at("points_per_episode").get<int>();
  p.alphabet = e.at("alphabet").get<int>();
  p.max_vertical_speed = e.at("max_vertical_speed").get<int>();
  env::validate(p);
  return p;
}

inline agents::PongLearnerConfig pong_config(const ExperimentConfig& c) {
  agents::PongLearnerConfig p;
  p.env = pong_env_config(c);
  const Json &a = c.algorithm, &n = c.nn, &k = c.schedule;
  p.replay_capacity = a.at("replay_capacity").get<std::size_t>();
  p.warmup = a.at("warmup").get<std::size_t>();
  p.train_every = a.at("train_every").get<std::size_t>();
  p.minibatch = a.at("minibatch").get<std::size_t>();
  p.recurrent = a.at("recurrent").get<bool>();
  p.bptt_window = a.at("bptt_window").get<std::size_t>();
  p.hidden = n.at("hidden").get<std::size_t>();
  p.learning_rate = n.at("learning_rate").get<double>();
  p.grad_clip = n.at("grad_clip").get<double>();
  p.gamma = k.at("gamma").get<double>();
  p.target_refresh_steps = k.at("target_refresh").get<std::size_t>();
  p.epsilon = {k.at("epsilon_start").get<double>(), k.at("epsilon_end").get<double>(),
               k.at("epsilon_decay").get<std::size_t>()};
  return p;
}

// Builds the typed view for the configured environment so that bad values
// fail at parse time.
inline void validate_config(const ExperimentConfig& c) {
  const std::string env = c.environment_kind(), alg = c.algorithm_kind();
  if (env == "switch_riddle") {
    switch_config(c);
    switch_eval_channel(c);
  } else if (env == "referential") {
    const auto r = referential_config(c);
    if (r.space.n_shapes < 1 || r.space.n_colors < 1) throw ConfigurationError("empty attribute space");
    if (r.alphabet < 2 || r.max_length < 1) throw ConfigurationError("alphabet must be >= 2 and max_length >= 1");
    if (r.n_candidates < 2) throw ConfigurationError("n_candidates must be at least 2");
    if (r.batch_episodes == 0) throw ConfigurationError("schedule.batch_episodes must be positive");
  } else if (alg == "scripted") {
    pong_env_config(c);
    agents::scripted_pong_from_string(c.algorithm.at("policy").get<std::string>());
  } else {
    const auto p = pong_config(c);
    if (p.train_every == 0 || p.minibatch == 0 || p.target_refresh_steps == 0 || p.replay_capacity == 0 ||
        p.bptt_window == 0) {
      throw ConfigurationError("train_every, minibatch, target_refresh, replay_capacity and bptt_window must be positive");
    }
  }
}

}  // namespace emcomm::runner
