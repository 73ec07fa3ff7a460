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

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "emcomm/core/errors.hpp"
#include "emcomm/core/rng.hpp"

namespace emcomm::env {

inline std::string observation_digest(const std::vector<double>& obs) {
  std::vector<unsigned char> bytes;
  bytes.reserve(obs.size() * 8);
  for (double v : obs) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xffU));
  }
  return hex64(fnv1a64(bytes));
}

// One time step of one episode, all agents.
struct TraceRecord {
  std::size_t episode = 0;
  std::size_t step = 0;
  std::vector<std::string> obs_digest;
  std::vector<int> actions;
  std::vector<std::vector<double>> messages;
  std::vector<double> rewards;
  bool done = false;
  std::map<std::string, double> info;
  // Receiver's distribution over states or actions after this step's message.
  std::vector<double> posterior;

  bool operator==(const TraceRecord&) const = default;
};

inline nlohmann::json to_json(const TraceRecord& r) {
  nlohmann::json j;
  j["episode"] = r.episode;
  j["step"] = r.step;
  j["obs"] = r.obs_digest;
  j["actions"] = r.actions;
  j["messages"] = r.messages;
  j["rewards"] = r.rewards;
  j["done"] = r.done;
  j["info"] = r.info;
  if (!r.posterior.empty()) j["posterior"] = r.posterior;
  return j;
}

inline TraceRecord trace_record_from_json(const nlohmann::json& j) {
  TraceRecord r;
  r.episode = j.at("episode").get<std::size_t>();
  r.step = j.at("step").get<std::size_t>();
  r.obs_digest = j.at("obs").get<std::vector<std::string>>();
  r.actions = j.at("actions").get<std::vector<int>>();
  r.messages = j.at("messages").get<std::vector<std::vector<double>>>();
  r.rewards = j.at("rewards").get<std::vector<double>>();
  r.done = j.at("done").get<bool>();
  r.info = j.at("info").get<std::map<std::string, double>>();
  if (j.contains("posterior")) r.posterior = j.at("posterior").get<std::vector<double>>();
  return r;
}

// Line-delimited export: a header line naming the environment, then one JSON
// object per time step.
struct EpisodeTrace {
  std::string environment;
  // Run parameters needed to interpret the records (e.g. agent count).
  std::map<std::string, double> meta;
  // Free-form provenance (config hash, evaluation seed...).
  std::map<std::string, std::string> labels;
  std::vector<TraceRecord> records;

  bool operator==(const EpisodeTrace&) const = default;
};

inline void write_trace(std::ostream& os, const EpisodeTrace& trace) {
  nlohmann::json head{{"trace", "emcomm"}, {"environment", trace.environment}};
  if (!trace.meta.empty()) head["meta"] = trace.meta;
  if (!trace.labels.empty()) head["labels"] = trace.labels;
  os << head.dump() << "\n";
  for (const auto& r : trace.records) os << to_json(r).dump() << "\n";
}

inline EpisodeTrace read_trace(std::istream& is) {
  EpisodeTrace trace;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed trace record: ") + e.what(), line_no);
    }
    if (!header) {
      if (!j.is_object() || j.value("trace", "") != "emcomm") throw ParseError("missing trace header", line_no);
      trace.environment = j.value("environment", "");
      try {
        if (j.contains("meta")) trace.meta = j.at("meta").get<std::map<std::string, double>>();
        if (j.contains("labels")) trace.labels = j.at("labels").get<std::map<std::string, std::string>>();
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed trace meta: ") + e.what(), line_no);
      }
      header = true;
      continue;
    }
    try {
      trace.records.push_back(trace_record_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("incomplete trace record: ") + e.what(), line_no);
    }
  }
  if (!header) throw ParseError("empty trace", line_no + 1);
  return trace;
}

inline void save_trace(const std::string& path, const EpisodeTrace& trace) {
  std::ofstream os(path);
  if (!os) throw ConfigurationError("cannot write trace: " + path);
  write_trace(os, trace);
}

inline EpisodeTrace load_trace(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigurationError("cannot open trace: " + path);
  return read_trace(is);
}

}  // namespace emcomm::env
