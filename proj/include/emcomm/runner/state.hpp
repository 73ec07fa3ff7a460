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

#include <sstream>
#include <string>
#include <vector>

#include "emcomm/agents/replay_buffer.hpp"
#include "emcomm/core/errors.hpp"
#include "emcomm/core/rng.hpp"
#include "emcomm/nn/checkpoint.hpp"
#include "emcomm/nn/optimizer.hpp"

// Packing of learner state into one checkpoint: arrays go into the
// parameter block under prefixes, scalars and RNG states into meta.
namespace emcomm::runner::state {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline const std::string& meta_at(const nn::Checkpoint& c, const std::string& key) {
  const auto it = c.meta.find(key);
  if (it == c.meta.end()) throw ConfigurationError("checkpoint lacks meta '" + key + "'");
  return it->second;
}

inline double meta_double(const nn::Checkpoint& c, const std::string& key) {
  try {
    return std::stod(meta_at(c, key));
  } catch (const std::logic_error&) {
    throw ConfigurationError("checkpoint meta '" + key + "' is not a number");
  }
}

inline std::uint64_t meta_uint(const nn::Checkpoint& c, const std::string& key) {
  try {
    return std::stoull(meta_at(c, key));
  } catch (const std::logic_error&) {
    throw ConfigurationError("checkpoint meta '" + key + "' is not an unsigned integer");
  }
}

inline void put_store(nn::Checkpoint& c, const std::string& prefix, const nn::ParameterStore& s) {
  for (const auto& [name, a] : s) c.params.add(prefix + name, a);
  c.meta[prefix + "version"] = std::to_string(s.version());
}

inline void take_store(const nn::Checkpoint& c, const std::string& prefix, nn::ParameterStore& s) {
  for (auto& [name, a] : s) {
    if (!c.params.contains(prefix + name)) throw ConfigurationError("checkpoint lacks parameter " + prefix + name);
    s.assign(name, c.params.get(prefix + name));
  }
  s.set_version(meta_uint(c, prefix + "version"));
}

inline void put_optimizer(nn::Checkpoint& c, const std::string& prefix, const nn::OptimizerState& o) {
  for (const auto& [name, a] : o.first_moment) c.params.add(prefix + "m/" + name, a);
  for (const auto& [name, a] : o.second_moment) c.params.add(prefix + "v/" + name, a);
  c.meta[prefix + "step"] = std::to_string(o.step);
  c.meta[prefix + "learning_rate"] = fmt(o.learning_rate);
}

inline void take_optimizer(const nn::Checkpoint& c, const std::string& prefix, nn::OptimizerState& o) {
  o.first_moment.clear();
  o.second_moment.clear();
  const std::string m = prefix + "m/", v = prefix + "v/";
  for (const auto& [name, a] : c.params) {
    if (name.rfind(m, 0) == 0) o.first_moment.emplace(name.substr(m.size()), a);
    if (name.rfind(v, 0) == 0) o.second_moment.emplace(name.substr(v.size()), a);
  }
  o.step = meta_uint(c, prefix + "step");
  o.learning_rate = meta_double(c, prefix + "learning_rate");
}

inline void put_rng(nn::Checkpoint& c, const std::string& key, const Rng& rng) { c.meta[key] = serialize_rng(rng); }

inline void take_rng(const nn::Checkpoint& c, const std::string& key, Rng& rng) {
  restore_rng(rng, meta_at(c, key));
}

// Replay ring as four arrays in storage order plus the write slot.
inline void put_replay(nn::Checkpoint& c, const std::string& prefix, const agents::ReplayBuffer<>& r) {
  c.meta[prefix + "size"] = std::to_string(r.size());
  c.meta[prefix + "next"] = std::to_string(r.next_slot());
  if (r.size() == 0) return;
  const std::size_t w = r[0].state.size();
  nn::Array s({r.size(), w}), s2({r.size(), w}), scalars({r.size(), 4});
  for (std::size_t i = 0; i < r.size(); ++i) {
    std::copy(r[i].state.begin(), r[i].state.end(), s.row_ptr(i));
    std::copy(r[i].next_state.begin(), r[i].next_state.end(), s2.row_ptr(i));
    scalars(i, 0) = static_cast<double>(r[i].action);
    scalars(i, 1) = r[i].reward;
    scalars(i, 2) = r[i].done ? 1.0 : 0.0;
    scalars(i, 3) = r[i].episode_end ? 1.0 : 0.0;
  }
  c.params.add(prefix + "state", std::move(s));
  c.params.add(prefix + "next_state", std::move(s2));
  c.params.add(prefix + "scalars", std::move(scalars));
}

inline void take_replay(const nn::Checkpoint& c, const std::string& prefix, agents::ReplayBuffer<>& r) {
  const std::size_t size = meta_uint(c, prefix + "size");
  std::vector<agents::Experience> items;
  if (size > 0) {
    const nn::Array& s = c.params.get(prefix + "state");
    const nn::Array& s2 = c.params.get(prefix + "next_state");
    const nn::Array& sc = c.params.get(prefix + "scalars");
    if (s.rows() != size || s2.rows() != size || sc.rows() != size || sc.cols() != 4) {
      throw ConfigurationError("checkpoint replay block is inconsistent");
    }
    for (std::size_t i = 0; i < size; ++i) {
      agents::Experience e;
      e.state.assign(s.row_ptr(i), s.row_ptr(i) + s.cols());
      e.next_state.assign(s2.row_ptr(i), s2.row_ptr(i) + s2.cols());
      e.action = static_cast<std::size_t>(sc(i, 0));
      e.reward = sc(i, 1);
      e.done = sc(i, 2) > 0.0;
      e.episode_end = sc(i, 3) > 0.0;
      items.push_back(std::move(e));
    }
  }
  r.restore(std::move(items), meta_uint(c, prefix + "next"));
}

}  // namespace emcomm::runner::state
