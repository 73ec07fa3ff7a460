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
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "emcomm/core/errors.hpp"
#include "emcomm/core/rng.hpp"
#include "emcomm/nn/array.hpp"

namespace emcomm::nn {

// Named trainable arrays in insertion order. Shapes are fixed at creation;
// assign() must keep the shape.
class ParameterStore {
 public:
  Array& add(const std::string& name, Array value) {
    if (index_.contains(name)) throw ConfigurationError("duplicate parameter name: " + name);
    index_.emplace(name, entries_.size());
    entries_.emplace_back(name, std::move(value));
    return entries_.back().second;
  }

  // Uniform Glorot initialisation for a [fan_in, fan_out] weight.
  Array& add_glorot(const std::string& name, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Array w({fan_in, fan_out});
    for (double& v : w.values()) v = dist(rng);
    return add(name, std::move(w));
  }

  Array& add_zeros(const std::string& name, Shape shape) { return add(name, Array(std::move(shape))); }

  bool contains(const std::string& name) const { return index_.contains(name); }

  const Array& get(const std::string& name) const { return entries_[position(name)].second; }
  Array& get(const std::string& name) { return entries_[position(name)].second; }

  void assign(const std::string& name, const Array& value) {
    Array& slot = get(name);
    if (slot.shape() != value.shape()) {
      throw ConfigurationError("parameter " + name + " has shape " + to_string(slot.shape()) +
                               ", cannot assign " + to_string(value.shape()));
    }
    slot = value;
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, a] : entries_) n += a.size();
    return n;
  }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [n, _] : entries_) out.push_back(n);
    return out;
  }

  std::uint64_t version() const { return version_; }
  void set_version(std::uint64_t v) { version_ = v; }
  void bump_version() { ++version_; }

  // Copies every value from `other`, which must hold the same names and shapes.
  void copy_values_from(const ParameterStore& other) {
    for (auto& [name, value] : entries_) assign(name, other.get(name));
  }

  bool operator==(const ParameterStore& other) const {
    return entries_ == other.entries_ && version_ == other.version_;
  }

 private:
  std::size_t position(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw UsageError("unknown parameter: " + name);
    return it->second;
  }

  std::vector<std::pair<std::string, Array>> entries_;
  std::map<std::string, std::size_t> index_;
  std::uint64_t version_ = 0;
};

using Gradients = std::map<std::string, Array>;

inline Gradients zero_gradients(const ParameterStore& store) {
  Gradients g;
  for (const auto& [name, value] : store) g.emplace(name, Array::zeros_like(value));
  return g;
}

inline void accumulate(Gradients& into, const Gradients& from) {
  for (const auto& [name, g] : from) {
    auto it = into.find(name);
    if (it == into.end()) {
      into.emplace(name, g);
    } else {
      it->second += g;
    }
  }
}

inline double global_norm(const Gradients& grads) {
  double s = 0.0;
  for (const auto& [_, g] : grads)
    for (double v : g.values()) s += v * v;
  return std::sqrt(s);
}

inline void clip_global_norm(Gradients& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    for (auto& [_, g] : grads) g *= max_norm / norm;
  }
}

}  // namespace emcomm::nn
