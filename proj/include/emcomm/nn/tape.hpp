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
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "emcomm/core/errors.hpp"
#include "emcomm/nn/array.hpp"
#include "emcomm/nn/parameter_store.hpp"

namespace emcomm::nn {

class Tape;

// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Array& value() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Gradient routing through `channel` nodes. Blocked channels record the
// adjoint reaching them instead of passing it on.
enum class ChannelMode { kOpen, kBlocked };

// Append-only record of primitive ops. Node ids are a topological order, so
// the backward sweep simply walks ids in reverse.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  struct Node {
    Array value;
    Array grad;
    bool requires_grad = false;
    bool is_channel = false;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Array value) {
    nodes_.push_back(Node{std::move(value), {}, false, false, {}});
    return {this, nodes_.size() - 1};
  }

  // Leaf bound to a parameter. Repeated calls with the same store and name
  // return the same node, so gradients from every use accumulate in one place.
  Var param(const ParameterStore& store, const std::string& name) {
    auto it = params_.find(name);
    if (it != params_.end()) {
      if (it->second.store != &store) {
        throw ConfigurationError("parameter name bound from two stores on one tape: " + name);
      }
      return {this, it->second.node};
    }
    nodes_.push_back(Node{store.get(name), {}, true, false, {}});
    params_.emplace(name, ParamLeaf{&store, nodes_.size() - 1});
    return {this, nodes_.size() - 1};
  }

  Var push(Array value, bool requires_grad, BackwardFn fn, bool is_channel = false) {
    nodes_.push_back(Node{std::move(value), {}, requires_grad, is_channel,
                          requires_grad ? std::move(fn) : BackwardFn{}});
    return {this, nodes_.size() - 1};
  }

  const Array& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient buffer of a node, allocated on first touch.
  Array& grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Array::zeros_like(n.value);
    return n.grad;
  }
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.empty(); }

  Gradients backward(Var loss, ChannelMode mode = ChannelMode::kOpen) {
    if (loss.value().size() != 1) {
      throw UsageError("backward needs a scalar loss, got shape " + to_string(loss.value().shape()));
    }
    if (nodes_.empty()) throw UsageError("backward on an empty tape");
    reset_grads();
    grad(loss.id())[0] = 1.0;
    sweep(loss.id(), mode);
    return collect();
  }

  // Backward sweep seeded with explicit adjoints (node id -> adjoint) instead
  // of a scalar loss.
  Gradients backward_from_seeds(const std::map<std::size_t, Array>& seeds,
                                ChannelMode mode = ChannelMode::kOpen) {
    reset_grads();
    std::size_t top = 0;
    for (const auto& [id, adj] : seeds) {
      grad(id) += adj;
      top = std::max(top, id);
    }
    if (!seeds.empty()) sweep(top, mode);
    return collect();
  }

  // Adjoints that arrived at blocked channels during the last backward call.
  const std::map<std::size_t, Array>& channel_adjoints() const { return channel_adjoints_; }

  std::vector<std::string> bound_parameters() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : params_) out.push_back(name);
    return out;
  }

 private:
  struct ParamLeaf {
    const ParameterStore* store;
    std::size_t node;
  };

  void reset_grads() {
    for (Node& n : nodes_) n.grad = Array();
    channel_adjoints_.clear();
  }

  void sweep(std::size_t top, ChannelMode mode) {
    for (std::size_t i = top + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.empty() || !n.backward) continue;
      if (n.is_channel && mode == ChannelMode::kBlocked) {
        channel_adjoints_.emplace(i, n.grad);
        continue;
      }
      n.backward(*this, i);
    }
  }

  Gradients collect() {
    Gradients out;
    for (const auto& [name, leaf] : params_) {
      const Node& n = nodes_[leaf.node];
      out.emplace(name, n.grad.empty() ? Array::zeros_like(n.value) : n.grad);
    }
    return out;
  }

  std::vector<Node> nodes_;
  std::map<std::string, ParamLeaf> params_;
  std::map<std::size_t, Array> channel_adjoints_;
};

inline const Array& Var::value() const { return tape_->value(id_); }

}  // namespace emcomm::nn
