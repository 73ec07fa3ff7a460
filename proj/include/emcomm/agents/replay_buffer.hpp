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

#include <random>
#include <vector>

#include "emcomm/core/errors.hpp"
#include "emcomm/core/rng.hpp"

namespace emcomm::agents {

// A single transition e = (s, a, r, s', done).
struct Experience {
  std::vector<double> state;
  std::size_t action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
  // Last transition of its episode (terminal or cut by the step cap).
  bool episode_end = false;
};

// Fixed-capacity ring; once full the oldest entry is overwritten.
template <typename T = Experience>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigurationError("replay capacity must be positive");
    items_.reserve(capacity);
  }

  void push(T item) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
    } else {
      items_[next_] = std::move(item);
    }
    next_ = (next_ + 1) % capacity_;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const T& operator[](std::size_t i) const { return items_[i]; }
  // i-th oldest entry.
  const T& chronological(std::size_t i) const {
    if (i >= items_.size()) throw UsageError("replay index out of range");
    return items_.size() < capacity_ ? items_[i] : items_[(next_ + i) % capacity_];
  }
  // Slot the next push writes to.
  std::size_t next_slot() const { return next_; }

  // Reinstates a saved ring exactly (storage order and write position).
  void restore(std::vector<T> items, std::size_t next_slot) {
    if (items.size() > capacity_ || next_slot >= capacity_ ||
        (items.size() < capacity_ && next_slot != items.size() % capacity_)) {
      throw ConfigurationError("replay state does not fit this buffer");
    }
    items_ = std::move(items);
    next_ = next_slot;
  }

  // Uniform indices with replacement.
  std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const {
    if (items_.empty()) throw UsageError("sampling from an empty replay buffer");
    std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
    std::vector<std::size_t> out(count);
    for (auto& i : out) i = pick(rng);
    return out;
  }

  std::vector<const T*> sample(std::size_t count, Rng& rng) const {
    std::vector<const T*> out;
    for (std::size_t i : sample_indices(count, rng)) out.push_back(&items_[i]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<T> items_;
};

}  // namespace emcomm::agents
