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
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "emcomm/core/errors.hpp"
#include "emcomm/core/rng.hpp"

namespace emcomm::env {

// Object with a shape and a colour; encoded as [one-hot shape | one-hot colour].
struct AttributeObject {
  int shape = 0;
  int color = 0;

  auto operator<=>(const AttributeObject&) const = default;
};

struct AttributeSpace {
  int n_shapes = 5;
  int n_colors = 5;

  int size() const { return n_shapes * n_colors; }
  std::size_t encoding_width() const { return static_cast<std::size_t>(n_shapes + n_colors); }
  int index(const AttributeObject& o) const { return o.shape * n_colors + o.color; }
  AttributeObject object(int index) const { return {index / n_colors, index % n_colors}; }

  std::vector<double> encode(const AttributeObject& o) const {
    if (o.shape < 0 || o.shape >= n_shapes || o.color < 0 || o.color >= n_colors) {
      throw ConfigurationError("object outside attribute space");
    }
    std::vector<double> v(encoding_width(), 0.0);
    v[static_cast<std::size_t>(o.shape)] = 1.0;
    v[static_cast<std::size_t>(n_shapes + o.color)] = 1.0;
    return v;
  }
};

enum class SplitKind { kTrain, kZeroShot };

// Partition of the attribute combinations into a training pool and a
// held-out pool. Held-out combinations are taken along shifted diagonals so
// every shape and every colour still occurs in training.
class CombinationSplit {
 public:
  CombinationSplit() = default;

  CombinationSplit(AttributeSpace space, double held_out_fraction, std::uint64_t seed) : space_(space) {
    if (space.n_shapes < 1 || space.n_colors < 1) throw ConfigurationError("empty attribute space");
    if (held_out_fraction < 0.0 || held_out_fraction >= 1.0) {
      throw ConfigurationError("held-out fraction must lie in [0, 1)");
    }
    const int total = space.size();
    const int n_held = static_cast<int>(std::lround(held_out_fraction * total));
    Rng rng(seed);
    const int shift = std::uniform_int_distribution<int>(0, space.n_colors - 1)(rng);
    std::set<int> held;
    for (int d = 0; static_cast<int>(held.size()) < n_held && d < space.n_colors; ++d) {
      for (int s = 0; s < space.n_shapes && static_cast<int>(held.size()) < n_held; ++s) {
        held.insert(space.index({s, (s + shift + d) % space.n_colors}));
      }
    }
    for (int i = 0; i < total; ++i) (held.contains(i) ? held_out_ : train_).push_back(i);
  }

  static CombinationSplit all_train(AttributeSpace space) { return CombinationSplit(space, 0.0, 0); }

  const AttributeSpace& space() const { return space_; }
  const std::vector<int>& train() const { return train_; }
  const std::vector<int>& held_out() const { return held_out_; }
  bool is_held_out(int index) const {
    return std::binary_search(held_out_.begin(), held_out_.end(), index);
  }

 private:
  AttributeSpace space_;
  std::vector<int> train_;
  std::vector<int> held_out_;
};

struct ReferentialSample {
  std::vector<AttributeObject> candidates;
  std::size_t target_index = 0;
  bool zero_shot = false;

  const AttributeObject& target() const { return candidates[target_index]; }
};

// Training samples draw every candidate from the training pool. Zero-shot
// samples draw the target from the held-out pool and the distractors from
// the training pool. Candidates are distinct; the target slot is uniform.
inline ReferentialSample referential_sample(const CombinationSplit& split, std::size_t n_candidates,
                                            SplitKind kind, Rng& rng) {
  if (n_candidates < 2) throw ConfigurationError("referential game needs at least 2 candidates");
  const auto& train = split.train();
  const bool zero_shot = kind == SplitKind::kZeroShot;
  const std::size_t distractors_needed = n_candidates - 1;
  if (zero_shot) {
    if (split.held_out().empty()) throw ConfigurationError("zero-shot sample from an empty held-out pool");
    if (train.size() < distractors_needed) throw ConfigurationError("too few training objects for distractors");
  } else if (train.size() < n_candidates) {
    throw ConfigurationError("n_candidates " + std::to_string(n_candidates) + " exceeds the " +
                             std::to_string(train.size()) + " available objects");
  }
  std::vector<int> chosen;
  auto draw_distinct = [&](const std::vector<int>& pool, std::size_t count) {
    std::vector<int> picked;
    std::sample(pool.begin(), pool.end(), std::back_inserter(picked), static_cast<std::ptrdiff_t>(count), rng);
    std::shuffle(picked.begin(), picked.end(), rng);
    return picked;
  };
  int target = 0;
  std::vector<int> others;
  if (zero_shot) {
    const auto& held = split.held_out();
    target = held[std::uniform_int_distribution<std::size_t>(0, held.size() - 1)(rng)];
    others = draw_distinct(train, distractors_needed);
  } else {
    std::vector<int> all = draw_distinct(train, n_candidates);
    target = all.front();
    others.assign(all.begin() + 1, all.end());
  }
  ReferentialSample s;
  s.zero_shot = zero_shot;
  s.target_index = std::uniform_int_distribution<std::size_t>(0, n_candidates - 1)(rng);
  std::size_t o = 0;
  for (std::size_t i = 0; i < n_candidates; ++i) {
    const int idx = i == s.target_index ? target : others[o++];
    s.candidates.push_back(split.space().object(idx));
  }
  return s;
}

// 1 for a correct guess, 0 otherwise; both agents receive the same value.
inline double referential_score(std::size_t guess, std::size_t target_index) {
  return guess == target_index ? 1.0 : 0.0;
}

}  // namespace emcomm::env
