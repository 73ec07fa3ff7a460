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

#include <map>
#include <set>
#include <vector>

#include "emcomm/core/errors.hpp"

namespace emcomm::metrics {

struct MessageRecord {
  std::vector<int> message;
  int object_label = 0;
  int category = 0;
  std::size_t episode = 0;
  bool success = false;
};

using MessageLog = std::vector<MessageRecord>;

// Share of records whose category matches the majority category of their
// message cluster. Equal majority counts resolve to the lowest category.
inline double purity(const MessageLog& log) {
  if (log.empty()) throw UsageError("purity of an empty log");
  std::map<std::vector<int>, std::map<int, std::size_t>> clusters;
  for (const auto& r : log) ++clusters[r.message][r.category];
  std::size_t agree = 0;
  for (const auto& [msg, counts] : clusters) {
    std::size_t best = 0;
    for (const auto& [cat, n] : counts) best = std::max(best, n);  // map order gives lowest index first
    agree += best;
  }
  return static_cast<double>(agree) / static_cast<double>(log.size());
}

// Majority category per message cluster, ties to the lowest index.
inline std::map<std::vector<int>, int> cluster_majorities(const MessageLog& log) {
  std::map<std::vector<int>, std::map<int, std::size_t>> clusters;
  for (const auto& r : log) ++clusters[r.message][r.category];
  std::map<std::vector<int>, int> out;
  for (const auto& [msg, counts] : clusters) {
    int arg = counts.begin()->first;
    std::size_t best = 0;
    for (const auto& [cat, n] : counts)
      if (n > best) {
        best = n;
        arg = cat;
      }
    out.emplace(msg, arg);
  }
  return out;
}

inline std::size_t lexicon_size(const MessageLog& log) {
  std::set<std::vector<int>> distinct;
  for (const auto& r : log) distinct.insert(r.message);
  return distinct.size();
}

// Number of distinct messages of length 1..L over K symbols.
inline double max_lexicon(std::size_t alphabet, std::size_t max_length) {
  double total = 0.0, power = 1.0;
  for (std::size_t l = 1; l <= max_length; ++l) {
    power *= static_cast<double>(alphabet);
    total += power;
  }
  return total;
}

}  // namespace emcomm::metrics
