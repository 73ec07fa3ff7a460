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

#include "emcomm/core/errors.hpp"

namespace emcomm::belief {

// Finite set of feature configurations. Configuration i splits into a
// public part (seen by everyone) and a private part (seen by the acting
// agent only).
struct FeatureSpace {
  std::vector<int> public_part;
  std::vector<int> private_part;

  static FeatureSpace make(std::vector<int> pub, std::vector<int> priv) {
    if (pub.empty()) throw ConfigurationError("feature space must be nonempty");
    if (pub.size() != priv.size()) throw ConfigurationError("public/private projections must cover every configuration");
    return {std::move(pub), std::move(priv)};
  }

  // Every configuration public-identical and privately distinct.
  static FeatureSpace all_private(std::size_t n) {
    std::vector<int> priv(n);
    for (std::size_t i = 0; i < n; ++i) priv[i] = static_cast<int>(i);
    return make(std::vector<int>(n, 0), std::move(priv));
  }

  std::size_t size() const { return public_part.size(); }
};

// Probability per configuration of a FeatureSpace.
using PublicBelief = std::vector<double>;

// Private feature value -> action.
using DeterministicPartialPolicy = std::map<int, int>;

inline PublicBelief uniform_belief(const FeatureSpace& space) {
  return PublicBelief(space.size(), 1.0 / static_cast<double>(space.size()));
}

inline void check_normalized(const PublicBelief& b, double tol = 1e-9) {
  if (b.empty()) throw UsageError("empty belief");
  double sum = 0.0;
  for (double p : b) {
    if (p < 0.0 || !std::isfinite(p)) throw UsageError("belief entries must be finite and non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > tol) throw UsageError("belief is not normalized (sum " + std::to_string(sum) + ")");
}

namespace detail {

inline PublicBelief renormalize(PublicBelief post, const char* what) {
  double z = 0.0;
  for (double p : post) z += p;
  if (z <= 0.0) throw InconsistencyError(what);
  for (double& p : post) p /= z;
  return post;
}

}  // namespace detail

// B'(f) ∝ 1(pi(f_priv) = a) B(f).
inline PublicBelief belief_update(const PublicBelief& belief, const FeatureSpace& space,
                                  const DeterministicPartialPolicy& policy, int observed_action) {
  if (belief.size() != space.size()) throw UsageError("belief does not match the feature space");
  PublicBelief post(belief.size(), 0.0);
  for (std::size_t f = 0; f < belief.size(); ++f) {
    if (belief[f] == 0.0) continue;
    const auto it = policy.find(space.private_part[f]);
    if (it == policy.end()) {
      throw UsageError("policy undefined for private feature " + std::to_string(space.private_part[f]));
    }
    if (it->second == observed_action) post[f] = belief[f];
  }
  return detail::renormalize(std::move(post), "observed action has zero probability under the belief and policy");
}

// Conditions on a publicly observed feature value.
inline PublicBelief observe_public(const PublicBelief& belief, const FeatureSpace& space, int public_value) {
  if (belief.size() != space.size()) throw UsageError("belief does not match the feature space");
  PublicBelief post(belief.size(), 0.0);
  for (std::size_t f = 0; f < belief.size(); ++f)
    if (space.public_part[f] == public_value) post[f] = belief[f];
  return detail::renormalize(std::move(post), "public observation has zero probability under the belief");
}

// Natural-log entropy, 0 log 0 = 0.
inline double belief_entropy(const std::vector<double>& p) {
  check_normalized(p);
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

struct EntropyStep {
  double entropy = 0.0;
  double drop = 0.0;  // H_{t-1} - H_t; zero at the first step
};

inline std::vector<EntropyStep> entropy_evolution(const std::vector<std::vector<double>>& posteriors) {
  std::vector<EntropyStep> out;
  for (std::size_t t = 0; t < posteriors.size(); ++t) {
    EntropyStep s;
    s.entropy = belief_entropy(posteriors[t]);
    s.drop = t == 0 ? 0.0 : out.back().entropy - s.entropy;
    out.push_back(s);
  }
  return out;
}

}  // namespace emcomm::belief
