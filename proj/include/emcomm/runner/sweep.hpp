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
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "emcomm/runner/config.hpp"
#include "emcomm/runner/run.hpp"

namespace emcomm::runner {

struct SweepAxis {
  std::string name;
  std::vector<std::string> values;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::logic_error&) {
    throw ConfigurationError("'" + s + "' is not a number");
  }
  if (used != s.size()) throw ConfigurationError("'" + s + "' is not a number");
  return v;
}

inline std::string number_text(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace detail

// "name=v1,v2,..." or "name=start:stop:step" (inclusive numeric range).
inline SweepAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigurationError("axis must look like name=values: '" + spec + "'");
  SweepAxis axis{detail::trim(spec.substr(0, eq)), {}};
  const std::string rhs = spec.substr(eq + 1);
  if (rhs.find(':') != std::string::npos && rhs.find(',') == std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(rhs);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(detail::trim(p));
    if (parts.size() != 3) throw ConfigurationError("range must be start:stop:step");
    const double a = detail::parse_number(parts[0]), b = detail::parse_number(parts[1]),
                 step = detail::parse_number(parts[2]);
    if (!(step > 0.0) || b < a) throw ConfigurationError("range needs start <= stop and a positive step");
    const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) axis.values.push_back(detail::number_text(a + static_cast<double>(i) * step));
  } else {
    std::stringstream ss(rhs);
    for (std::string v; std::getline(ss, v, ',');) {
      v = detail::trim(v);
      if (v.empty()) throw ConfigurationError("empty value in axis '" + spec + "'");
      axis.values.push_back(v);
    }
  }
  if (axis.values.empty()) throw ConfigurationError("axis '" + axis.name + "' has no values");
  return axis;
}

struct SweepCell {
  std::string value;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::string config_hash;
  std::size_t episodes = 0;
  std::string directory;
  metrics::EvalReport report;
};

struct SweepResult {
  SweepAxis axis;
  std::vector<SweepCell> cells;  // value-major, then seed
  std::string csv_path;
};

// Worker count: EMCOMM_WORKERS when set, else 1.
inline std::size_t default_workers() {
  if (const char* w = std::getenv("EMCOMM_WORKERS"); w && *w) {
    try {
      const long n = std::stol(w);
      if (n >= 1) return static_cast<std::size_t>(n);
    } catch (const std::logic_error&) {
    }
    throw ConfigurationError(std::string("EMCOMM_WORKERS must be a positive integer, got '") + w + "'");
  }
  return 1;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

// Comparison table: one row per cell, final-report metrics as columns.
inline void write_sweep_csv(const std::string& path, const SweepResult& r) {
  std::set<std::string> names;
  for (const auto& c : r.cells)
    for (const auto& [n, m] : c.report.metrics) names.insert(n);
  std::ofstream os(path);
  if (!os) throw ConfigurationError("cannot write sweep table: " + path);
  os << "axis,value,seed,status,config_hash,episodes";
  for (const auto& n : names) os << "," << n;
  os << ",error\n";
  for (const auto& c : r.cells) {
    os << csv_field(r.axis.name) << "," << csv_field(c.value) << "," << c.seed << "," << (c.ok ? "ok" : "failed")
       << "," << c.config_hash << "," << c.episodes;
    for (const auto& n : names) {
      os << ",";
      const auto it = c.report.metrics.find(n);
      if (it != c.report.metrics.end()) os << metrics::detail::fmt(it->second.value);
    }
    os << "," << csv_field(c.error) << "\n";
  }
}

// One run per (value, seed) with seeds base.seed .. base.seed + seeds - 1.
// Cells run shared-nothing on `workers` threads, each in its own directory;
// a failing cell is recorded and the sweep goes on.
inline SweepResult sweep(const ExperimentConfig& base, const SweepAxis& axis, std::size_t seeds = 1,
                         std::size_t workers = 0, std::ostream* progress = nullptr) {
  namespace fs = std::filesystem;
  if (seeds == 0) throw ConfigurationError("a sweep needs at least one seed");
  if (workers == 0) workers = default_workers();
  SweepResult result;
  result.axis = axis;
  const fs::path root = fs::path(output_root(base)) / run_label(base) / ("sweep-" + axis.name);
  fs::create_directories(root);
  for (const auto& v : axis.values)
    for (std::size_t s = 0; s < seeds; ++s) {
      SweepCell cell;
      cell.value = v;
      cell.seed = base.seed + s;
      result.cells.push_back(std::move(cell));
    }
  // Validate every cell's config up front in the calling thread.
  std::vector<std::optional<ExperimentConfig>> configs(result.cells.size());
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    SweepCell& cell = result.cells[i];
    try {
      ExperimentConfig c = with_override(base, axis.name, cell.value);
      c.seed = cell.seed;
      cell.config_hash = config_hash(c);
      configs[i] = std::move(c);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
    cell.directory = (root / (axis.name + "=" + cell.value) / ("seed" + std::to_string(cell.seed))).string();
  }
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t i = next++; i < result.cells.size(); i = next++) {
      SweepCell& cell = result.cells[i];
      if (!configs[i]) continue;
      try {
        RunOptions opt;
        opt.directory = cell.directory;
        const RunRecord rec = run(*configs[i], opt);
        cell.report = rec.final_report;
        cell.episodes = rec.training.empty() ? 0 : rec.training.back().episode;
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      if (progress) {
        std::lock_guard<std::mutex> lock(io);
        *progress << "[sweep] " << axis.name << "=" << cell.value << " seed " << cell.seed << ": "
                  << (cell.ok ? "ok" : "failed: " + cell.error) << "\n"
                  << std::flush;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n_threads = std::min(workers, result.cells.size());
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  result.csv_path = (root / "summary.csv").string();
  write_sweep_csv(result.csv_path, result);
  return result;
}

}  // namespace emcomm::runner
