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

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "emcomm/core/errors.hpp"

namespace emcomm::metrics {

struct Metric {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;

  bool operator==(const Metric&) const = default;
};

struct EvalReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string provenance;
  std::map<std::string, Metric> metrics;
  std::map<std::string, std::vector<double>> series;

  bool operator==(const EvalReport&) const = default;
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline double parse_double(const std::string& tok, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (tok.empty() || *end != '\0') throw ParseError("bad number '" + tok + "'", line);
  return v;
}

inline void check_name(const std::string& name) {
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
    throw UsageError("report names must be nonempty and free of whitespace: '" + name + "'");
  }
}

}  // namespace detail

// Line-oriented text:
//   emcomm-eval-report 1
//   config_hash <hex>
//   seed <n>
//   provenance <text to end of line>
//   metric <name> <value> <stderr> <count>
//   series <name> <n> <v1> ... <vn>
inline void write_report(std::ostream& os, const EvalReport& r) {
  os << "emcomm-eval-report 1\n";
  os << "config_hash " << r.config_hash << "\n";
  os << "seed " << r.seed << "\n";
  os << "provenance " << r.provenance << "\n";
  for (const auto& [name, m] : r.metrics) {
    detail::check_name(name);
    os << "metric " << name << " " << detail::fmt(m.value) << " " << detail::fmt(m.std_error) << " " << m.count
       << "\n";
  }
  for (const auto& [name, xs] : r.series) {
    detail::check_name(name);
    os << "series " << name << " " << xs.size();
    for (double x : xs) os << " " << detail::fmt(x);
    os << "\n";
  }
}

inline EvalReport read_report(std::istream& is) {
  EvalReport r;
  std::string line;
  std::size_t n = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (!header) {
      std::string version;
      ls >> version;
      if (key != "emcomm-eval-report" || version != "1") throw ParseError("not an eval report", n);
      header = true;
      continue;
    }
    if (key == "config_hash") {
      ls >> r.config_hash;
    } else if (key == "seed") {
      std::string tok;
      ls >> tok;
      try {
        r.seed = std::stoull(tok);
      } catch (const std::exception&) {
        throw ParseError("bad seed", n);
      }
    } else if (key == "provenance") {
      r.provenance = line.size() > 11 ? line.substr(11) : "";
    } else if (key == "metric") {
      std::string name, v, se, c;
      if (!(ls >> name >> v >> se >> c)) throw ParseError("truncated metric line", n);
      Metric m{detail::parse_double(v, n), detail::parse_double(se, n), 0};
      try {
        m.count = std::stoull(c);
      } catch (const std::exception&) {
        throw ParseError("bad sample count", n);
      }
      r.metrics[name] = m;
    } else if (key == "series") {
      std::string name;
      std::size_t len = 0;
      if (!(ls >> name >> len)) throw ParseError("truncated series line", n);
      std::vector<double> xs;
      std::string tok;
      while (ls >> tok) xs.push_back(detail::parse_double(tok, n));
      if (xs.size() != len) throw ParseError("series length mismatch", n);
      r.series[name] = std::move(xs);
    } else {
      throw ParseError("unknown report key '" + key + "'", n);
    }
  }
  if (!header) throw ParseError("empty report", n + 1);
  return r;
}

inline std::string report_to_string(const EvalReport& r) {
  std::ostringstream os;
  write_report(os, r);
  return os.str();
}

inline void save_report(const std::string& path, const EvalReport& r) {
  std::ofstream os(path);
  if (!os) throw ConfigurationError("cannot write report: " + path);
  write_report(os, r);
}

inline EvalReport load_report(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigurationError("cannot open report: " + path);
  return read_report(is);
}

}  // namespace emcomm::metrics
