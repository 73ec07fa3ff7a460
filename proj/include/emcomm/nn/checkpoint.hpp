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
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "emcomm/core/errors.hpp"
#include "emcomm/nn/parameter_store.hpp"

namespace emcomm::nn {

// On-disk layout:
//
//   emcomm-checkpoint 1
//   config_hash <16 hex digits>
//   version <uint>
//   meta <key> <value-to-end-of-line>          (zero or more)
//   param <name> <rank> <d0> [<d1>]             (one per parameter, in order)
//   payload <total float count>
//   <binary: little-endian IEEE-754 float64 values, parameters concatenated>
//
// Names and meta keys contain no whitespace.
struct Checkpoint {
  std::string config_hash;
  ParameterStore params;
  std::map<std::string, std::string> meta;
};

namespace detail {

inline void put_le64(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffU);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

inline double get_le64(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8)) throw ParseError("checkpoint payload truncated", 0);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

inline void check_token(const std::string& s, const char* what) {
  if (s.empty() || s.find_first_of(" \t\r\n") != std::string::npos) {
    throw ConfigurationError(std::string("checkpoint ") + what + " must be a non-empty token: '" + s + "'");
  }
}

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  os << "emcomm-checkpoint 1\n";
  os << "config_hash " << (ckpt.config_hash.empty() ? "0" : ckpt.config_hash) << "\n";
  os << "version " << ckpt.params.version() << "\n";
  for (const auto& [k, v] : ckpt.meta) {
    detail::check_token(k, "meta key");
    if (v.find('\n') != std::string::npos) throw ConfigurationError("checkpoint meta value has a newline");
    os << "meta " << k << " " << v << "\n";
  }
  std::size_t total = 0;
  for (const auto& [name, a] : ckpt.params) {
    detail::check_token(name, "parameter name");
    os << "param " << name << " " << a.rank();
    for (std::size_t d : a.shape()) os << " " << d;
    os << "\n";
    total += a.size();
  }
  os << "payload " << total << "\n";
  for (const auto& [_, a] : ckpt.params)
    for (double v : a.values()) detail::put_le64(os, v);
}

inline Checkpoint read_checkpoint(std::istream& is) {
  Checkpoint ckpt;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<std::string, Shape>> layout;
  auto next = [&]() {
    if (!std::getline(is, line)) throw ParseError("unexpected end of checkpoint header", line_no + 1);
    ++line_no;
  };
  next();
  if (line != "emcomm-checkpoint 1") throw ParseError("not an emcomm checkpoint", line_no);
  std::uint64_t version = 0;
  std::size_t payload = 0;
  while (true) {
    next();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "config_hash") {
      ls >> ckpt.config_hash;
    } else if (key == "version") {
      if (!(ls >> version)) throw ParseError("bad version", line_no);
    } else if (key == "meta") {
      std::string k;
      ls >> k;
      std::string v;
      std::getline(ls, v);
      if (!v.empty() && v.front() == ' ') v.erase(0, 1);
      ckpt.meta[k] = v;
    } else if (key == "param") {
      std::string name;
      std::size_t rank = 0;
      if (!(ls >> name >> rank) || rank < 1 || rank > 2) throw ParseError("bad param line", line_no);
      Shape shape(rank);
      for (auto& d : shape)
        if (!(ls >> d) || d == 0) throw ParseError("bad param shape", line_no);
      layout.emplace_back(name, shape);
    } else if (key == "payload") {
      if (!(ls >> payload)) throw ParseError("bad payload line", line_no);
      break;
    } else {
      throw ParseError("unknown checkpoint record '" + key + "'", line_no);
    }
  }
  std::size_t expected = 0;
  for (const auto& [_, shape] : layout) expected += Array::product(shape);
  if (expected != payload) throw ParseError("payload count does not match parameter shapes", line_no);
  for (const auto& [name, shape] : layout) {
    Array a(shape);
    for (double& v : a.values()) v = detail::get_le64(is);
    ckpt.params.add(name, std::move(a));
  }
  ckpt.params.set_version(version);
  return ckpt;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigurationError("cannot open checkpoint for writing: " + path);
  write_checkpoint(os, ckpt);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigurationError("cannot open checkpoint: " + path);
  return read_checkpoint(is);
}

}  // namespace emcomm::nn
