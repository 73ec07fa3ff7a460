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
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "emcomm/core/errors.hpp"

namespace emcomm::nn {

using Shape = std::vector<std::size_t>;

inline std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

// Dense row-major array of doubles. Rank 1 arrays act as a single row when
// used as a matrix; rank 2 arrays are [rows, cols].
class Array {
 public:
  Array() = default;

  explicit Array(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
    check_shape(shape_);
    values_.assign(product(shape_), fill);
  }

  Array(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
    check_shape(shape_);
    if (values_.size() != product(shape_)) {
      throw ConfigurationError("array of shape " + to_string(shape_) + " needs " +
                               std::to_string(product(shape_)) + " values, got " +
                               std::to_string(values_.size()));
    }
  }

  static Array vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Array({n}, std::move(values));
  }

  static Array matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Array({rows, cols}, std::move(values));
  }

  static Array zeros(std::size_t rows, std::size_t cols) { return Array({rows, cols}); }

  static Array identity(std::size_t n) {
    Array a({n, n});
    for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
    return a;
  }

  static Array zeros_like(const Array& other) { return Array(other.shape_); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::size_t rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
  std::size_t cols() const {
    if (shape_.empty()) return 0;
    return shape_.size() == 2 ? shape_[1] : shape_[0];
  }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& data() { return values_; }
  const std::vector<double>& data() const { return values_; }

  double* row_ptr(std::size_t r) { return values_.data() + r * cols(); }
  const double* row_ptr(std::size_t r) const { return values_.data() + r * cols(); }

  double sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  Array reshaped(Shape shape) const { return Array(std::move(shape), values_); }

  Array& operator+=(const Array& other) {
    require_same_shape(other, "+=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
  }

  Array& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }

  friend Array operator+(Array a, const Array& b) { return a += b; }
  friend Array operator*(Array a, double s) { return a *= s; }

  Array operator-(const Array& other) const {
    require_same_shape(other, "-");
    Array out(shape_);
    for (std::size_t i = 0; i < values_.size(); ++i) out.values_[i] = values_[i] - other.values_[i];
    return out;
  }

  bool operator==(const Array& other) const = default;

  void require_same_shape(const Array& other, const char* op) const {
    if (shape_ != other.shape_) {
      throw ConfigurationError(std::string("shape mismatch in ") + op + ": " + to_string(shape_) +
                               " vs " + to_string(other.shape_));
    }
  }

  static std::size_t product(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

 private:
  static void check_shape(const Shape& shape) {
    if (shape.empty() || shape.size() > 2) {
      throw ConfigurationError("arrays have rank 1 or 2, got " + to_string(shape));
    }
    for (std::size_t d : shape) {
      if (d == 0) throw ConfigurationError("zero dimension in shape " + to_string(shape));
    }
  }

  Shape shape_;
  std::vector<double> values_;
};

inline double max_abs_diff(const Array& a, const Array& b) {
  a.require_same_shape(b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace emcomm::nn
