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
#include <span>
#include <string>
#include <vector>

#include "emcomm/core/errors.hpp"
#include "emcomm/nn/array.hpp"
#include "emcomm/nn/tape.hpp"

namespace emcomm::nn {

namespace detail {

inline Tape& same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw UsageError("operands recorded on different tapes");
  return a.tape();
}

inline bool needs(const Var& v) { return v.tape().requires_grad(v.id()); }

inline double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// C[m,n] += A[m,k] * B[k,n]
inline void gemm_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                     std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename F, typename D>
Var unary(const Var& x, F f, D dfdx_from_y_x) {
  const Array& xv = x.value();
  Array out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  const std::size_t xi = x.id();
  return x.tape().push(std::move(out), needs(x), [xi, dfdx_from_y_x](Tape& t, std::size_t self) {
    const Array& g = t.grad(self);
    const Array& y = t.value(self);
    const Array& xv = t.value(xi);
    Array& gx = t.grad(xi);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * dfdx_from_y_x(y[i], xv[i]);
  });
}

}  // namespace detail

// x[m,k] W[k,n]
inline Var matmul(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b);
  const Array& av = a.value();
  const Array& bv = b.value();
  if (av.cols() != bv.rows() || bv.rank() != 2) {
    throw ConfigurationError("matmul inner dimensions disagree: " + to_string(av.shape()) + " x " +
                             to_string(bv.shape()));
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Array out({m, n});
  detail::gemm_acc(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  const std::size_t ai = a.id(), bi = b.id();
  const bool need_a = detail::needs(a), need_b = detail::needs(b);
  return t.push(std::move(out), need_a || need_b, [=](Tape& t, std::size_t self) {
    const Array& g = t.grad(self);
    const Array& av = t.value(ai);
    const Array& bv = t.value(bi);
    if (need_a) {
      Array& ga = t.grad(ai);
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g.row_ptr(i);
        double* garow = ga.data().data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = bv.row_ptr(p);
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
          garow[p] += s;
        }
      }
    }
    if (need_b) {
      Array& gb = t.grad(bi);
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g.row_ptr(i);
        const double* arow = av.data().data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
          const double a_ip = arow[p];
          if (a_ip == 0.0) continue;
          double* gbrow = gb.row_ptr(p);
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += a_ip * grow[j];
        }
      }
    }
  });
}

// Elementwise sum. `b` may also be a single row broadcast over the rows of `a`.
inline Var add(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b);
  const Array& av = a.value();
  const Array& bv = b.value();
  const bool broadcast = av.shape() != bv.shape();
  if (broadcast && (bv.rows() != 1 || bv.cols() != av.cols())) {
    throw ConfigurationError("add shape mismatch: " + to_string(av.shape()) + " + " +
                             to_string(bv.shape()));
  }
  Array out = av;
  const std::size_t cols = av.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += broadcast ? bv[i % cols] : bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  const bool need_a = detail::needs(a), need_b = detail::needs(b);
  return t.push(std::move(out), need_a || need_b, [=](Tape& t, std::size_t self) {
    const Array& g = t.grad(self);
    if (need_a) t.grad(ai) += g;
    if (need_b) {
      Array& gb = t.grad(bi);
      for (std::size_t i = 0; i < g.size(); ++i) gb[broadcast ? i % cols : i] += g[i];
    }
  });
}

inline Var sub(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b);
  const Array& av = a.value();
  Array out = av - b.value();
  const std::size_t ai = a.id(), bi = b.id();
  const bool need_a = detail::needs(a), need_b = detail::needs(b);
  return t.push(std::move(out), need_a || need_b, [=](Tape& t, std::size_t self) {
    const Array& g = t.grad(self);
    if (need_a) t.grad(ai) += g;
    if (need_b) {
      Array& gb = t.grad(bi);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

// Elementwise (Hadamard) product. `b` may be a [rows,1] column broadcast
// across the columns of `a`.
inline Var mul(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b);
  const Array& av = a.value();
  const Array& bv = b.value();
  const bool column = av.shape() != bv.shape();
  if (column && (bv.cols() != 1 || bv.rows() != av.rows())) {
    throw ConfigurationError("mul shape mismatch: " + to_string(av.shape()) + " * " +
                             to_string(bv.shape()));
  }
  const std::size_t cols = av.cols();
  Array out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * (column ? bv[i / cols] : bv[i]);
  const std::size_t ai = a.id(), bi = b.id();
  const bool need_a = detail::needs(a), need_b = detail::needs(b);
  return t.push(std::move(out), need_a || need_b, [=](Tape& t, std::size_t self) {
    const Array& g = t.grad(self);
    const Array& av = t.value(ai);
    const Array& bv = t.value(bi);
    if (need_a) {
      Array& ga = t.grad(ai);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (column ? bv[i / cols] : bv[i]);
    }
    if (need_b) {
      Array& gb = t.grad(bi);
      for (std::size_t i = 0; i < g.size(); ++i) gb[column ? i / cols : i] += g[i] * av[i];
    }
  });
}

inline Var scale(const Var& x, double s) {
  return detail::unary(x, [s](double v) { return s * v; }, [s](double, double) { return s; });
}

inline Var add_scalar(const Var& x, double s) {
  return detail::unary(x, [s](double v) { return v + s; }, [](double, double) { return 1.0; });
}

inline Var sigmoid(const Var& x) {
  return detail::unary(x, detail::stable_sigmoid, [](double y, double) { return y * (1.0 - y); });
}

inline Var tanh(const Var& x) {
  return detail::unary(x, [](double v) { return std::tanh(v); },
                       [](double y, double) { return 1.0 - y * y; });
}

inline Var relu(const Var& x) {
  return detail::unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
                       [](double, double v) { return v > 0.0 ? 1.0 : 0.0; });
}

inline Var square(const Var& x) {
  return detail::unary(x, [](double v) { return v * v; }, [](double, double v) { return 2.0 * v; });
}

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }

// Sum of all entries as a shape-[1] scalar.
inline Var sum(const Var& x) {
  const std::size_t xi = x.id();
  return x.tape().push(Array::vector({x.value().sum()}), detail::needs(x),
                       [xi](Tape& t, std::size_t self) {
                         const double g = t.grad(self)[0];
                         for (double& v : t.grad(xi).values()) v += g;
                       });
}

inline Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

// Same values, gradient not propagated.
inline Var detach(const Var& x) { return x.tape().constant(x.value()); }

// Identity whose backward can be blocked per sweep (see ChannelMode).
inline Var channel(const Var& x) {
  const std::size_t xi = x.id();
  return x.tape().push(
      x.value(), detail::needs(x),
      [xi](Tape& t, std::size_t self) { t.grad(xi) += t.grad(self); }, /*is_channel=*/true);
}

inline Var reshape(const Var& x, Shape shape) {
  Array out = x.value().reshaped(std::move(shape));
  const std::size_t xi = x.id();
  return x.tape().push(std::move(out), detail::needs(x), [xi](Tape& t, std::size_t self) {
    Array& gx = t.grad(xi);
    const Array& g = t.grad(self);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ConfigurationError("concat_cols of nothing");
  Tape& t = parts.front().tape();
  const std::size_t rows = parts.front().value().rows();
  std::size_t cols = 0;
  bool need = false;
  for (const Var& p : parts) {
    if (&p.tape() != &t) throw UsageError("operands recorded on different tapes");
    if (p.value().rows() != rows) {
      throw ConfigurationError("concat_cols row mismatch: " + std::to_string(p.value().rows()) +
                               " vs " + std::to_string(rows));
    }
    cols += p.value().cols();
    need = need || detail::needs(p);
  }
  Array out({rows, cols});
  std::vector<std::size_t> ids, offsets, widths;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Array& v = p.value();
    const std::size_t w = v.cols();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(v.row_ptr(r), w, out.row_ptr(r) + off);
    ids.push_back(p.id());
    offsets.push_back(off);
    widths.push_back(w);
    off += w;
  }
  return t.push(std::move(out), need, [=](Tape& t, std::size_t self) {
    const Array& g = t.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!t.requires_grad(ids[k])) continue;
      Array& gp = t.grad(ids[k]);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* src = g.row_ptr(r) + offsets[k];
        double* dst = gp.data().data() + r * widths[k];
        for (std::size_t c = 0; c < widths[k]; ++c) dst[c] += src[c];
      }
    }
  });
}

// Columns [begin, end) of every row.
inline Var slice_cols(const Var& x, std::size_t begin, std::size_t end) {
  const Array& xv = x.value();
  if (begin >= end || end > xv.cols()) {
    throw ConfigurationError("slice_cols range [" + std::to_string(begin) + "," + std::to_string(end) +
                             ") outside " + std::to_string(xv.cols()) + " columns");
  }
  const std::size_t rows = xv.rows(), cols = xv.cols(), w = end - begin;
  Array out({rows, w});
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(xv.row_ptr(r) + begin, w, out.row_ptr(r));
  const std::size_t xi = x.id();
  return x.tape().push(std::move(out), detail::needs(x), [=](Tape& t, std::size_t self) {
    const Array& g = t.grad(self);
    Array& gx = t.grad(xi);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < w; ++c) gx[r * cols + begin + c] += g(r, c);
  });
}

// Row r of the result is row index[r] of x.
inline Var gather_rows(const Var& x, std::vector<std::size_t> index) {
  const Array& xv = x.value();
  const std::size_t cols = xv.cols();
  Array out({index.size(), cols});
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= xv.rows()) throw ConfigurationError("gather_rows index out of range");
    std::copy_n(xv.row_ptr(index[r]), cols, out.row_ptr(r));
  }
  const std::size_t xi = x.id();
  return x.tape().push(std::move(out), detail::needs(x),
                       [xi, cols, index = std::move(index)](Tape& t, std::size_t self) {
                         const Array& g = t.grad(self);
                         Array& gx = t.grad(xi);
                         for (std::size_t r = 0; r < index.size(); ++r) {
                           double* dst = gx.data().data() + index[r] * cols;
                           for (std::size_t c = 0; c < cols; ++c) dst[c] += g(r, c);
                         }
                       });
}

// [rows,1] column holding x(r, index[r]).
inline Var pick(const Var& x, std::vector<std::size_t> index) {
  const Array& xv = x.value();
  if (index.size() != xv.rows()) throw ConfigurationError("pick needs one index per row");
  Array out({xv.rows(), 1});
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= xv.cols()) throw ConfigurationError("pick index out of range");
    out[r] = xv(r, index[r]);
  }
  const std::size_t xi = x.id(), cols = xv.cols();
  return x.tape().push(std::move(out), detail::needs(x),
                       [xi, cols, index = std::move(index)](Tape& t, std::size_t self) {
                         const Array& g = t.grad(self);
                         Array& gx = t.grad(xi);
                         for (std::size_t r = 0; r < index.size(); ++r) gx[r * cols + index[r]] += g[r];
                       });
}

// [rows,1] column of per-row dot products.
inline Var rowwise_dot(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b);
  const Array& av = a.value();
  const Array& bv = b.value();
  av.require_same_shape(bv, "rowwise_dot");
  const std::size_t rows = av.rows(), cols = av.cols();
  Array out({rows, 1});
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += av(r, c) * bv(r, c);
    out[r] = s;
  }
  const std::size_t ai = a.id(), bi = b.id();
  const bool need_a = detail::needs(a), need_b = detail::needs(b);
  return t.push(std::move(out), need_a || need_b, [=](Tape& t, std::size_t self) {
    const Array& g = t.grad(self);
    const Array& av = t.value(ai);
    const Array& bv = t.value(bi);
    if (need_a) {
      Array& ga = t.grad(ai);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i / cols] * bv[i];
    }
    if (need_b) {
      Array& gb = t.grad(bi);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i / cols] * av[i];
    }
  });
}

inline Array log_softmax_rows_value(const Array& x) {
  Array out(x.shape());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double* row = x.row_ptr(r);
    const double mx = *std::max_element(row, row + x.cols());
    double s = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) s += std::exp(row[c] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = row[c] - lse;
  }
  return out;
}

inline Array softmax_rows_value(const Array& x) {
  Array out = log_softmax_rows_value(x);
  for (double& v : out.values()) v = std::exp(v);
  return out;
}

inline Var log_softmax_rows(const Var& x) {
  Array out = log_softmax_rows_value(x.value());
  const std::size_t xi = x.id();
  return x.tape().push(std::move(out), detail::needs(x), [xi](Tape& t, std::size_t self) {
    const Array& g = t.grad(self);
    const Array& y = t.value(self);
    Array& gx = t.grad(xi);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double gs = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) gs += g(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) gx(r, c) += g(r, c) - std::exp(y(r, c)) * gs;
    }
  });
}

inline Var softmax_rows(const Var& x) {
  Array out = softmax_rows_value(x.value());
  const std::size_t xi = x.id();
  return x.tape().push(std::move(out), detail::needs(x), [xi](Tape& t, std::size_t self) {
    const Array& g = t.grad(self);
    const Array& p = t.value(self);
    Array& gx = t.grad(xi);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < p.cols(); ++c) dot += g(r, c) * p(r, c);
      for (std::size_t c = 0; c < p.cols(); ++c) gx(r, c) += p(r, c) * (g(r, c) - dot);
    }
  });
}

// Per-row entropy (nats) of softmax(logits), as a [rows,1] column.
inline Var softmax_entropy_rows(const Var& logits) {
  Var logp = log_softmax_rows(logits);
  Var p = softmax_rows(logits);
  Var plogp = mul(p, logp);
  const std::size_t cols = logits.value().cols();
  Var ones = logits.tape().constant(Array({cols, 1}, 1.0));
  return scale(matmul(plogp, ones), -1.0);
}

// Row-wise blend: rows with keep[r] take `a`, the rest take `b`.
inline Var select_rows(const std::vector<bool>& keep_a, const Var& a, const Var& b) {
  const std::size_t rows = a.value().rows();
  if (keep_a.size() != rows) throw ConfigurationError("select_rows mask size mismatch");
  Array m({rows, 1}), inv({rows, 1});
  for (std::size_t r = 0; r < rows; ++r) {
    m[r] = keep_a[r] ? 1.0 : 0.0;
    inv[r] = 1.0 - m[r];
  }
  Tape& t = detail::same_tape(a, b);
  return add(mul(a, t.constant(std::move(m))), mul(b, t.constant(std::move(inv))));
}

}  // namespace emcomm::nn
