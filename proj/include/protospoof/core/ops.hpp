// Copyright 2026 The protospoof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "protospoof/core/conv_kernels.hpp"
#include "protospoof/core/graph.hpp"

namespace protospoof::ops {

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

template <class T>
void require_rank(Var<T> x, std::size_t rank, const char* op) {
  if (x.value().rank() != rank)
    throw ConfigError(std::string(op) + " expects rank " + std::to_string(rank) +
                      ", got " + shape_string(x.shape()));
}

template <class T>
void require_same_shape(Var<T> a, Var<T> b, const char* op) {
  if (a.shape() != b.shape())
    throw ConfigError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                      " vs " + shape_string(b.shape()));
}

// Elementwise op given f(x) and df/dx expressed through (x, y).
template <class T, class F, class DF>
Var<T> unary(Var<T> x, const char* name, F f, DF df) {
  const Tensor<T>& xv = x.value();
  Tensor<T> y(xv.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
  return x.graph().record(name, std::move(y), {x},
                          [x, df](const Tensor<T>& gy, const Tensor<T>& y) {
                            const Tensor<T>& xv = x.value();
                            Tensor<T>& gx = x.graph().grad(x);
                            for (std::size_t i = 0; i < gx.size(); ++i)
                              gx[i] += gy[i] * df(xv[i], y[i]);
                          });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise

template <class T>
Var<T> relu(Var<T> x) {
  // Subgradient at 0 is 0.
  return detail::unary(
      x, "relu", [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <class T>
Var<T> sigmoid(Var<T> x) {
  return detail::unary(
      x, "sigmoid",
      [](T v) {
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <class T>
Var<T> tanh(Var<T> x) {
  return detail::unary(
      x, "tanh", [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

/// log(1 + e^x), evaluated without overflow.
template <class T>
T softplus_value(T v) {
  return v > T(0) ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

template <class T>
Var<T> softplus(Var<T> x) {
  return detail::unary(
      x, "softplus", [](T v) { return softplus_value(v); },
      [](T v, T) {
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      });
}

template <class T>
Var<T> square(Var<T> x) {
  return detail::unary(
      x, "square", [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

/// sqrt(v) for v >= floor and v / sqrt(floor) below it: continuous, exactly 0
/// at 0, with a bounded derivative near 0.
template <class T>
Var<T> safe_sqrt(Var<T> x, T floor = T(1e-8)) {
  const T root = std::sqrt(floor);
  return detail::unary(
      x, "safe_sqrt",
      [floor, root](T v) { return v >= floor ? std::sqrt(v) : v / root; },
      [floor, root](T v, T y) { return v >= floor ? T(0.5) / y : T(1) / root; });
}

template <class T>
Var<T> scale(Var<T> x, T c) {
  return detail::unary(
      x, "scale", [c](T v) { return c * v; }, [c](T, T) { return c; });
}

template <class T>
Var<T> add_scalar(Var<T> x, T c) {
  return detail::unary(
      x, "add_scalar", [c](T v) { return v + c; }, [](T, T) { return T(1); });
}

/// y = a ⊙ x + b with constant a, b of x's shape.
template <class T>
Var<T> affine_elementwise(Var<T> x, const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.shape() == x.shape() && b.shape() == x.shape(),
                  "affine_elementwise: coefficient shape mismatch");
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] * x.value()[i] + b[i];
  return x.graph().record("affine_elementwise", std::move(y), {x},
                          [x, a](const Tensor<T>& gy, const Tensor<T>&) {
                            Tensor<T>& gx = x.graph().grad(x);
                            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += a[i] * gy[i];
                          });
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  detail::require_same_shape(a, b, "add");
  Tensor<T> y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.value()[i];
  return a.graph().record("add", std::move(y), {a, b},
                          [a, b](const Tensor<T>& gy, const Tensor<T>&) {
                            for (Var<T> v : {a, b}) {
                              if (!v.requires_grad()) continue;
                              Tensor<T>& gv = v.graph().grad(v);
                              for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += gy[i];
                            }
                          });
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
  detail::require_same_shape(a, b, "sub");
  Tensor<T> y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= b.value()[i];
  return a.graph().record("sub", std::move(y), {a, b},
                          [a, b](const Tensor<T>& gy, const Tensor<T>&) {
                            if (a.requires_grad()) {
                              Tensor<T>& ga = a.graph().grad(a);
                              for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
                            }
                            if (b.requires_grad()) {
                              Tensor<T>& gb = b.graph().grad(b);
                              for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= gy[i];
                            }
                          });
}

template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
  detail::require_same_shape(a, b, "mul");
  Tensor<T> y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b.value()[i];
  return a.graph().record("mul", std::move(y), {a, b},
                          [a, b](const Tensor<T>& gy, const Tensor<T>&) {
                            if (a.requires_grad()) {
                              Tensor<T>& ga = a.graph().grad(a);
                              for (std::size_t i = 0; i < ga.size(); ++i)
                                ga[i] += gy[i] * b.value()[i];
                            }
                            if (b.requires_grad()) {
                              Tensor<T>& gb = b.graph().grad(b);
                              for (std::size_t i = 0; i < gb.size(); ++i)
                                gb[i] += gy[i] * a.value()[i];
                            }
                          });
}

// ---------------------------------------------------------------------------
// Shape manipulation and reductions

template <class T>
Var<T> reshape(Var<T> x, Shape shape) {
  Tensor<T> y = x.value().reshaped(std::move(shape));
  return x.graph().record("reshape", std::move(y), {x},
                          [x](const Tensor<T>& gy, const Tensor<T>&) {
                            Tensor<T>& gx = x.graph().grad(x);
                            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i];
                          });
}

/// Mean over all axes after the first `keep` axes.
template <class T>
Var<T> mean_trailing(Var<T> x, std::size_t keep) {
  const Shape& s = x.shape();
  detail::require(keep >= 1 && keep < s.size(), "mean_trailing: bad keep rank");
  Shape out_shape(s.begin(), s.begin() + keep);
  const std::size_t outer = shape_size(out_shape);
  const std::size_t inner = x.value().size() / outer;
  detail::require(inner > 0, "mean_trailing: empty reduction");
  Tensor<T> y(out_shape);
  const T* xv = x.value().data();
  for (std::size_t o = 0; o < outer; ++o) {
    double acc = 0;
    for (std::size_t i = 0; i < inner; ++i) acc += xv[o * inner + i];
    y[o] = static_cast<T>(acc / inner);
  }
  return x.graph().record("mean", std::move(y), {x},
                          [x, outer, inner](const Tensor<T>& gy, const Tensor<T>&) {
                            Tensor<T>& gx = x.graph().grad(x);
                            const T inv = T(1) / T(inner);
                            for (std::size_t o = 0; o < outer; ++o)
                              for (std::size_t i = 0; i < inner; ++i)
                                gx[o * inner + i] += gy[o] * inv;
                          });
}

/// Repeats x (shape S) along a new trailing axis of length n: [S..., n].
template <class T>
Var<T> broadcast_trailing(Var<T> x, std::size_t n) {
  Shape s = x.shape();
  s.push_back(n);
  Tensor<T> y(s);
  const std::size_t outer = x.value().size();
  for (std::size_t o = 0; o < outer; ++o)
    std::fill(y.data() + o * n, y.data() + (o + 1) * n, x.value()[o]);
  return x.graph().record("broadcast", std::move(y), {x},
                          [x, outer, n](const Tensor<T>& gy, const Tensor<T>&) {
                            Tensor<T>& gx = x.graph().grad(x);
                            for (std::size_t o = 0; o < outer; ++o) {
                              T acc = 0;
                              for (std::size_t i = 0; i < n; ++i) acc += gy[o * n + i];
                              gx[o] += acc;
                            }
                          });
}

/// [B, C, T] -> [B, T, C]
template <class T>
Var<T> transpose_last2(Var<T> x) {
  detail::require_rank(x, 3, "transpose_last2");
  const std::size_t B = x.shape()[0], C = x.shape()[1], L = x.shape()[2];
  Tensor<T> y({B, L, C});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < L; ++t) y[(b * L + t) * C + c] = x.value()[(b * C + c) * L + t];
  return x.graph().record("transpose", std::move(y), {x},
                          [x, B, C, L](const Tensor<T>& gy, const Tensor<T>&) {
                            Tensor<T>& gx = x.graph().grad(x);
                            for (std::size_t b = 0; b < B; ++b)
                              for (std::size_t c = 0; c < C; ++c)
                                for (std::size_t t = 0; t < L; ++t)
                                  gx[(b * C + c) * L + t] += gy[(b * L + t) * C + c];
                          });
}

template <class T>
Var<T> sum_all(Var<T> x) {
  double acc = 0;
  for (T v : x.value().values()) acc += v;
  return x.graph().record("sum", Tensor<T>::scalar(static_cast<T>(acc)), {x},
                          [x](const Tensor<T>& gy, const Tensor<T>&) {
                            Tensor<T>& gx = x.graph().grad(x);
                            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[0];
                          });
}

template <class T>
Var<T> mean_all(Var<T> x) {
  detail::require(x.value().size() > 0, "mean_all: empty tensor");
  return scale(sum_all(x), T(1) / T(x.value().size()));
}

/// [n, c1] ++ [n, c2] -> [n, c1 + c2]
template <class T>
Var<T> concat_cols(Var<T> a, Var<T> b) {
  detail::require_rank(a, 2, "concat_cols");
  detail::require_rank(b, 2, "concat_cols");
  detail::require(a.shape()[0] == b.shape()[0], "concat_cols: row mismatch");
  const std::size_t n = a.shape()[0], ca = a.shape()[1], cb = b.shape()[1];
  Tensor<T> y({n, ca + cb});
  for (std::size_t r = 0; r < n; ++r) {
    std::copy_n(a.value().data() + r * ca, ca, y.data() + r * (ca + cb));
    std::copy_n(b.value().data() + r * cb, cb, y.data() + r * (ca + cb) + ca);
  }
  return a.graph().record("concat", std::move(y), {a, b},
                          [a, b, n, ca, cb](const Tensor<T>& gy, const Tensor<T>&) {
                            if (a.requires_grad()) {
                              Tensor<T>& ga = a.graph().grad(a);
                              for (std::size_t r = 0; r < n; ++r)
                                for (std::size_t c = 0; c < ca; ++c)
                                  ga[r * ca + c] += gy[r * (ca + cb) + c];
                            }
                            if (b.requires_grad()) {
                              Tensor<T>& gb = b.graph().grad(b);
                              for (std::size_t r = 0; r < n; ++r)
                                for (std::size_t c = 0; c < cb; ++c)
                                  gb[r * cb + c] += gy[r * (ca + cb) + ca + c];
                            }
                          });
}

/// Selects rows of a [n, d] matrix.
template <class T>
Var<T> gather_rows(Var<T> x, std::vector<std::size_t> rows) {
  detail::require_rank(x, 2, "gather_rows");
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  Tensor<T> y({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail::require(rows[i] < n, "gather_rows: index out of range");
    std::copy_n(x.value().data() + rows[i] * d, d, y.data() + i * d);
  }
  return x.graph().record("gather_rows", std::move(y), {x},
                          [x, rows = std::move(rows), d](const Tensor<T>& gy, const Tensor<T>&) {
                            Tensor<T>& gx = x.graph().grad(x);
                            for (std::size_t i = 0; i < rows.size(); ++i)
                              for (std::size_t c = 0; c < d; ++c) gx[rows[i] * d + c] += gy[i * d + c];
                          });
}

/// Row k of the output is the mean of the rows of x listed in groups[k].
template <class T>
Var<T> group_mean_rows(Var<T> x, std::vector<std::vector<std::size_t>> groups) {
  detail::require_rank(x, 2, "group_mean_rows");
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  Tensor<T> y({groups.size(), d});
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (groups[k].empty())
      throw ConfigError("group_mean_rows: group " + std::to_string(k) + " is empty");
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0;
      for (std::size_t r : groups[k]) {
        detail::require(r < n, "group_mean_rows: index out of range");
        acc += x.value()[r * d + c];
      }
      y[k * d + c] = static_cast<T>(acc / groups[k].size());
    }
  }
  return x.graph().record(
      "group_mean", std::move(y), {x},
      [x, groups = std::move(groups), d](const Tensor<T>& gy, const Tensor<T>&) {
        Tensor<T>& gx = x.graph().grad(x);
        for (std::size_t k = 0; k < groups.size(); ++k) {
          const T inv = T(1) / T(groups[k].size());
          for (std::size_t r : groups[k])
            for (std::size_t c = 0; c < d; ++c) gx[r * d + c] += gy[k * d + c] * inv;
        }
      });
}

// ---------------------------------------------------------------------------
// Dense layers and distances

/// [B, D] x [D, M] + [M] -> [B, M]
template <class T>
Var<T> affine(Var<T> x, Var<T> w, Var<T> bias) {
  detail::require_rank(x, 2, "affine");
  detail::require_rank(w, 2, "affine");
  const std::size_t B = x.shape()[0], D = x.shape()[1], M = w.shape()[1];
  if (w.shape()[0] != D || bias.value().size() != M)
    throw ConfigError("affine: input " + shape_string(x.shape()) + " weight " +
                      shape_string(w.shape()) + " bias " + shape_string(bias.shape()));
  Tensor<T> y({B, M});
  const T* xv = x.value().data();
  const T* wv = w.value().data();
  for (std::size_t b = 0; b < B; ++b) {
    T* yr = y.data() + b * M;
    for (std::size_t m = 0; m < M; ++m) yr[m] = bias.value()[m];
    for (std::size_t d = 0; d < D; ++d) {
      const T xd = xv[b * D + d];
      for (std::size_t m = 0; m < M; ++m) yr[m] += xd * wv[d * M + m];
    }
  }
  return x.graph().record(
      "affine", std::move(y), {x, w, bias},
      [x, w, bias, B, D, M](const Tensor<T>& gy, const Tensor<T>&) {
        if (x.requires_grad()) {
          Tensor<T>& gx = x.graph().grad(x);
          const T* wv = w.value().data();
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t d = 0; d < D; ++d) {
              T acc = 0;
              for (std::size_t m = 0; m < M; ++m) acc += gy[b * M + m] * wv[d * M + m];
              gx[b * D + d] += acc;
            }
        }
        if (w.requires_grad()) {
          Tensor<T>& gw = w.graph().grad(w);
          const T* xv = x.value().data();
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t d = 0; d < D; ++d) {
              const T xd = xv[b * D + d];
              for (std::size_t m = 0; m < M; ++m) gw[d * M + m] += xd * gy[b * M + m];
            }
        }
        if (bias.requires_grad()) {
          Tensor<T>& gb = bias.graph().grad(bias);
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t m = 0; m < M; ++m) gb[m] += gy[b * M + m];
        }
      });
}

/// a [n, d] times b [k, d] transposed -> [n, k]
template <class T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  detail::require_rank(a, 2, "matmul_nt");
  detail::require_rank(b, 2, "matmul_nt");
  const std::size_t n = a.shape()[0], d = a.shape()[1], k = b.shape()[0];
  detail::require(b.shape()[1] == d, "matmul_nt: inner dimension mismatch");
  Tensor<T> y({n, k});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      T acc = 0;
      for (std::size_t c = 0; c < d; ++c) acc += a.value()[i * d + c] * b.value()[j * d + c];
      y[i * k + j] = acc;
    }
  return a.graph().record("matmul_nt", std::move(y), {a, b},
                          [a, b, n, d, k](const Tensor<T>& gy, const Tensor<T>&) {
                            if (a.requires_grad()) {
                              Tensor<T>& ga = a.graph().grad(a);
                              for (std::size_t i = 0; i < n; ++i)
                                for (std::size_t j = 0; j < k; ++j)
                                  for (std::size_t c = 0; c < d; ++c)
                                    ga[i * d + c] += gy[i * k + j] * b.value()[j * d + c];
                            }
                            if (b.requires_grad()) {
                              Tensor<T>& gb = b.graph().grad(b);
                              for (std::size_t i = 0; i < n; ++i)
                                for (std::size_t j = 0; j < k; ++j)
                                  for (std::size_t c = 0; c < d; ++c)
                                    gb[j * d + c] += gy[i * k + j] * a.value()[i * d + c];
                            }
                          });
}

/// Squared Euclidean distances between rows: [n, d], [k, d] -> [n, k].
template <class T>
Var<T> sq_dist(Var<T> a, Var<T> b) {
  detail::require_rank(a, 2, "sq_dist");
  detail::require_rank(b, 2, "sq_dist");
  const std::size_t n = a.shape()[0], d = a.shape()[1], k = b.shape()[0];
  if (b.shape()[1] != d)
    throw ConfigError("sq_dist: dimension mismatch " + shape_string(a.shape()) + " vs " +
                      shape_string(b.shape()));
  Tensor<T> y({n, k});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      T acc = 0;
      for (std::size_t c = 0; c < d; ++c) {
        const T diff = a.value()[i * d + c] - b.value()[j * d + c];
        acc += diff * diff;
      }
      y[i * k + j] = acc;
    }
  return a.graph().record("sq_dist", std::move(y), {a, b},
                          [a, b, n, d, k](const Tensor<T>& gy, const Tensor<T>&) {
                            Tensor<T>* ga = a.requires_grad() ? &a.graph().grad(a) : nullptr;
                            Tensor<T>* gb = b.requires_grad() ? &b.graph().grad(b) : nullptr;
                            for (std::size_t i = 0; i < n; ++i)
                              for (std::size_t j = 0; j < k; ++j) {
                                const T s = T(2) * gy[i * k + j];
                                for (std::size_t c = 0; c < d; ++c) {
                                  const T diff = a.value()[i * d + c] - b.value()[j * d + c];
                                  if (ga) (*ga)[i * d + c] += s * diff;
                                  if (gb) (*gb)[j * d + c] -= s * diff;
                                }
                              }
                          });
}

/// Scales every row to unit Euclidean norm. A zero row is an error.
template <class T>
Var<T> l2_normalize_rows(Var<T> x) {
  detail::require_rank(x, 2, "l2_normalize_rows");
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  Tensor<T> y(x.shape());
  std::vector<T> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    T acc = 0;
    for (std::size_t c = 0; c < d; ++c) acc += x.value()[i * d + c] * x.value()[i * d + c];
    norms[i] = std::sqrt(acc);
    if (!(norms[i] > T(0)))
      throw ConfigError("l2_normalize_rows: row " + std::to_string(i) + " has zero norm");
    for (std::size_t c = 0; c < d; ++c) y[i * d + c] = x.value()[i * d + c] / norms[i];
  }
  return x.graph().record("l2_normalize", std::move(y), {x},
                          [x, norms, n, d](const Tensor<T>& gy, const Tensor<T>& y) {
                            Tensor<T>& gx = x.graph().grad(x);
                            for (std::size_t i = 0; i < n; ++i) {
                              T dot = 0;
                              for (std::size_t c = 0; c < d; ++c) dot += gy[i * d + c] * y[i * d + c];
                              for (std::size_t c = 0; c < d; ++c)
                                gx[i * d + c] += (gy[i * d + c] - dot * y[i * d + c]) / norms[i];
                            }
                          });
}

// ---------------------------------------------------------------------------
// Softmax family (rows of a [n, k] matrix, max-subtracted)

template <class T>
Var<T> softmax_rows(Var<T> x) {
  detail::require_rank(x, 2, "softmax_rows");
  const std::size_t n = x.shape()[0], k = x.shape()[1];
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const T* r = x.value().data() + i * k;
    const T mx = *std::max_element(r, r + k);
    T z = 0;
    for (std::size_t j = 0; j < k; ++j) z += (y[i * k + j] = std::exp(r[j] - mx));
    for (std::size_t j = 0; j < k; ++j) y[i * k + j] /= z;
  }
  return x.graph().record("softmax", std::move(y), {x},
                          [x, n, k](const Tensor<T>& gy, const Tensor<T>& y) {
                            Tensor<T>& gx = x.graph().grad(x);
                            for (std::size_t i = 0; i < n; ++i) {
                              T dot = 0;
                              for (std::size_t j = 0; j < k; ++j) dot += gy[i * k + j] * y[i * k + j];
                              for (std::size_t j = 0; j < k; ++j)
                                gx[i * k + j] += y[i * k + j] * (gy[i * k + j] - dot);
                            }
                          });
}

template <class T>
Var<T> log_softmax_rows(Var<T> x) {
  detail::require_rank(x, 2, "log_softmax_rows");
  const std::size_t n = x.shape()[0], k = x.shape()[1];
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const T* r = x.value().data() + i * k;
    const T mx = *std::max_element(r, r + k);
    T z = 0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(r[j] - mx);
    const T lse = mx + std::log(z);
    for (std::size_t j = 0; j < k; ++j) y[i * k + j] = r[j] - lse;
  }
  return x.graph().record("log_softmax", std::move(y), {x},
                          [x, n, k](const Tensor<T>& gy, const Tensor<T>& y) {
                            Tensor<T>& gx = x.graph().grad(x);
                            for (std::size_t i = 0; i < n; ++i) {
                              T s = 0;
                              for (std::size_t j = 0; j < k; ++j) s += gy[i * k + j];
                              for (std::size_t j = 0; j < k; ++j)
                                gx[i * k + j] += gy[i * k + j] - std::exp(y[i * k + j]) * s;
                            }
                          });
}

/// Sum over rows of x[i, labels[i]].
template <class T>
Var<T> pick_sum(Var<T> x, std::vector<std::size_t> labels) {
  detail::require_rank(x, 2, "pick_sum");
  const std::size_t n = x.shape()[0], k = x.shape()[1];
  detail::require(labels.size() == n, "pick_sum: label count mismatch");
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    detail::require(labels[i] < k, "pick_sum: label out of range");
    acc += x.value()[i * k + labels[i]];
  }
  return x.graph().record("pick_sum", Tensor<T>::scalar(acc), {x},
                          [x, labels = std::move(labels), k](const Tensor<T>& gy, const Tensor<T>&) {
                            Tensor<T>& gx = x.graph().grad(x);
                            for (std::size_t i = 0; i < labels.size(); ++i)
                              gx[i * k + labels[i]] += gy[0];
                          });
}

// ---------------------------------------------------------------------------
// Convolutional pieces

/// Cross-correlation of x [B, C, H, W] with w [C', C, kH, kW].
template <class T>
Var<T> conv2d(Var<T> x, Var<T> w, std::size_t stride = 1, std::size_t pad = 0) {
  detail::require_rank(x, 4, "conv2d");
  detail::require_rank(w, 4, "conv2d");
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  kernels::ConvGeometry geo;
  geo.batch = xs[0];
  geo.in_c = xs[1];
  geo.in_h = xs[2];
  geo.in_w = xs[3];
  geo.out_c = ws[0];
  geo.k_h = ws[2];
  geo.k_w = ws[3];
  geo.stride = stride;
  geo.pad = pad;
  if (ws[1] != geo.in_c)
    throw ConfigError("conv2d: kernel " + shape_string(ws) + " does not match input " +
                      shape_string(xs));
  if (stride == 0) throw ConfigError("conv2d: stride must be positive");
  if (geo.k_h > geo.in_h + 2 * pad || geo.k_w > geo.in_w + 2 * pad)
    throw ConfigError("conv2d: kernel " + shape_string(ws) + " larger than padded input " +
                      shape_string(xs));
  if (pad >= geo.k_h || pad >= geo.k_w)
    throw ConfigError("conv2d: padding must be smaller than the kernel");
  geo.out_h = (geo.in_h + 2 * pad - geo.k_h) / stride + 1;
  geo.out_w = (geo.in_w + 2 * pad - geo.k_w) / stride + 1;

  auto padded = std::make_shared<kernels::PaddedPlanes<T>>(
      kernels::pad_input(x.value().data(), geo));
  Tensor<T> y({geo.batch, geo.out_c, geo.out_h, geo.out_w});
  kernels::conv_forward(*padded, w.value().data(), y.data(), geo);
  return x.graph().record("conv2d", std::move(y), {x, w},
                          [x, w, geo, padded](const Tensor<T>& gy, const Tensor<T>&) {
                            if (w.requires_grad())
                              kernels::conv_weight_grad(*padded, gy.data(),
                                                        w.graph().grad(w).data(), geo);
                            if (x.requires_grad())
                              kernels::conv_input_grad(gy.data(), w.value().data(),
                                                       x.graph().grad(x).data(), geo);
                          });
}

struct BatchNormOptions {
  double eps = 1e-5;
  double momentum = 0.1;
};

/// Per-channel normalization of [B, C, ...]. Train mode uses batch
/// statistics and updates the running buffers; eval mode uses the buffers.
template <class T>
Var<T> batchnorm(Var<T> x, Var<T> gamma, Var<T> beta, Parameter<T>& running_mean,
                 Parameter<T>& running_var, bool train, BatchNormOptions opt = {}) {
  const Shape& s = x.shape();
  detail::require(s.size() >= 2, "batchnorm expects [B, C, ...]");
  const std::size_t B = s[0], C = s[1];
  if (B == 0) throw ConfigError("batchnorm: empty batch");
  const std::size_t inner = x.value().size() / (B * C);
  if (gamma.value().size() != C || beta.value().size() != C ||
      running_mean.value.size() != C || running_var.value.size() != C)
    throw ConfigError("batchnorm: parameter channel count does not match input " +
                      shape_string(s));
  const std::size_t count = B * inner;
  const T* xv = x.value().data();

  std::vector<T> mean(C), inv_std(C);
  if (train) {
    for (std::size_t c = 0; c < C; ++c) {
      double sum = 0, sq = 0;
      for (std::size_t b = 0; b < B; ++b) {
        const T* p = xv + (b * C + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) sum += p[i];
      }
      const double mu = sum / count;
      for (std::size_t b = 0; b < B; ++b) {
        const T* p = xv + (b * C + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) sq += (p[i] - mu) * (p[i] - mu);
      }
      const double var = sq / count;
      mean[c] = static_cast<T>(mu);
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + opt.eps));
      const double unbiased = count > 1 ? sq / (count - 1) : var;
      running_mean.value[c] = static_cast<T>((1 - opt.momentum) * running_mean.value[c] + opt.momentum * mu);
      running_var.value[c] = static_cast<T>((1 - opt.momentum) * running_var.value[c] + opt.momentum * unbiased);
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = running_mean.value[c];
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(double(running_var.value[c]) + opt.eps));
    }
  }

  auto xhat = std::make_shared<Tensor<T>>(s);
  Tensor<T> y(s);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t off = (b * C + c) * inner;
      const T g = gamma.value()[c], bt = beta.value()[c];
      for (std::size_t i = 0; i < inner; ++i) {
        const T h = (xv[off + i] - mean[c]) * inv_std[c];
        (*xhat)[off + i] = h;
        y[off + i] = g * h + bt;
      }
    }

  return x.graph().record(
      "batchnorm", std::move(y), {x, gamma, beta},
      [x, gamma, beta, xhat, inv_std, B, C, inner, count, train](const Tensor<T>& gy,
                                                                const Tensor<T>&) {
        std::vector<double> sum_g(C, 0.0), sum_gh(C, 0.0);
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t c = 0; c < C; ++c) {
            const std::size_t off = (b * C + c) * inner;
            for (std::size_t i = 0; i < inner; ++i) {
              sum_g[c] += gy[off + i];
              sum_gh[c] += gy[off + i] * (*xhat)[off + i];
            }
          }
        if (gamma.requires_grad()) {
          Tensor<T>& gg = gamma.graph().grad(gamma);
          for (std::size_t c = 0; c < C; ++c) gg[c] += static_cast<T>(sum_gh[c]);
        }
        if (beta.requires_grad()) {
          Tensor<T>& gb = beta.graph().grad(beta);
          for (std::size_t c = 0; c < C; ++c) gb[c] += static_cast<T>(sum_g[c]);
        }
        if (!x.requires_grad()) return;
        Tensor<T>& gx = x.graph().grad(x);
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t c = 0; c < C; ++c) {
            const std::size_t off = (b * C + c) * inner;
            const T g = gamma.value()[c];
            if (train) {
              const T mg = static_cast<T>(sum_g[c] / count);
              const T mgh = static_cast<T>(sum_gh[c] / count);
              for (std::size_t i = 0; i < inner; ++i)
                gx[off + i] += g * inv_std[c] * (gy[off + i] - mg - (*xhat)[off + i] * mgh);
            } else {
              for (std::size_t i = 0; i < inner; ++i) gx[off + i] += g * inv_std[c] * gy[off + i];
            }
          }
      });
}

/// x [B, C, ...] scaled per (batch, channel) by s [B, C].
template <class T>
Var<T> channel_scale(Var<T> x, Var<T> s) {
  const Shape& xs = x.shape();
  detail::require(xs.size() >= 2 && s.shape() == Shape({xs[0], xs[1]}),
                  "channel_scale: scale must be [B, C] for input " + shape_string(xs));
  const std::size_t bc = xs[0] * xs[1], inner = x.value().size() / bc;
  Tensor<T> y(xs);
  for (std::size_t o = 0; o < bc; ++o)
    for (std::size_t i = 0; i < inner; ++i)
      y[o * inner + i] = x.value()[o * inner + i] * s.value()[o];
  return x.graph().record("channel_scale", std::move(y), {x, s},
                          [x, s, bc, inner](const Tensor<T>& gy, const Tensor<T>&) {
                            if (x.requires_grad()) {
                              Tensor<T>& gx = x.graph().grad(x);
                              for (std::size_t o = 0; o < bc; ++o)
                                for (std::size_t i = 0; i < inner; ++i)
                                  gx[o * inner + i] += gy[o * inner + i] * s.value()[o];
                            }
                            if (s.requires_grad()) {
                              Tensor<T>& gs = s.graph().grad(s);
                              for (std::size_t o = 0; o < bc; ++o) {
                                T acc = 0;
                                for (std::size_t i = 0; i < inner; ++i)
                                  acc += gy[o * inner + i] * x.value()[o * inner + i];
                                gs[o] += acc;
                              }
                            }
                          });
}

/// out[b, c] = sum_t x[b, c, t] * a[b, t]
template <class T>
Var<T> weighted_sum_last(Var<T> x, Var<T> a) {
  detail::require_rank(x, 3, "weighted_sum_last");
  const std::size_t B = x.shape()[0], C = x.shape()[1], L = x.shape()[2];
  detail::require(a.shape() == Shape({B, L}), "weighted_sum_last: weights must be [B, T]");
  Tensor<T> y({B, C});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      T acc = 0;
      for (std::size_t t = 0; t < L; ++t) acc += x.value()[(b * C + c) * L + t] * a.value()[b * L + t];
      y[b * C + c] = acc;
    }
  return x.graph().record("weighted_sum", std::move(y), {x, a},
                          [x, a, B, C, L](const Tensor<T>& gy, const Tensor<T>&) {
                            if (x.requires_grad()) {
                              Tensor<T>& gx = x.graph().grad(x);
                              for (std::size_t b = 0; b < B; ++b)
                                for (std::size_t c = 0; c < C; ++c)
                                  for (std::size_t t = 0; t < L; ++t)
                                    gx[(b * C + c) * L + t] += gy[b * C + c] * a.value()[b * L + t];
                            }
                            if (a.requires_grad()) {
                              Tensor<T>& ga = a.graph().grad(a);
                              for (std::size_t b = 0; b < B; ++b)
                                for (std::size_t c = 0; c < C; ++c)
                                  for (std::size_t t = 0; t < L; ++t)
                                    ga[b * L + t] += gy[b * C + c] * x.value()[(b * C + c) * L + t];
                            }
                          });
}

}  // namespace protospoof::ops
