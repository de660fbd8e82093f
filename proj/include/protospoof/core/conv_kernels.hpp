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

// Direct convolution kernels for NCHW tensors. Rows are processed in
// fixed-width chunks so the inner loops vectorize; callers hand in zero-padded
// input planes whose row stride covers the last chunk.

#include <algorithm>
#include <cstring>
#include <cstddef>
#include <vector>

namespace protospoof::kernels {

struct ConvGeometry {
  std::size_t batch = 0, in_c = 0, in_h = 0, in_w = 0;
  std::size_t out_c = 0, k_h = 0, k_w = 0, stride = 1, pad = 0;
  std::size_t out_h = 0, out_w = 0;
};

template <class T>
constexpr std::size_t kChunk = 64 / sizeof(T);

// One 64-byte SIMD register worth of T (GCC/Clang vector extension).
template <class T>
struct LaneOf;
template <>
struct LaneOf<float> {
  typedef float type __attribute__((vector_size(64)));
};
template <>
struct LaneOf<double> {
  typedef double type __attribute__((vector_size(64)));
};
template <class T>
using Lane = typename LaneOf<T>::type;

// Shuffle mask selecting the even elements of two concatenated lanes.
template <class T>
struct MaskOf;
template <>
struct MaskOf<float> {
  typedef int type __attribute__((vector_size(64)));
  static type even() { return type{0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30}; }
};
template <>
struct MaskOf<double> {
  typedef long long type __attribute__((vector_size(64)));
  static type even() { return type{0, 2, 4, 6, 8, 10, 12, 14}; }
};

template <class T>
inline Lane<T> load_lane(const T* p) {
  Lane<T> v;
  std::memcpy(&v, p, sizeof(v));
  return v;
}

template <class T, std::size_t S>
inline Lane<T> load_strided(const T* p) {
  if constexpr (S == 1) {
    return load_lane(p);
  } else if constexpr (S == 2) {
    return __builtin_shuffle(load_lane(p), load_lane(p + kChunk<T>), MaskOf<T>::even());
  } else {
    Lane<T> v;
    for (std::size_t i = 0; i < kChunk<T>; ++i) v[i] = p[i * S];
    return v;
  }
}

inline std::size_t round_up(std::size_t v, std::size_t m) { return (v + m - 1) / m * m; }

/// Zero-padded copy of a [B, C, H, W] tensor with `pad` on every side and a
/// row stride wide enough for chunked reads.
template <class T>
struct PaddedPlanes {
  std::size_t rows = 0, row_stride = 0, channels = 0, batch = 0;
  std::vector<T> data;

  const T* plane(std::size_t b, std::size_t c) const {
    return data.data() + (b * channels + c) * rows * row_stride;
  }
};

template <class T>
PaddedPlanes<T> pad_input(const T* in, const ConvGeometry& g) {
  PaddedPlanes<T> p;
  p.batch = g.batch;
  p.channels = g.in_c;
  p.rows = g.in_h + 2 * g.pad;
  std::size_t needed = round_up(g.out_w, kChunk<T>) * g.stride + g.k_w;
  p.row_stride = std::max(needed, g.in_w + 2 * g.pad);
  p.data.assign(g.batch * g.in_c * p.rows * p.row_stride, T(0));
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t c = 0; c < g.in_c; ++c) {
      const T* src = in + (b * g.in_c + c) * g.in_h * g.in_w;
      T* dst = p.data.data() + (b * g.in_c + c) * p.rows * p.row_stride;
      for (std::size_t y = 0; y < g.in_h; ++y)
        std::copy(src + y * g.in_w, src + (y + 1) * g.in_w,
                  dst + (y + g.pad) * p.row_stride + g.pad);
    }
  return p;
}

namespace detail {

template <class T, std::size_t KH, std::size_t KW, std::size_t S, std::size_t CB>
void forward_block(const PaddedPlanes<T>& in, const T* w, T* out,
                   const ConvGeometry& g, std::size_t b, std::size_t co0) {
  constexpr std::size_t V = kChunk<T>;
  constexpr std::size_t KK = KH * KW;
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t x0 = 0; x0 < g.out_w; x0 += V) {
      Lane<T> acc[CB] = {};
      for (std::size_t ci = 0; ci < g.in_c; ++ci) {
        const T* plane = in.plane(b, ci);
        for (std::size_t ky = 0; ky < KH; ++ky) {
          const T* row = plane + (oy * S + ky) * in.row_stride + x0 * S;
          for (std::size_t kx = 0; kx < KW; ++kx) {
            const Lane<T> x = load_strided<T, S>(row + kx);
            for (std::size_t c = 0; c < CB; ++c)
              acc[c] += w[((co0 + c) * g.in_c + ci) * KK + ky * KW + kx] * x;
          }
        }
      }
      const std::size_t n = std::min(V, g.out_w - x0);
      for (std::size_t c = 0; c < CB; ++c) {
        T* orow = out + (((b * g.out_c + co0 + c) * g.out_h) + oy) * g.out_w + x0;
        for (std::size_t i = 0; i < n; ++i) orow[i] = acc[c][i];
      }
    }
  }
}

template <class T, std::size_t KH, std::size_t KW, std::size_t S>
void forward_fixed(const PaddedPlanes<T>& in, const T* w, T* out, const ConvGeometry& g) {
  for (std::size_t b = 0; b < g.batch; ++b) {
    std::size_t co = 0;
    for (; co + 4 <= g.out_c; co += 4) forward_block<T, KH, KW, S, 4>(in, w, out, g, b, co);
    for (; co < g.out_c; ++co) forward_block<T, KH, KW, S, 1>(in, w, out, g, b, co);
  }
}

template <class T>
void forward_generic(const PaddedPlanes<T>& in, const T* w, T* out, const ConvGeometry& g) {
  const std::size_t kk = g.k_h * g.k_w;
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t co = 0; co < g.out_c; ++co)
      for (std::size_t oy = 0; oy < g.out_h; ++oy)
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          T acc = 0;
          for (std::size_t ci = 0; ci < g.in_c; ++ci) {
            const T* plane = in.plane(b, ci);
            for (std::size_t ky = 0; ky < g.k_h; ++ky)
              for (std::size_t kx = 0; kx < g.k_w; ++kx)
                acc += w[(co * g.in_c + ci) * kk + ky * g.k_w + kx] *
                       plane[(oy * g.stride + ky) * in.row_stride + ox * g.stride + kx];
          }
          out[((b * g.out_c + co) * g.out_h + oy) * g.out_w + ox] = acc;
        }
}

template <class T, std::size_t KH, std::size_t KW, std::size_t S>
void weight_grad_fixed(const PaddedPlanes<T>& in, const std::vector<T>& gpad,
                       std::size_t gstride, T* gw, const ConvGeometry& g) {
  constexpr std::size_t V = kChunk<T>;
  constexpr std::size_t KK = KH * KW;
  for (std::size_t co = 0; co < g.out_c; ++co)
    for (std::size_t ci = 0; ci < g.in_c; ++ci) {
      Lane<T> acc[KK] = {};
      for (std::size_t b = 0; b < g.batch; ++b) {
        const T* plane = in.plane(b, ci);
        const T* gplane = gpad.data() + (b * g.out_c + co) * g.out_h * gstride;
        for (std::size_t oy = 0; oy < g.out_h; ++oy)
          for (std::size_t x0 = 0; x0 < g.out_w; x0 += V) {
            const Lane<T> gv = load_lane(gplane + oy * gstride + x0);
            for (std::size_t ky = 0; ky < KH; ++ky) {
              const T* row = plane + (oy * S + ky) * in.row_stride + x0 * S;
              for (std::size_t kx = 0; kx < KW; ++kx)
                acc[ky * KW + kx] += gv * load_strided<T, S>(row + kx);
            }
          }
      }
      for (std::size_t k = 0; k < KK; ++k) {
        T total = 0;
        for (std::size_t v = 0; v < V; ++v) total += acc[k][v];
        gw[(co * g.in_c + ci) * KK + k] += total;
      }
    }
}

template <class T>
void weight_grad_generic(const PaddedPlanes<T>& in, const std::vector<T>& gpad,
                         std::size_t gstride, T* gw, const ConvGeometry& g) {
  const std::size_t kk = g.k_h * g.k_w;
  for (std::size_t co = 0; co < g.out_c; ++co)
    for (std::size_t ci = 0; ci < g.in_c; ++ci)
      for (std::size_t ky = 0; ky < g.k_h; ++ky)
        for (std::size_t kx = 0; kx < g.k_w; ++kx) {
          T acc = 0;
          for (std::size_t b = 0; b < g.batch; ++b) {
            const T* plane = in.plane(b, ci);
            const T* gplane = gpad.data() + (b * g.out_c + co) * g.out_h * gstride;
            for (std::size_t oy = 0; oy < g.out_h; ++oy)
              for (std::size_t ox = 0; ox < g.out_w; ++ox)
                acc += gplane[oy * gstride + ox] *
                       plane[(oy * g.stride + ky) * in.row_stride + ox * g.stride + kx];
          }
          gw[(co * g.in_c + ci) * kk + ky * g.k_w + kx] += acc;
        }
}

}  // namespace detail

/// out[B, Cout, OH, OW] = cross-correlation of the padded input with w.
template <class T>
void conv_forward(const PaddedPlanes<T>& in, const T* w, T* out, const ConvGeometry& g) {
  using namespace detail;
  if (g.k_h == 3 && g.k_w == 3 && g.stride == 1) return forward_fixed<T, 3, 3, 1>(in, w, out, g);
  if (g.k_h == 3 && g.k_w == 3 && g.stride == 2) return forward_fixed<T, 3, 3, 2>(in, w, out, g);
  if (g.k_h == 1 && g.k_w == 1 && g.stride == 1) return forward_fixed<T, 1, 1, 1>(in, w, out, g);
  if (g.k_h == 1 && g.k_w == 1 && g.stride == 2) return forward_fixed<T, 1, 1, 2>(in, w, out, g);
  forward_generic(in, w, out, g);
}

/// gw += dL/dw given the padded forward input and the output gradient.
template <class T>
void conv_weight_grad(const PaddedPlanes<T>& in, const T* gout, T* gw, const ConvGeometry& g) {
  using namespace detail;
  const std::size_t gstride = round_up(g.out_w, kChunk<T>);
  std::vector<T> gpad(g.batch * g.out_c * g.out_h * gstride, T(0));
  for (std::size_t r = 0; r < g.batch * g.out_c * g.out_h; ++r)
    std::copy(gout + r * g.out_w, gout + (r + 1) * g.out_w, gpad.data() + r * gstride);
  if (g.k_h == 3 && g.k_w == 3 && g.stride == 1)
    return weight_grad_fixed<T, 3, 3, 1>(in, gpad, gstride, gw, g);
  if (g.k_h == 3 && g.k_w == 3 && g.stride == 2)
    return weight_grad_fixed<T, 3, 3, 2>(in, gpad, gstride, gw, g);
  if (g.k_h == 1 && g.k_w == 1 && g.stride == 1)
    return weight_grad_fixed<T, 1, 1, 1>(in, gpad, gstride, gw, g);
  if (g.k_h == 1 && g.k_w == 1 && g.stride == 2)
    return weight_grad_fixed<T, 1, 1, 2>(in, gpad, gstride, gw, g);
  weight_grad_generic(in, gpad, gstride, gw, g);
}

/// gin += dL/dinput. Runs as a stride-1 correlation of the dilated, padded
/// output gradient with the spatially flipped, channel-transposed kernel.
template <class T>
void conv_input_grad(const T* gout, const T* w, T* gin, const ConvGeometry& g) {
  const std::size_t q_h = g.k_h - 1 - g.pad, q_w = g.k_w - 1 - g.pad;
  ConvGeometry t;
  t.batch = g.batch;
  t.in_c = g.out_c;
  t.out_c = g.in_c;
  t.k_h = g.k_h;
  t.k_w = g.k_w;
  t.stride = 1;
  t.pad = 0;
  t.out_h = g.in_h;
  t.out_w = g.in_w;
  t.in_h = g.in_h + g.k_h - 1;
  t.in_w = g.in_w + g.k_w - 1;

  PaddedPlanes<T> d;
  d.batch = g.batch;
  d.channels = g.out_c;
  d.rows = t.in_h;
  d.row_stride = std::max(t.in_w, round_up(t.out_w, kChunk<T>) - 1 + t.k_w);
  d.data.assign(g.batch * g.out_c * d.rows * d.row_stride, T(0));
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t c = 0; c < g.out_c; ++c) {
      const T* src = gout + (b * g.out_c + c) * g.out_h * g.out_w;
      T* dst = d.data.data() + (b * g.out_c + c) * d.rows * d.row_stride;
      for (std::size_t oy = 0; oy < g.out_h; ++oy)
        for (std::size_t ox = 0; ox < g.out_w; ++ox)
          dst[(q_h + oy * g.stride) * d.row_stride + q_w + ox * g.stride] =
              src[oy * g.out_w + ox];
    }

  const std::size_t kk = g.k_h * g.k_w;
  std::vector<T> wt(g.out_c * g.in_c * kk);
  for (std::size_t co = 0; co < g.out_c; ++co)
    for (std::size_t ci = 0; ci < g.in_c; ++ci)
      for (std::size_t k = 0; k < kk; ++k)
        wt[(ci * g.out_c + co) * kk + (kk - 1 - k)] = w[(co * g.in_c + ci) * kk + k];

  std::vector<T> tmp(g.batch * g.in_c * g.in_h * g.in_w);
  conv_forward(d, wt.data(), tmp.data(), t);
  for (std::size_t i = 0; i < tmp.size(); ++i) gin[i] += tmp[i];
}

}  // namespace protospoof::kernels
