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
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "protospoof/core/error.hpp"
#include "protospoof/core/random.hpp"
#include "protospoof/dsp/fft.hpp"
#include "protospoof/dsp/wav.hpp"

namespace protospoof::dsp {

enum class FeatureKind { lfcc, lfbe };

NLOHMANN_JSON_SERIALIZE_ENUM(FeatureKind, {{FeatureKind::lfcc, "lfcc"},
                                           {FeatureKind::lfbe, "lfbe"}})

struct FrontendConfig {
  FeatureKind kind = FeatureKind::lfcc;
  int sample_rate = 16000;
  double frame_ms = 20;
  double hop_ms = 10;
  int fft_size = 512;
  int n_filters = 20;
  int n_ceps = 20;
  double max_freq_hz = 8000;
  int delta_window = 2;
  int delta_order = 2;  // 0: static only, 1: +delta, 2: +delta+delta2
  double log_floor = 1e-10;
  int fixed_frames = 750;
  bool pad_short = true;  // zero-pad signals shorter than one frame

  std::size_t frame_length() const {
    return std::size_t(std::llround(frame_ms * sample_rate / 1000.0));
  }
  std::size_t hop_length() const {
    return std::size_t(std::llround(hop_ms * sample_rate / 1000.0));
  }
  std::size_t static_dims() const {
    return std::size_t(kind == FeatureKind::lfcc ? n_ceps : n_filters);
  }
  std::size_t dims() const { return static_dims() * std::size_t(1 + delta_order); }

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("frontend: " + m); };
    if (sample_rate <= 0) fail("sample_rate must be positive");
    if (frame_length() == 0 || hop_length() == 0) fail("frame and hop must be at least one sample");
    if (frame_length() > std::size_t(fft_size)) fail("frame length exceeds fft_size");
    if (n_filters < 1) fail("n_filters must be >= 1");
    if (kind == FeatureKind::lfcc && (n_ceps < 1 || n_ceps > n_filters))
      fail("n_ceps must be in [1, n_filters]");
    if (!(max_freq_hz > 0) || max_freq_hz > sample_rate / 2.0)
      fail("max_freq_hz must be in (0, sample_rate/2]");
    if (delta_window < 1) fail("delta_window must be >= 1");
    if (delta_order < 0 || delta_order > 2) fail("delta_order must be 0, 1 or 2");
    if (!(log_floor > 0)) fail("log_floor must be positive");
    if (fixed_frames < 1) fail("fixed_frames must be >= 1");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FrontendConfig, kind, sample_rate, frame_ms,
                                                hop_ms, fft_size, n_filters, n_ceps,
                                                max_freq_hz, delta_window, delta_order,
                                                log_floor, fixed_frames, pad_short)

/// Stable identifier of everything that changes feature values.
inline std::uint64_t config_hash(const FrontendConfig& cfg) {
  return fnv1a(nlohmann::json(cfg).dump());
}

/// Row-major T x D matrix of frame features.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  FeatureKind kind = FeatureKind::lfcc;
  std::uint64_t hash = 0;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  double* row(std::size_t r) { return data.data() + r * cols; }
  bool empty() const { return rows == 0 || cols == 0; }
};

inline std::size_t frame_count(std::size_t n, std::size_t frame, std::size_t hop) {
  if (n < frame) return 0;
  return (n - frame) / hop + 1;
}

inline std::vector<double> hamming(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n == 1) return w;
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2 * std::numbers::pi * double(i) / double(n - 1));
  return w;
}

/// Hamming-windowed frames, one vector per frame.
inline std::vector<std::vector<double>> frame_signal(const Waveform& w,
                                                     const FrontendConfig& cfg) {
  cfg.validate();
  if (w.sample_rate != cfg.sample_rate)
    throw ConfigError("waveform rate " + std::to_string(w.sample_rate) +
                      " does not match frontend rate " + std::to_string(cfg.sample_rate));
  const std::size_t L = cfg.frame_length(), H = cfg.hop_length();
  std::vector<double> x = w.samples;
  if (x.size() < L) {
    if (!cfg.pad_short || x.empty())
      throw DataError("signal of " + std::to_string(x.size()) +
                      " samples is shorter than one frame (" + std::to_string(L) + ")");
    x.resize(L, 0.0);
  }
  const auto win = hamming(L);
  const std::size_t n = frame_count(x.size(), L, H);
  std::vector<std::vector<double>> frames(n, std::vector<double>(L));
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t i = 0; i < L; ++i) frames[t][i] = x[t * H + i] * win[i];
  return frames;
}

/// Triangular filters with centers equally spaced on a linear frequency axis
/// from 0 to max_freq_hz. Returns n_filters rows of fft_size/2+1 weights.
inline std::vector<std::vector<double>> linear_filterbank(const FrontendConfig& cfg) {
  const std::size_t bins = std::size_t(cfg.fft_size) / 2 + 1;
  const int M = cfg.n_filters;
  std::vector<double> edges(std::size_t(M) + 2);
  for (int i = 0; i < M + 2; ++i) edges[std::size_t(i)] = cfg.max_freq_hz * i / (M + 1);
  std::vector<std::vector<double>> fb(std::size_t(M), std::vector<double>(bins, 0.0));
  for (int m = 0; m < M; ++m) {
    const double lo = edges[std::size_t(m)], mid = edges[std::size_t(m) + 1],
                 hi = edges[std::size_t(m) + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = double(k) * cfg.sample_rate / cfg.fft_size;
      double v = 0;
      if (f > lo && f <= mid) v = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) v = (hi - f) / (hi - mid);
      fb[std::size_t(m)][k] = v;
    }
  }
  return fb;
}

inline double filter_center_hz(const FrontendConfig& cfg, int m) {
  return cfg.max_freq_hz * (m + 1) / (cfg.n_filters + 1);
}

/// Per-frame log filterbank energies, T x n_filters.
inline FeatureMatrix log_filterbank_energies(const Waveform& w, const FrontendConfig& cfg) {
  const auto frames = frame_signal(w, cfg);
  const auto fb = linear_filterbank(cfg);
  RealFft fft(std::size_t(cfg.fft_size));
  FeatureMatrix out(frames.size(), fb.size());
  std::vector<double> power;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    fft.power(frames[t].data(), frames[t].size(), power);
    for (std::size_t m = 0; m < fb.size(); ++m) {
      double e = 0;
      for (std::size_t k = 0; k < power.size(); ++k) e += fb[m][k] * power[k];
      out.at(t, m) = std::log(std::max(e, cfg.log_floor));
    }
  }
  return out;
}

/// Orthonormal DCT-II of each row, keeping the first n_keep coefficients.
inline FeatureMatrix dct_rows(const FeatureMatrix& m, std::size_t n_keep) {
  const std::size_t N = m.cols;
  std::vector<double> basis(n_keep * N);
  for (std::size_t k = 0; k < n_keep; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / N) : std::sqrt(2.0 / N);
    for (std::size_t n = 0; n < N; ++n)
      basis[k * N + n] = s * std::cos(std::numbers::pi * double(k) * (2.0 * n + 1) / (2.0 * N));
  }
  FeatureMatrix out(m.rows, n_keep);
  for (std::size_t t = 0; t < m.rows; ++t)
    for (std::size_t k = 0; k < n_keep; ++k) {
      double acc = 0;
      for (std::size_t n = 0; n < N; ++n) acc += basis[k * N + n] * m.at(t, n);
      out.at(t, k) = acc;
    }
  return out;
}

/// Regression deltas over +-W frames with replicated edges:
/// d_t = sum_n n (c_{t+n} - c_{t-n}) / (2 sum_n n^2).
inline FeatureMatrix deltas(const FeatureMatrix& m, int window) {
  if (m.rows == 0) throw DataError("deltas of an empty matrix");
  if (window < 1) throw ConfigError("delta window must be >= 1");
  double denom = 0;
  for (int n = 1; n <= window; ++n) denom += 2.0 * n * n;
  FeatureMatrix out(m.rows, m.cols);
  const long long last = (long long)m.rows - 1;
  for (long long t = 0; t <= last; ++t) {
    for (int n = 1; n <= window; ++n) {
      const std::size_t fwd = std::size_t(std::min(last, t + n));
      const std::size_t back = std::size_t(std::max(0LL, t - n));
      for (std::size_t c = 0; c < m.cols; ++c)
        out.at(std::size_t(t), c) += n * (m.at(fwd, c) - m.at(back, c));
    }
    for (std::size_t c = 0; c < m.cols; ++c) out.at(std::size_t(t), c) /= denom;
  }
  return out;
}

inline FeatureMatrix hstack(const std::vector<const FeatureMatrix*>& parts) {
  FeatureMatrix out(parts.front()->rows, 0);
  for (auto* p : parts) out.cols += p->cols;
  out.data.assign(out.rows * out.cols, 0.0);
  for (std::size_t t = 0; t < out.rows; ++t) {
    std::size_t c0 = 0;
    for (auto* p : parts) {
      std::copy(p->row(t), p->row(t) + p->cols, out.row(t) + c0);
      c0 += p->cols;
    }
  }
  return out;
}

namespace detail {
inline FeatureMatrix with_deltas(const FeatureMatrix& stat, const FrontendConfig& cfg) {
  if (cfg.delta_order == 0) return stat;
  FeatureMatrix d1 = deltas(stat, cfg.delta_window);
  if (cfg.delta_order == 1) return hstack({&stat, &d1});
  FeatureMatrix d2 = deltas(d1, cfg.delta_window);
  return hstack({&stat, &d1, &d2});
}
}  // namespace detail

/// Linear-frequency cepstral coefficients with appended deltas.
inline FeatureMatrix lfcc(const Waveform& w, const FrontendConfig& cfg) {
  if (cfg.kind != FeatureKind::lfcc) throw ConfigError("lfcc called with an lfbe config");
  FeatureMatrix out =
      detail::with_deltas(dct_rows(log_filterbank_energies(w, cfg), std::size_t(cfg.n_ceps)), cfg);
  out.kind = FeatureKind::lfcc;
  out.hash = config_hash(cfg);
  return out;
}

/// Log filterbank energies with optional deltas.
inline FeatureMatrix lfbe(const Waveform& w, const FrontendConfig& cfg) {
  if (cfg.kind != FeatureKind::lfbe) throw ConfigError("lfbe called with an lfcc config");
  FeatureMatrix out = detail::with_deltas(log_filterbank_energies(w, cfg), cfg);
  out.kind = FeatureKind::lfbe;
  out.hash = config_hash(cfg);
  return out;
}

inline FeatureMatrix extract(const Waveform& w, const FrontendConfig& cfg) {
  return cfg.kind == FeatureKind::lfcc ? lfcc(w, cfg) : lfbe(w, cfg);
}

/// Brings a matrix to exactly `target` rows: shorter inputs are tiled along
/// time, longer ones yield a uniformly chosen contiguous block.
template <class Rng>
FeatureMatrix fix_length(const FeatureMatrix& m, std::size_t target, Rng& rng) {
  if (m.empty()) throw DataError("fix_length of an empty feature matrix");
  FeatureMatrix out(target, m.cols);
  out.kind = m.kind;
  out.hash = m.hash;
  std::size_t offset = 0;
  if (m.rows > target) {
    std::uniform_int_distribution<std::size_t> pick(0, m.rows - target);
    offset = pick(rng);
  }
  for (std::size_t t = 0; t < target; ++t) {
    const std::size_t src = m.rows > target ? offset + t : t % m.rows;
    std::copy(m.row(src), m.row(src) + m.cols, out.row(t));
  }
  return out;
}

}  // namespace protospoof::dsp
