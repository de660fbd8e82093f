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

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "protospoof/core/error.hpp"
#include "protospoof/dsp/fft.hpp"

namespace protospoof::dsp {

inline double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

/// Kaiser window value at position u in [-1, 1].
inline double kaiser(double u, double beta) {
  if (std::abs(u) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - u * u)) / std::cyl_bessel_i(0.0, beta);
}

/// Odd-length Kaiser-windowed sinc lowpass, cutoff given as a fraction of
/// Nyquist, unit DC gain.
inline std::vector<double> design_lowpass(std::size_t taps, double cutoff, double beta) {
  if (taps % 2 == 0) ++taps;
  std::vector<double> h(taps);
  const double mid = double(taps - 1) / 2;
  double sum = 0;
  for (std::size_t i = 0; i < taps; ++i) {
    const double t = double(i) - mid;
    h[i] = cutoff * sinc(cutoff * t) * kaiser(t / (mid + 1), beta);
    sum += h[i];
  }
  for (auto& v : h) v /= sum;
  return h;
}

/// Linear convolution truncated to the first `out_len` samples (full length
/// when out_len == 0). Uses an FFT for long kernels.
inline std::vector<double> convolve(const std::vector<double>& x, const std::vector<double>& h,
                                    std::size_t out_len = 0) {
  if (x.empty() || h.empty()) return std::vector<double>(out_len, 0.0);
  const std::size_t full = x.size() + h.size() - 1;
  if (out_len == 0) out_len = full;
  std::vector<double> y(out_len, 0.0);
  if (h.size() <= 64 || x.size() <= 64) {
    for (std::size_t n = 0; n < std::min(out_len, full); ++n) {
      const std::size_t k0 = n >= x.size() ? n - x.size() + 1 : 0;
      const std::size_t k1 = std::min(n, h.size() - 1);
      double acc = 0;
      for (std::size_t k = k0; k <= k1; ++k) acc += h[k] * x[n - k];
      y[n] = acc;
    }
    return y;
  }
  const std::size_t n = next_pow2(full);
  RealFft fft(n);
  auto hx = fft.forward(x);
  const auto& hh = fft.forward(h);
  for (std::size_t k = 0; k < hx.size(); ++k) hx[k] *= hh[k];
  const auto& t = fft.inverse(hx);
  for (std::size_t i = 0; i < std::min(out_len, full); ++i) y[i] = t[i];
  return y;
}

/// Zero-phase FIR filtering: convolve and drop the (taps-1)/2 group delay,
/// keeping the input length.
inline std::vector<double> filter_centered(const std::vector<double>& x,
                                           const std::vector<double>& h) {
  const std::size_t delay = (h.size() - 1) / 2;
  auto y = convolve(x, h, x.size() + delay);
  return std::vector<double>(y.begin() + std::ptrdiff_t(delay), y.end());
}

/// Second-order IIR section, direct form II transposed, a0 normalized to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;

  void run(std::vector<double>& x) const {
    double z1 = 0, z2 = 0;
    for (auto& v : x) {
      const double y = b0 * v + z1;
      z1 = b1 * v - a1 * y + z2;
      z2 = b2 * v - a2 * y;
      v = y;
    }
  }
};

/// Butterworth highpass of even order as cascaded biquads (bilinear transform).
inline std::vector<Biquad> butterworth_highpass(int order, double cutoff_hz, double rate) {
  if (order < 2 || order % 2) throw ConfigError("butterworth order must be even and >= 2");
  const double k = std::tan(std::numbers::pi * cutoff_hz / rate);
  std::vector<Biquad> sections;
  for (int i = 0; i < order / 2; ++i) {
    const double theta = std::numbers::pi * (2.0 * i + 1) / (2.0 * order);
    const double q = 1.0 / (2.0 * std::sin(theta));
    const double norm = 1.0 / (1.0 + k / q + k * k);
    Biquad s;
    s.b0 = norm;
    s.b1 = -2.0 * norm;
    s.b2 = norm;
    s.a1 = 2.0 * (k * k - 1.0) * norm;
    s.a2 = (1.0 - k / q + k * k) * norm;
    sections.push_back(s);
  }
  return sections;
}

/// Band-limited resampling with a tabulated Kaiser-windowed sinc kernel.
/// Works for any positive rate ratio; the kernel cutoff follows the lower of
/// the two Nyquist frequencies.
class Resampler {
 public:
  struct Options {
    int zero_crossings = 64;  // per side, at the kernel cutoff
    double rolloff = 0.97;    // cutoff as a fraction of the lower Nyquist
    double beta = 9.0;
    int table_density = 512;  // table points per zero crossing
  };

  Resampler(double in_rate, double out_rate) : Resampler(in_rate, out_rate, Options()) {}
  Resampler(double in_rate, double out_rate, Options opt)
      : in_rate_(in_rate), out_rate_(out_rate), opt_(opt) {
    if (!(in_rate > 0) || !(out_rate > 0)) throw ConfigError("resampler rates must be positive");
    fc_ = std::min(1.0, out_rate / in_rate) * opt_.rolloff;
    const std::size_t n = std::size_t(opt_.zero_crossings) * opt_.table_density + 2;
    table_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double z = double(i) / opt_.table_density;  // in zero crossings
      table_[i] = sinc(z) * kaiser(z / opt_.zero_crossings, opt_.beta);
    }
  }

  std::size_t output_length(std::size_t n) const {
    return std::size_t(std::llround(double(n) * out_rate_ / in_rate_));
  }

  std::vector<double> operator()(const std::vector<double>& x) const {
    const std::size_t out_n = output_length(x.size());
    std::vector<double> y(out_n);
    const double step = in_rate_ / out_rate_;
    const double half = opt_.zero_crossings / fc_;  // half width in input samples
    const long long len = static_cast<long long>(x.size());
    for (std::size_t m = 0; m < out_n; ++m) {
      const double t = double(m) * step;
      const long long lo = std::max(0LL, (long long)std::ceil(t - half));
      const long long hi = std::min(len - 1, (long long)std::floor(t + half));
      double acc = 0;
      for (long long k = lo; k <= hi; ++k) acc += x[std::size_t(k)] * kernel(t - double(k));
      y[m] = fc_ * acc;
    }
    return y;
  }

 private:
  double kernel(double u) const {
    const double z = std::abs(u) * fc_ * opt_.table_density;
    const auto i = static_cast<std::size_t>(z);
    if (i + 1 >= table_.size()) return 0.0;
    const double f = z - double(i);
    return table_[i] + f * (table_[i + 1] - table_[i]);
  }

  double in_rate_, out_rate_;
  Options opt_;
  double fc_;
  std::vector<double> table_;
};

inline std::vector<double> resample(const std::vector<double>& x, double in_rate,
                                    double out_rate) {
  if (in_rate == out_rate) return x;
  return Resampler(in_rate, out_rate)(x);
}

}  // namespace protospoof::dsp
