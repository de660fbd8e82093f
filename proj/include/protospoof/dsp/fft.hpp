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

#include <complex>
#include <cstddef>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "protospoof/core/error.hpp"

namespace protospoof::dsp {

namespace detail {
// FFTW's planner is not thread-safe; execution on distinct plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Real <-> half-complex transforms of a fixed size n (unnormalized, as FFTW).
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n), time_(n), freq_(n / 2 + 1) {
    if (n == 0) throw ConfigError("fft size must be positive");
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    auto* t = time_.data();
    auto* f = reinterpret_cast<fftw_complex*>(freq_.data());
    forward_ = fftw_plan_dft_r2c_1d(int(n), t, f, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(int(n), f, t, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  /// Transforms `x` (zero-padded or truncated to n) into n/2+1 bins.
  const std::vector<std::complex<double>>& forward(const double* x, std::size_t len) {
    for (std::size_t i = 0; i < n_; ++i) time_[i] = i < len ? x[i] : 0.0;
    fftw_execute(forward_);
    return freq_;
  }
  const std::vector<std::complex<double>>& forward(const std::vector<double>& x) {
    return forward(x.data(), x.size());
  }

  /// |X_k|^2 for k = 0 .. n/2.
  void power(const double* x, std::size_t len, std::vector<double>& out) {
    forward(x, len);
    out.resize(bins());
    for (std::size_t k = 0; k < bins(); ++k) out[k] = std::norm(freq_[k]);
  }

  /// Inverse of forward(), scaled by 1/n so that inverse(forward(x)) == x.
  const std::vector<double>& inverse(const std::vector<std::complex<double>>& spec) {
    if (spec.size() != bins()) throw ConfigError("inverse fft: wrong bin count");
    freq_ = spec;
    fftw_execute(inverse_);
    for (auto& v : time_) v /= double(n_);
    return time_;
  }

 private:
  std::size_t n_;
  std::vector<double> time_;
  std::vector<std::complex<double>> freq_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace protospoof::dsp
