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
#include "protospoof/dsp/filters.hpp"
#include "protospoof/dsp/wav.hpp"

namespace protospoof::augment {

struct WsolaOptions {
  double frame_ms = 40;
  double overlap = 0.75;
  double tolerance_ms = 10;  // search radius around the nominal analysis position
};

/// Waveform-similarity overlap-add time-scale modification. The output is
/// `factor` times longer than the input at unchanged pitch.
inline std::vector<double> wsola(const std::vector<double>& x, double factor, int sample_rate,
                                 const WsolaOptions& opt = {}) {
  if (!(factor > 0)) throw ConfigError("wsola: stretch factor must be positive");
  const auto L = std::size_t(std::llround(opt.frame_ms * sample_rate / 1000.0));
  const auto Hs = std::max<std::size_t>(1, std::size_t(std::llround(L * (1.0 - opt.overlap))));
  const auto tol = static_cast<long long>(std::llround(opt.tolerance_ms * sample_rate / 1000.0));
  const double Ha = double(Hs) / factor;
  const std::size_t out_len = std::size_t(std::llround(double(x.size()) * factor));
  if (x.empty()) return {};

  std::vector<double> win(L);
  for (std::size_t i = 0; i < L; ++i)
    win[i] = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * (double(i) + 0.5) / double(L));

  const long long n_in = (long long)x.size();
  auto sample = [&](long long i) { return i >= 0 && i < n_in ? x[std::size_t(i)] : 0.0; };

  std::vector<double> y(out_len + L, 0.0), norm(out_len + L, 0.0);
  long long prev = 0;  // input position of the previously copied frame
  for (std::size_t k = 0; k * Hs < out_len; ++k) {
    long long pos = (long long)std::llround(double(k) * Ha);
    if (k > 0) {
      // Pick the shift whose frame best continues the previous frame's
      // natural successor.
      const long long target = prev + (long long)Hs;
      double best = -1e300;
      long long best_pos = pos;
      for (long long d = -tol; d <= tol; ++d) {
        const long long c = pos + d;
        if (c < 0 || c >= n_in) continue;
        double acc = 0;
        for (std::size_t i = 0; i < L; i += 2) acc += sample(target + (long long)i) * sample(c + (long long)i);
        if (acc > best) {
          best = acc;
          best_pos = c;
        }
      }
      pos = best_pos;
    }
    const std::size_t o = k * Hs;
    for (std::size_t i = 0; i < L; ++i) {
      y[o + i] += win[i] * sample(pos + (long long)i);
      norm[o + i] += win[i];
    }
    prev = pos;
  }
  y.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i)
    if (norm[i] > 1e-3) y[i] /= norm[i];
  return y;
}

/// Scales pitch by 2^(cents/1200) at constant duration: time-stretch by the
/// pitch factor, then resample back to the original length.
inline dsp::Waveform pitch_shift(const dsp::Waveform& w, int cents) {
  if (std::abs(cents) > 1200) throw ConfigError("pitch_shift: |cents| must be <= 1200");
  if (cents == 0) return w;
  const double factor = std::exp2(cents / 1200.0);
  const auto stretched = wsola(w.samples, factor, w.sample_rate);
  dsp::Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples = dsp::Resampler(double(w.sample_rate) * factor, w.sample_rate)(stretched);
  out.samples.resize(w.samples.size(), 0.0);
  return out;
}

}  // namespace protospoof::augment
