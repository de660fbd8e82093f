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
#include <random>
#include <vector>

#include "protospoof/core/error.hpp"
#include "protospoof/dsp/filters.hpp"
#include "protospoof/dsp/wav.hpp"

namespace protospoof::augment {

/// Room model: T60 and direct-to-reverberant ratio as functions of room
/// scale in [0, 100].
inline double reverb_t60(double room_scale) { return 0.05 + 0.007 * room_scale; }
inline double reverb_drr_db(double room_scale) { return 40.0 - 0.4 * room_scale; }

struct RoomImpulseResponse {
  std::vector<double> taps;
  int sample_rate = 16000;
  double t60 = 0;
};

/// Unit direct-path tap followed by Gaussian noise under an exp(-6.91 t / T60)
/// amplitude envelope, scaled to the room's direct-to-reverberant ratio.
inline RoomImpulseResponse make_rir(double room_scale, int sample_rate, std::uint64_t seed) {
  if (!(room_scale >= 0 && room_scale <= 100))
    throw ConfigError("room_scale must be in [0, 100]");
  RoomImpulseResponse rir;
  rir.sample_rate = sample_rate;
  rir.t60 = reverb_t60(room_scale);
  const auto len = std::size_t(std::ceil(rir.t60 * sample_rate)) + 1;
  rir.taps.assign(len, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double decay = 6.907755278982137 / (rir.t60 * sample_rate);
  double tail = 0;
  for (std::size_t n = 1; n < len; ++n) {
    rir.taps[n] = gauss(rng) * std::exp(-decay * double(n));
    tail += rir.taps[n] * rir.taps[n];
  }
  const double target = std::pow(10.0, -reverb_drr_db(room_scale) / 10.0);
  const double g = tail > 0 ? std::sqrt(target / tail) : 0.0;
  for (std::size_t n = 1; n < len; ++n) rir.taps[n] *= g;
  rir.taps[0] = 1.0;
  return rir;
}

/// Convolves with a synthetic room response, truncates to the input length
/// and rescales to the input's peak magnitude.
inline dsp::Waveform apply_reverb(const dsp::Waveform& w, double room_scale, std::uint64_t seed) {
  const auto rir = make_rir(room_scale, w.sample_rate, seed);
  dsp::Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples = dsp::convolve(w.samples, rir.taps, w.samples.size());
  double in_peak = 0, out_peak = 0;
  for (double v : w.samples) in_peak = std::max(in_peak, std::abs(v));
  for (double v : out.samples) out_peak = std::max(out_peak, std::abs(v));
  if (out_peak > 0)
    for (auto& v : out.samples) v *= in_peak / out_peak;
  return out;
}

}  // namespace protospoof::augment
