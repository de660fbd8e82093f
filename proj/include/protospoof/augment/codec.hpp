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

#include "protospoof/dsp/filters.hpp"
#include "protospoof/dsp/wav.hpp"

namespace protospoof::augment {

// ITU-T G.711 A-law, after the public-domain Sun Microsystems reference
// (g711.c). Input is 16-bit two's complement; only the top 13 bits are coded.

namespace alaw_detail {
inline constexpr int kSegEnd[8] = {0x1F, 0x3F, 0x7F, 0xFF, 0x1FF, 0x3FF, 0x7FF, 0xFFF};
inline constexpr int kQuantMask = 0x0F;
inline constexpr int kSegShift = 4;
inline constexpr int kSegMask = 0x70;
inline constexpr int kSignBit = 0x80;
}  // namespace alaw_detail

inline std::uint8_t linear_to_alaw(std::int16_t pcm16) {
  using namespace alaw_detail;
  int pcm = pcm16 >> 3;
  int mask;
  if (pcm >= 0) {
    mask = 0xD5;
  } else {
    mask = 0x55;
    pcm = -pcm - 1;
  }
  int seg = 0;
  while (seg < 8 && pcm > kSegEnd[seg]) ++seg;
  if (seg >= 8) return static_cast<std::uint8_t>(0x7F ^ mask);
  int aval = seg << kSegShift;
  aval |= seg < 2 ? (pcm >> 1) & kQuantMask : (pcm >> seg) & kQuantMask;
  return static_cast<std::uint8_t>(aval ^ mask);
}

inline std::int16_t alaw_to_linear(std::uint8_t code) {
  using namespace alaw_detail;
  const int a = code ^ 0x55;
  int t = (a & kQuantMask) << 4;
  const int seg = (a & kSegMask) >> kSegShift;
  switch (seg) {
    case 0:
      t += 8;
      break;
    case 1:
      t += 0x108;
      break;
    default:
      t += 0x108;
      t <<= seg - 1;
  }
  return static_cast<std::int16_t>((a & kSignBit) ? t : -t);
}

/// Narrow-band telephone channel: 16 kHz -> 8 kHz -> A-law encode/decode ->
/// 16 kHz. Output has the input's length.
inline dsp::Waveform alaw_codec(const dsp::Waveform& w) {
  dsp::Resampler::Options opt;
  opt.zero_crossings = 128;
  opt.rolloff = 0.985;
  opt.beta = 9.0;
  const double narrow = 8000.0;
  auto low = dsp::Resampler(w.sample_rate, narrow, opt)(w.samples);
  for (auto& v : low) v = alaw_to_linear(linear_to_alaw(dsp::to_pcm16(v))) / 32768.0;
  dsp::Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples = dsp::Resampler(narrow, w.sample_rate, opt)(low);
  out.samples.resize(w.samples.size(), 0.0);
  return out;
}

/// Wide-band channel stand-in: 50 Hz - 7 kHz band-pass (Butterworth highpass
/// plus linear-phase FIR lowpass) followed by 14-bit uniform quantization.
inline dsp::Waveform bandlimit_wideband(const dsp::Waveform& w) {
  dsp::Waveform out = w;
  for (const auto& s : dsp::butterworth_highpass(4, 50.0, w.sample_rate)) s.run(out.samples);
  const double nyquist = w.sample_rate / 2.0;
  const auto lp = dsp::design_lowpass(161, 7300.0 / nyquist, 7.0);
  out.samples = dsp::filter_centered(out.samples, lp);
  const double step = 2.0 / (1 << 14);
  for (auto& v : out.samples) v = std::clamp(std::round(v / step) * step, -1.0, 1.0 - step);
  return out;
}

}  // namespace protospoof::augment
