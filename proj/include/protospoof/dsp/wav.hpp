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
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "protospoof/core/error.hpp"

namespace protospoof::dsp {

/// Mono audio, samples nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
  double duration() const { return double(samples.size()) / sample_rate; }
};

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}
inline std::uint16_t read_u16(const unsigned char* p) {
  return std::uint16_t(p[0] | p[1] << 8);
}
inline void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(char(v & 0xff));
  s.push_back(char(v >> 8));
}

}  // namespace detail

/// Reads a RIFF/WAVE file: 16-bit PCM or 32-bit float, any channel count
/// (channels are averaged). No resampling here; see load_audio().
inline Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open audio file " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  auto bad = [&](const std::string& why) { return DataError(path + ": " + why); };
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw bad("not a RIFF/WAVE file");

  int format = 0, channels = 0, bits = 0;
  Waveform w;
  std::size_t pos = 12;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  while (pos + 8 <= buf.size()) {
    const unsigned char* h = buf.data() + pos;
    const std::uint32_t len = detail::read_u32(h + 4);
    const std::size_t body = pos + 8;
    if (body + len > buf.size() && std::memcmp(h, "data", 4) != 0) throw bad("truncated chunk");
    if (std::memcmp(h, "fmt ", 4) == 0) {
      if (len < 16) throw bad("short fmt chunk");
      format = detail::read_u16(buf.data() + body);
      channels = detail::read_u16(buf.data() + body + 2);
      w.sample_rate = int(detail::read_u32(buf.data() + body + 4));
      bits = detail::read_u16(buf.data() + body + 14);
      if (format == 0xFFFE && len >= 26) format = detail::read_u16(buf.data() + body + 24);
    } else if (std::memcmp(h, "data", 4) == 0) {
      data = buf.data() + body;
      data_len = std::min<std::size_t>(len, buf.size() - body);
      break;
    }
    pos = body + len + (len & 1);
  }
  if (!channels || !data) throw bad("missing fmt or data chunk");
  if (w.sample_rate <= 0) throw bad("invalid sample rate");

  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32)
    throw bad("unsupported encoding (format " + std::to_string(format) + ", " +
              std::to_string(bits) + " bits)");
  const std::size_t width = bits / 8;
  const std::size_t frames = data_len / (width * channels);
  w.samples.assign(frames, 0.0);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0;
    for (int c = 0; c < channels; ++c) {
      const unsigned char* p = data + (i * channels + c) * width;
      if (pcm16) {
        acc += std::int16_t(detail::read_u16(p)) / 32768.0;
      } else {
        float f;
        std::memcpy(&f, p, 4);
        acc += f;
      }
    }
    w.samples[i] = acc / channels;
  }
  return w;
}

inline std::int16_t to_pcm16(double x) {
  const double s = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
  return static_cast<std::int16_t>(s);
}

/// Writes 16-bit mono PCM; samples outside [-1, 1] are clipped.
inline void write_wav(const std::string& path, const Waveform& w) {
  std::string out;
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  out.reserve(44 + 2 * n);
  out += "RIFF";
  detail::put_u32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  detail::put_u32(out, 16);
  detail::put_u16(out, 1);
  detail::put_u16(out, 1);
  detail::put_u32(out, std::uint32_t(w.sample_rate));
  detail::put_u32(out, std::uint32_t(w.sample_rate) * 2);
  detail::put_u16(out, 2);
  detail::put_u16(out, 16);
  out += "data";
  detail::put_u32(out, 2 * n);
  for (double x : w.samples) detail::put_u16(out, std::uint16_t(to_pcm16(x)));
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write audio file " + path);
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) throw DataError("write failed for " + path);
}

}  // namespace protospoof::dsp
