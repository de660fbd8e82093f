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

#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "protospoof/augment/codec.hpp"
#include "protospoof/augment/pitch.hpp"
#include "protospoof/augment/reverb.hpp"
#include "protospoof/core/error.hpp"
#include "protospoof/core/parallel.hpp"
#include "protospoof/core/random.hpp"
#include "protospoof/data/manifest.hpp"
#include "protospoof/dsp/filters.hpp"
#include "protospoof/dsp/wav.hpp"

namespace protospoof::augment {

enum class AugmentKind { codec_alaw, bandlimit_wideband, pitch, reverb };

inline const char* kind_suffix(AugmentKind k) {
  switch (k) {
    case AugmentKind::codec_alaw: return "alaw";
    case AugmentKind::bandlimit_wideband: return "wideband";
    case AugmentKind::pitch: return "pitch";
    case AugmentKind::reverb: return "reverb";
  }
  return "?";
}

struct AugmentSpec {
  AugmentKind kind = AugmentKind::codec_alaw;
  int pitch_cents = 0;
  double room_scale = 0;
  std::uint64_t seed = 0;
};

/// Which corpus copies to add. "codec" adds both channel simulations.
struct AugmentPolicy {
  bool codec = false;
  bool pitch = false;
  bool reverb = false;

  static AugmentPolicy parse(const std::string& text) {
    AugmentPolicy p;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
      if (item.empty()) continue;
      if (item == "codec") p.codec = true;
      else if (item == "pitch") p.pitch = true;
      else if (item == "reverb") p.reverb = true;
      else throw ConfigError("unknown augmentation '" + item + "' (expected codec, pitch, reverb)");
    }
    return p;
  }

  std::vector<AugmentKind> kinds() const {
    std::vector<AugmentKind> k;
    if (codec) {
      k.push_back(AugmentKind::codec_alaw);
      k.push_back(AugmentKind::bandlimit_wideband);
    }
    if (pitch) k.push_back(AugmentKind::pitch);
    if (reverb) k.push_back(AugmentKind::reverb);
    return k;
  }
};

/// Per-utterance draw: integer cents uniform in [-300, 300], room scale
/// uniform in [0, 100], both from a stream keyed by (seed, utterance, kind).
inline AugmentSpec sample_spec(AugmentKind kind, std::uint64_t root_seed,
                               const std::string& utt_id) {
  AugmentSpec s;
  s.kind = kind;
  s.seed = derive_seed(root_seed, "augment", utt_id, kind_suffix(kind));
  std::mt19937_64 rng(s.seed);
  if (kind == AugmentKind::pitch) s.pitch_cents = std::uniform_int_distribution<int>(-300, 300)(rng);
  if (kind == AugmentKind::reverb) s.room_scale = std::uniform_real_distribution<double>(0, 100)(rng);
  return s;
}

inline dsp::Waveform apply(const dsp::Waveform& w, const AugmentSpec& s) {
  switch (s.kind) {
    case AugmentKind::codec_alaw: return alaw_codec(w);
    case AugmentKind::bandlimit_wideband: return bandlimit_wideband(w);
    case AugmentKind::pitch: return pitch_shift(w, s.pitch_cents);
    case AugmentKind::reverb: return apply_reverb(w, s.room_scale, s.seed);
  }
  throw ConfigError("unknown augmentation kind");
}

/// Loads audio as mono at `rate`, resampling when the file differs.
inline dsp::Waveform load_audio(const std::string& path, int rate = 16000) {
  dsp::Waveform w = dsp::read_wav(path);
  if (w.sample_rate != rate) {
    w.samples = dsp::resample(w.samples, w.sample_rate, rate);
    w.sample_rate = rate;
  }
  return w;
}

/// Writes one augmented copy per (utterance, policy kind) under out_dir and
/// returns the original records followed by the copies. Audio paths in the
/// result are absolute for originals and relative to out_dir for copies, so
/// the manifest is meant to be saved inside out_dir.
inline data::Manifest build_augmented_manifest(const data::Manifest& in,
                                               const AugmentPolicy& policy,
                                               std::uint64_t seed, const std::string& out_dir,
                                               int jobs = 1) {
  data::validate_manifest(in, "augment input");
  const auto kinds = policy.kinds();
  data::Manifest out;
  out.base_dir = out_dir;
  for (const auto& r : in.records) {
    data::ManifestRecord c = r;
    c.audio_path = std::filesystem::absolute(in.audio_path(r)).string();
    out.records.push_back(std::move(c));
  }
  if (kinds.empty()) return out;

  std::filesystem::create_directories(out_dir);
  std::set<std::string> ids;
  for (const auto& r : in.records) ids.insert(r.utt_id);
  std::vector<std::pair<std::size_t, AugmentKind>> work;
  for (auto kind : kinds)
    for (std::size_t i = 0; i < in.records.size(); ++i) {
      const auto& r = in.records[i];
      data::ManifestRecord c = r;
      c.utt_id = r.utt_id + "_" + kind_suffix(kind);
      if (!ids.insert(c.utt_id).second)
        throw DataError("augmented id '" + c.utt_id + "' collides with an existing utterance");
      c.audio_path = c.utt_id + ".wav";
      out.records.push_back(std::move(c));
      work.emplace_back(i, kind);
    }
  parallel_for(work.size(), jobs, [&](std::size_t j) {
    const auto& [i, kind] = work[j];
    const auto& r = in.records[i];
    const auto w = load_audio(in.audio_path(r));
    const auto spec = sample_spec(kind, seed, r.utt_id);
    const auto path = (std::filesystem::path(out_dir) / (r.utt_id + "_" + kind_suffix(kind) + ".wav"));
    dsp::write_wav(path.string(), apply(w, spec));
  });
  return out;
}

}  // namespace protospoof::augment
