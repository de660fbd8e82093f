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
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "protospoof/core/error.hpp"
#include "protospoof/core/parallel.hpp"
#include "protospoof/core/random.hpp"
#include "protospoof/data/manifest.hpp"
#include "protospoof/dsp/fft.hpp"
#include "protospoof/dsp/wav.hpp"

namespace protospoof::data {

// Synthetic voiced-speech-like corpus. "Bonafide" items are harmonic
// complexes with a drifting, vibrato-modulated f0, cycle-level jitter and
// shimmer, moving formants, a slow 1/f amplitude envelope and aspiration
// noise. Spoof items use the same generator with artifacts taken from a
// versioned profile file.

struct BonafideStyle {
  std::array<double, 2> f0_range_hz{100, 250};
  double drift = 0.08;
  std::array<double, 2> vibrato_rate_hz{4.0, 7.0};
  std::array<double, 2> vibrato_depth{0.004, 0.02};
  double jitter = 0.012;
  double shimmer = 0.10;
  double aspiration_db = -30;
  double formant_bandwidth_scale = 1.0;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BonafideStyle, f0_range_hz, drift, vibrato_rate_hz,
                                                vibrato_depth, jitter, shimmer, aspiration_db,
                                                formant_bandwidth_scale)

struct SpoofProfile {
  std::string attack_id;
  std::string description;
  bool flat_f0 = false;
  double jitter_scale = 1.0;
  double shimmer_scale = 1.0;
  double envelope_smoothing = 1.0;  // formant bandwidth multiplier
  int phase_levels = 0;             // 0: no phase quantization
  int phase_frame = 512;            // STFT size for phase quantization, hop = size / 4
  std::optional<double> buzz_db;    // level of the inharmonic buzz re. voice RMS
  int buzz_partials = 0;
  std::array<double, 2> buzz_range_hz{1000, 3500};
};

inline void from_json(const nlohmann::json& j, SpoofProfile& p) {
  p = SpoofProfile{};
  p.attack_id = j.at("attack_id").get<std::string>();
  p.description = j.value("description", "");
  p.flat_f0 = j.value("flat_f0", false);
  p.jitter_scale = j.value("jitter_scale", 1.0);
  p.shimmer_scale = j.value("shimmer_scale", 1.0);
  p.envelope_smoothing = j.value("envelope_smoothing", 1.0);
  p.phase_levels = j.value("phase_levels", 0);
  p.phase_frame = j.value("phase_frame", 512);
  if (j.contains("buzz_db") && !j["buzz_db"].is_null()) p.buzz_db = j["buzz_db"].get<double>();
  p.buzz_partials = j.value("buzz_partials", 0);
  p.buzz_range_hz = j.value("buzz_range_hz", p.buzz_range_hz);
}

struct SynthProfiles {
  int version = 0;
  BonafideStyle bonafide;
  std::vector<SpoofProfile> spoof;
};

inline SynthProfiles parse_profiles(const nlohmann::json& j, const std::string& source) {
  SynthProfiles p;
  try {
    p.version = j.at("version").get<int>();
    p.bonafide = j.value("bonafide", BonafideStyle{});
    p.spoof = j.at("profiles").get<std::vector<SpoofProfile>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  if (p.spoof.empty()) throw ConfigError(source + ": no spoof profiles");
  for (const auto& s : p.spoof) {
    if (s.attack_id.empty() || s.attack_id == "-")
      throw ConfigError(source + ": spoof profile needs an attack id");
    if (s.phase_levels < 0 || s.phase_frame < 16 || s.phase_frame % 4 != 0)
      throw ConfigError(source + ": profile " + s.attack_id + " has an invalid phase setting");
    if (s.buzz_db && s.buzz_partials < 1)
      throw ConfigError(source + ": profile " + s.attack_id + " sets buzz_db without partials");
  }
  return p;
}

inline SynthProfiles load_profiles(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open synth profile file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_profiles(j, path);
}

struct SynthSpec {
  std::size_t n_bonafide = 100;
  std::size_t n_spoof = 100;
  double min_duration = 1.0;
  double max_duration = 2.0;
  int sample_rate = 16000;
  std::uint64_t seed = 0;
  std::string prefix = "utt";
  std::size_t n_speakers = 10;

  void validate() const {
    if (!(min_duration > 0) || max_duration < min_duration)
      throw ConfigError("synth: need 0 < min_duration <= max_duration");
    if (sample_rate < 8000) throw ConfigError("synth: sample_rate must be >= 8000");
    if (n_speakers < 1) throw ConfigError("synth: n_speakers must be >= 1");
    if (prefix.empty() || prefix.find_first_of(" \t\n/") != std::string::npos)
      throw ConfigError("synth: prefix must be a non-empty token without '/'");
  }
};

namespace synth_detail {

struct Speaker {
  double f0;
  std::array<double, 3> formant_scale;
};

inline Speaker make_speaker(std::uint64_t seed, std::size_t index, const BonafideStyle& style) {
  std::mt19937_64 rng(derive_seed(seed, "speaker", std::to_string(index)));
  std::uniform_real_distribution<double> u(0, 1);
  Speaker s;
  s.f0 = style.f0_range_hz[0] + (style.f0_range_hz[1] - style.f0_range_hz[0]) * u(rng);
  for (auto& f : s.formant_scale) f = 0.88 + 0.24 * u(rng);
  return s;
}

// Slow random signal with roughly 1/f spectrum over [0.3, 10] Hz, unit-ish
// amplitude.
inline std::vector<double> pink_modulation(std::size_t n, int rate, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> out(n, 0.0);
  double norm = 0;
  for (int k = 0; k < 8; ++k) {
    const double f = 0.3 * std::pow(1.6, k);
    const double a = 1.0 / f;
    const double ph = 2 * std::numbers::pi * u(rng);
    norm += a * a;
    for (std::size_t i = 0; i < n; ++i) out[i] += a * std::sin(2 * std::numbers::pi * f * i / rate + ph);
  }
  norm = std::sqrt(norm / 2);
  for (auto& v : out) v /= norm;
  return out;
}

// Piecewise-linear random walk: a new target every `seg` seconds.
inline std::vector<double> wander(std::size_t n, int rate, double seg, double spread,
                                  std::mt19937_64& rng) {
  std::normal_distribution<double> g(0, spread);
  const auto step = std::max<std::size_t>(1, std::size_t(seg * rate));
  std::vector<double> knots;
  for (std::size_t i = 0; i <= n / step + 1; ++i) knots.push_back(g(rng));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = double(i) / step;
    const auto k = std::size_t(pos);
    const double f = pos - double(k);
    out[i] = knots[k] * (1 - f) + knots[k + 1] * f;
  }
  return out;
}

inline void quantize_phase(std::vector<double>& x, int levels, std::size_t n) {
  const std::size_t hop = n / 4;
  if (x.size() < n) return;
  std::vector<double> win(n);
  for (std::size_t i = 0; i < n; ++i) win[i] = std::sin(std::numbers::pi * (i + 0.5) / n);
  dsp::RealFft fft(n);
  std::vector<double> y(x.size() + n, 0.0), wsum(x.size() + n, 0.0), frame(n);
  const double q = 2 * std::numbers::pi / levels;
  for (std::size_t start = 0; start + n <= x.size() + hop; start += hop) {
    for (std::size_t i = 0; i < n; ++i)
      frame[i] = start + i < x.size() ? x[start + i] * win[i] : 0.0;
    auto spec = fft.forward(frame);
    for (auto& c : spec) c = std::polar(std::abs(c), std::round(std::arg(c) / q) * q);
    const auto& t = fft.inverse(spec);
    for (std::size_t i = 0; i < n; ++i) {
      y[start + i] += t[i] * win[i];
      wsum[start + i] += win[i] * win[i];
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = wsum[i] > 1e-6 ? y[i] / wsum[i] : 0.0;
}

}  // namespace synth_detail

/// One utterance. `profile` is null for bonafide speech.
inline dsp::Waveform synthesize(const SynthSpec& spec, const BonafideStyle& style,
                                const SpoofProfile* profile, std::size_t speaker_index,
                                std::uint64_t seed) {
  using namespace synth_detail;
  const double two_pi = 2 * std::numbers::pi;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> g(0, 1);
  const Speaker spk = make_speaker(spec.seed, speaker_index, style);
  const int sr = spec.sample_rate;
  const double dur = spec.min_duration + (spec.max_duration - spec.min_duration) * u(rng);
  const auto n = std::size_t(dur * sr);

  const double jit = style.jitter * (profile ? profile->jitter_scale : 1.0);
  const double shim = style.shimmer * (profile ? profile->shimmer_scale : 1.0);
  const bool flat = profile && profile->flat_f0;
  const double bw_scale = style.formant_bandwidth_scale * (profile ? profile->envelope_smoothing : 1.0);

  // f0 contour.
  const double base = spk.f0 * (0.92 + 0.16 * u(rng));
  const double vib_rate = style.vibrato_rate_hz[0] + (style.vibrato_rate_hz[1] - style.vibrato_rate_hz[0]) * u(rng);
  const double vib_depth = style.vibrato_depth[0] + (style.vibrato_depth[1] - style.vibrato_depth[0]) * u(rng);
  const auto drift = wander(n, sr, 0.25, style.drift, rng);
  const auto jitter = wander(n, sr, 0.006, jit, rng);  // cycle-scale perturbation
  std::vector<double> f0(n);
  const double vib_phase = two_pi * u(rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (flat) {
      f0[i] = base;
    } else {
      f0[i] = base * (1 + drift[i]) * (1 + vib_depth * std::sin(two_pi * vib_rate * i / sr + vib_phase)) *
              (1 + jitter[i]);
    }
  }

  // Formant tracks, updated every 10 ms.
  const std::array<double, 3> f_lo{300, 900, 2300}, f_hi{850, 2300, 3400}, bw{80, 110, 160};
  std::array<std::vector<double>, 3> ftrack;
  for (int k = 0; k < 3; ++k) {
    const auto w = wander(n / 160 + 2, 100, 0.2, 0.5, rng);
    for (double v : w) {
      const double pos = std::clamp(0.5 + 0.5 * std::tanh(v), 0.0, 1.0);
      ftrack[std::size_t(k)].push_back(spk.formant_scale[std::size_t(k)] * (f_lo[std::size_t(k)] + (f_hi[std::size_t(k)] - f_lo[std::size_t(k)]) * pos));
    }
  }

  const auto envelope = pink_modulation(n, sr, rng);
  const double syll_rate = 3 + 2 * u(rng), syll_phase = two_pi * u(rng);
  const std::size_t max_h = std::size_t(0.47 * sr / (base * 0.8));
  // Harmonic h is Im(e^{i h phi} e^{i theta_h}); e^{i h phi} is built by
  // repeated multiplication so only the fundamental needs a sin/cos.
  std::vector<std::complex<double>> offset(max_h);
  std::vector<double> shimmer_state(max_h, 0.0), amp(max_h, 0.0);
  for (auto& o : offset) o = std::polar(1.0, two_pi * u(rng));
  double phi = 0;
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 160 == 0) {
      const std::size_t blk = i / 160;
      for (std::size_t h = 0; h < max_h; ++h) {
        const double f = double(h + 1) * f0[i];
        double a = 0;
        if (f < 0.47 * sr) {
          double env = 0.02;
          for (std::size_t k = 0; k < 3; ++k) {
            const double d = (f - ftrack[k][blk]) / (bw[k] * bw_scale);
            env += (k == 0 ? 1.0 : k == 1 ? 0.6 : 0.35) / (1 + d * d);
          }
          shimmer_state[h] = 0.7 * shimmer_state[h] + 0.3 * shim * g(rng);
          a = env / std::sqrt(double(h + 1)) * (1 + shimmer_state[h]);
        }
        amp[h] = a;
      }
    }
    phi = std::fmod(phi + two_pi * f0[i] / sr, two_pi);
    const std::complex<double> step = std::polar(1.0, phi);
    std::complex<double> rot = step;
    double s = 0;
    for (std::size_t h = 0; h < max_h; ++h) {
      s += amp[h] * (rot.real() * offset[h].imag() + rot.imag() * offset[h].real());
      rot *= step;
    }
    const double syll = 0.35 + 0.65 * std::pow(std::abs(std::sin(std::numbers::pi * syll_rate * i / sr + syll_phase)), 0.6);
    x[i] = s * syll * std::max(0.1, 1 + 0.3 * envelope[i]);
  }

  auto rms = [](const std::vector<double>& v) {
    double e = 0;
    for (double s : v) e += s * s;
    return std::sqrt(e / std::max<std::size_t>(1, v.size()));
  };
  const double voice_rms = rms(x);

  // Aspiration noise follows the syllabic envelope.
  const double asp = voice_rms * std::pow(10.0, style.aspiration_db / 20);
  for (std::size_t i = 0; i < n; ++i) {
    const double syll = 0.35 + 0.65 * std::pow(std::abs(std::sin(std::numbers::pi * syll_rate * i / sr + syll_phase)), 0.6);
    x[i] += asp * syll * g(rng);
  }

  if (profile) {
    if (profile->phase_levels > 0) quantize_phase(x, profile->phase_levels, std::size_t(profile->phase_frame));
    if (profile->buzz_db) {
      const double level = voice_rms * std::pow(10.0, *profile->buzz_db / 20) *
                           std::sqrt(2.0 / profile->buzz_partials);
      for (int p = 0; p < profile->buzz_partials; ++p) {
        const double f = profile->buzz_range_hz[0] + (profile->buzz_range_hz[1] - profile->buzz_range_hz[0]) * u(rng);
        const double ph = two_pi * u(rng);
        for (std::size_t i = 0; i < n; ++i) x[i] += level * std::sin(two_pi * f * i / sr + ph);
      }
    }
  }

  // Random presentation level so energy alone does not separate classes.
  const double target_db = -22 + 10 * (u(rng) - 0.5);
  const double gain = std::pow(10.0, target_db / 20) / std::max(1e-12, rms(x));
  dsp::Waveform w;
  w.sample_rate = sr;
  w.samples = std::move(x);
  for (auto& v : w.samples) v = std::clamp(v * gain, -1.0, 1.0);
  return w;
}

/// Writes `<out_dir>/wav/<id>.wav` for every item and returns the manifest
/// (audio paths relative to out_dir). Spoof items cycle through the profiles.
inline Manifest gen_synth(const SynthSpec& spec, const SynthProfiles& profiles,
                          const std::string& out_dir, int jobs = 1) {
  spec.validate();
  const auto wav_dir = std::filesystem::path(out_dir) / "wav";
  std::filesystem::create_directories(wav_dir);
  Manifest m;
  m.base_dir = out_dir;
  const std::size_t total = spec.n_bonafide + spec.n_spoof;
  const int width = std::max<int>(4, int(std::to_string(total).size()));
  for (std::size_t i = 0; i < total; ++i) {
    const bool bona = i < spec.n_bonafide;
    std::string num = std::to_string(i + 1);
    num.insert(0, std::size_t(std::max(0, width - int(num.size()))), '0');
    ManifestRecord r;
    r.utt_id = spec.prefix + "_" + num;
    r.speaker_id = spec.prefix + "_spk" + std::to_string(i % spec.n_speakers);
    r.label = bona ? Label::bonafide : Label::spoof;
    r.attack_id = bona ? "-" : profiles.spoof[(i - spec.n_bonafide) % profiles.spoof.size()].attack_id;
    r.audio_path = "wav/" + r.utt_id + ".wav";
    m.records.push_back(std::move(r));
  }
  parallel_for(total, jobs, [&](std::size_t i) {
    const auto& r = m.records[i];
    const SpoofProfile* profile =
        i < spec.n_bonafide ? nullptr
                            : &profiles.spoof[(i - spec.n_bonafide) % profiles.spoof.size()];
    const auto w = synthesize(spec, profiles.bonafide, profile, i % spec.n_speakers,
                              derive_seed(spec.seed, "synth", r.utt_id));
    dsp::write_wav((wav_dir / (r.utt_id + ".wav")).string(), w);
  });
  return m;
}

}  // namespace protospoof::data
