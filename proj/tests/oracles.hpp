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

// Reference implementations written independently of the library, shared by
// the unit tests and the acceptance runner.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "protospoof/eval/tdcf.hpp"

namespace protospoof::oracle {

using Scores = std::vector<double>;

// Rates at threshold t with "score <= t is rejected", counted directly.
inline double miss_at(const Scores& b, double t) {
  return double(std::count_if(b.begin(), b.end(), [t](double s) { return s <= t; })) / double(b.size());
}
inline double fa_at(const Scores& s, double t) {
  return double(std::count_if(s.begin(), s.end(), [t](double x) { return x > t; })) / double(s.size());
}

inline std::vector<double> candidate_thresholds(const Scores& b, const Scores& s) {
  std::vector<double> t{-std::numeric_limits<double>::infinity()};
  t.insert(t.end(), b.begin(), b.end());
  t.insert(t.end(), s.begin(), s.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

// Exhaustive sweep: first threshold where miss >= false alarm, interpolated
// against the previous one.
inline double brute_eer(const Scores& b, const Scores& s) {
  const auto ts = candidate_thresholds(b, s);
  double pm = 0, pf = 1;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double m = miss_at(b, ts[i]), f = fa_at(s, ts[i]);
    if (m >= f) {
      if (m == f || i == 0) return m;
      const double a = (pf - pm) / ((m - pm) - (f - pf));
      return pm + a * (m - pm);
    }
    pm = m;
    pf = f;
  }
  return pm;
}

// Normalized tandem cost from the evaluation-plan expressions: CM miss and
// false alarm rates enter linearly with coefficients built from priors,
// costs and ASV errors; minimized over every candidate threshold.
inline double reference_tdcf(const Scores& b, const Scores& s, const eval::TdcfParams& p,
                             const eval::AsvErrors& a) {
  double c0 = 0, c1, c2, norm;
  if (p.variant == eval::TdcfVariant::asvspoof2019) {
    c1 = p.p_target * p.c_miss_cm - p.p_target * p.c_miss_asv * a.p_miss -
         p.p_nontarget * p.c_fa_asv * a.p_fa;
    c2 = p.c_fa_cm * p.p_spoof * (1 - a.p_miss_spoof);
    norm = std::min(c1, c2);
  } else {
    c0 = p.p_target * p.c_miss_asv * a.p_miss + p.p_nontarget * p.c_fa_asv * a.p_fa;
    c1 = p.p_target * p.c_miss_asv - c0;
    c2 = p.c_fa_cm * p.p_spoof * (1 - a.p_miss_spoof);
    norm = c0 + std::min(c1, c2);
  }
  double best = std::numeric_limits<double>::infinity();
  for (double t : candidate_thresholds(b, s))
    best = std::min(best, (c0 + c1 * miss_at(b, t) + c2 * fa_at(s, t)) / norm);
  return best;
}

// A-law reconstruction straight from the companding law: sign bit set means
// positive; segment e and mantissa m give (2m + 1) half-steps in segment 0
// and (2m + 33) << (e - 1) otherwise, on a 13-bit scale.
inline int alaw_law_decode(int code) {
  const int a = code ^ 0x55;
  const int e = (a >> 4) & 7, m = a & 15;
  const int mag13 = e == 0 ? 2 * m + 1 : (2 * m + 33) << (e - 1);
  return (a & 0x80 ? 1 : -1) * mag13 * 8;
}

// Frequency of the strongest component between lo and hi Hz: Hann-windowed
// DTFT magnitude on a 0.25 Hz grid over the middle half of the signal.
inline double peak_hz(const std::vector<double>& x, double lo, double hi, double rate = 16000) {
  const std::size_t a = x.size() / 4, n = x.size() / 2;
  double best = 0, best_f = lo;
  for (double f = lo; f <= hi; f += 0.25) {
    const std::complex<double> step = std::polar(1.0, -2 * std::numbers::pi * f / rate);
    std::complex<double> rot(1, 0), acc(0, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double win = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * double(i) / double(n));
      acc += win * x[a + i] * rot;
      rot *= step;
    }
    if (std::abs(acc) > best) {
      best = std::abs(acc);
      best_f = f;
    }
  }
  return best_f;
}

// Reverberation time from the backward-integrated energy decay of h[1:]:
// three times the time to fall 20 dB.
inline double schroeder_t60(const std::vector<double>& h, double rate = 16000) {
  std::vector<double> edc(h.size(), 0.0);
  double acc = 0;
  for (std::size_t i = h.size(); i-- > 1;) edc[i] = (acc += h[i] * h[i]);
  for (std::size_t i = 1; i < h.size(); ++i)
    if (10 * std::log10(edc[i] / edc[1]) < -20) return 3.0 * double(i) / rate;
  return 3.0 * double(h.size()) / rate;
}

}  // namespace protospoof::oracle
