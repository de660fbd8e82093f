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
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "protospoof/core/error.hpp"
#include "protospoof/eval/eer.hpp"
#include "protospoof/eval/scores.hpp"

namespace protospoof::eval {

enum class TdcfVariant { asvspoof2019, asvspoof2021 };

NLOHMANN_JSON_SERIALIZE_ENUM(TdcfVariant, {{TdcfVariant::asvspoof2019, "asvspoof2019"},
                                           {TdcfVariant::asvspoof2021, "asvspoof2021"}})

/// Priors and costs of the tandem (ASV + CM) system. The 2021 variant reads
/// c_miss_asv / c_fa_asv as its Cmiss / Cfa and c_fa_cm as Cfa_spoof.
struct TdcfParams {
  TdcfVariant variant = TdcfVariant::asvspoof2019;
  double p_target = 0.95 * 0.99;
  double p_nontarget = 0.95 * 0.01;
  double p_spoof = 0.05;
  double c_miss_asv = 1;
  double c_fa_asv = 10;
  double c_miss_cm = 1;
  double c_fa_cm = 10;
  // ASV operating errors used when no ASV score file is given.
  double asv_p_miss = 0;
  double asv_p_fa = 0;
  double asv_p_miss_spoof = 0;

  void validate() const {
    const double sum = p_target + p_nontarget + p_spoof;
    if (std::abs(sum - 1.0) > 1e-9)
      throw ConfigError("tdcf priors must sum to 1 (got " + std::to_string(sum) + ")");
    for (double p : {p_target, p_nontarget, p_spoof})
      if (p < 0) throw ConfigError("tdcf priors must be non-negative");
    for (double c : {c_miss_asv, c_fa_asv, c_miss_cm, c_fa_cm})
      if (!(c > 0)) throw ConfigError("tdcf costs must be positive");
    for (double e : {asv_p_miss, asv_p_fa, asv_p_miss_spoof})
      if (!(e >= 0 && e <= 1)) throw ConfigError("tdcf ASV error rates must lie in [0, 1]");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TdcfParams, variant, p_target, p_nontarget,
                                                p_spoof, c_miss_asv, c_fa_asv, c_miss_cm, c_fa_cm,
                                                asv_p_miss, asv_p_fa, asv_p_miss_spoof)

/// Fixed ASV operating errors.
struct AsvErrors {
  double p_miss = 0;        // targets rejected
  double p_fa = 0;          // nontargets accepted
  double p_miss_spoof = 0;  // spoofs rejected by the ASV
};

inline AsvErrors fixed_asv_errors(const TdcfParams& p) {
  return {p.asv_p_miss, p.asv_p_fa, p.asv_p_miss_spoof};
}

/// ASV errors at the ASV's own EER threshold; scores at or below the
/// threshold are rejected, as for the CM operating points.
inline AsvErrors asv_errors_at_eer(const AsvScores& asv) {
  if (asv.target.empty() || asv.nontarget.empty() || asv.spoof.empty())
    throw DataError("ASV scores need target, nontarget and spoof trials");
  const double thr = compute_eer(asv.target, asv.nontarget).threshold;
  auto frac = [](const std::vector<double>& v, auto pred) {
    return double(std::count_if(v.begin(), v.end(), pred)) / double(v.size());
  };
  AsvErrors e;
  e.p_miss = frac(asv.target, [&](double s) { return s <= thr; });
  e.p_fa = frac(asv.nontarget, [&](double s) { return s > thr; });
  e.p_miss_spoof = frac(asv.spoof, [&](double s) { return s <= thr; });
  return e;
}

/// Coefficients of the normalized cost  offset + c_miss * Pmiss_cm + c_fa * Pfa_cm.
struct TdcfCurve {
  double offset = 0;
  double c_miss = 0;
  double c_fa = 0;
  double norm = 0;
  bool normalized = true;

  double operator()(double p_miss_cm, double p_fa_cm) const {
    return (offset + c_miss * p_miss_cm + c_fa * p_fa_cm) / norm;
  }
};

inline TdcfCurve tdcf_curve(const TdcfParams& p, const AsvErrors& asv) {
  p.validate();
  TdcfCurve c;
  if (p.variant == TdcfVariant::asvspoof2019) {
    c.c_miss = p.p_target * (p.c_miss_cm - p.c_miss_asv * asv.p_miss) -
               p.p_nontarget * p.c_fa_asv * asv.p_fa;
    c.c_fa = p.c_fa_cm * p.p_spoof * (1 - asv.p_miss_spoof);
    if (c.c_miss < 0 || c.c_fa < 0)
      throw ConfigError("tdcf: negative cost coefficient; ASV errors or costs are inconsistent");
    c.norm = std::min(c.c_miss, c.c_fa);
  } else {
    c.offset = p.p_target * p.c_miss_asv * asv.p_miss + p.p_nontarget * p.c_fa_asv * asv.p_fa;
    c.c_miss = p.p_target * p.c_miss_asv - c.offset;
    c.c_fa = p.p_spoof * p.c_fa_cm * (1 - asv.p_miss_spoof);
    if (c.c_miss < 0 || c.c_fa < 0)
      throw ConfigError("tdcf: negative cost coefficient; ASV errors or costs are inconsistent");
    c.norm = c.offset + std::min(c.c_miss, c.c_fa);
  }
  // Zero normalizer (e.g. zero spoof prior): report the unnormalized cost.
  if (!(c.norm > 0)) {
    c.norm = 1;
    c.normalized = false;
  }
  return c;
}

struct TdcfResult {
  double min_tdcf;
  double threshold;
};

/// Minimum normalized tandem cost over all CM thresholds.
inline TdcfResult min_tdcf(const std::vector<double>& bonafide, const std::vector<double>& spoof,
                           const TdcfParams& params, const AsvErrors& asv) {
  const TdcfCurve curve = tdcf_curve(params, asv);
  TdcfResult best{std::numeric_limits<double>::infinity(), 0};
  for (const auto& pt : operating_points(bonafide, spoof)) {
    const double v = curve(pt.miss, pt.false_alarm);
    if (v < best.min_tdcf) best = {v, pt.threshold};
  }
  return best;
}

}  // namespace protospoof::eval
