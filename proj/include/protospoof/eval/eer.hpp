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
#include <vector>

#include "protospoof/core/error.hpp"

namespace protospoof::eval {

/// One detector operating point: everything scoring <= threshold is rejected.
struct OperatingPoint {
  double threshold;
  double miss;         // bonafide rejected
  double false_alarm;  // spoof accepted
};

/// All distinct operating points, from "accept everything" (threshold -inf)
/// through each unique score in increasing order.
inline std::vector<OperatingPoint> operating_points(std::vector<double> bonafide,
                                                    std::vector<double> spoof) {
  if (bonafide.empty() || spoof.empty())
    throw DataError("detection metrics need both bonafide and spoof scores");
  std::sort(bonafide.begin(), bonafide.end());
  std::sort(spoof.begin(), spoof.end());
  std::vector<double> all(bonafide);
  all.insert(all.end(), spoof.begin(), spoof.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  const double nb = double(bonafide.size()), ns = double(spoof.size());
  std::vector<OperatingPoint> pts;
  pts.reserve(all.size() + 1);
  pts.push_back({-std::numeric_limits<double>::infinity(), 0.0, 1.0});
  std::size_t ib = 0, is = 0;
  for (double t : all) {
    while (ib < bonafide.size() && bonafide[ib] <= t) ++ib;
    while (is < spoof.size() && spoof[is] <= t) ++is;
    pts.push_back({t, double(ib) / nb, double(spoof.size() - is) / ns});
  }
  return pts;
}

struct EerResult {
  double eer;
  double threshold;
};

/// Equal error rate by linear interpolation between the two operating points
/// that bracket miss == false alarm.
inline EerResult compute_eer(const std::vector<double>& bonafide, const std::vector<double>& spoof) {
  const auto pts = operating_points(bonafide, spoof);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    if (p.miss < p.false_alarm) continue;
    if (p.miss == p.false_alarm || i == 0) return {p.miss, p.threshold};
    const auto& q = pts[i - 1];
    const double lambda = (q.false_alarm - q.miss) /
                          ((p.miss - q.miss) + (q.false_alarm - p.false_alarm));
    const double eer = q.miss + lambda * (p.miss - q.miss);
    const double thr =
        std::isinf(q.threshold) ? p.threshold : q.threshold + lambda * (p.threshold - q.threshold);
    return {eer, thr};
  }
  // Unreachable: the last point always has miss 1, false alarm 0.
  return {pts.back().miss, pts.back().threshold};
}

}  // namespace protospoof::eval
