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
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "protospoof/core/error.hpp"
#include "protospoof/eval/scores.hpp"

namespace protospoof::eval {

/// Fused score = offset + sum_k weights[k] * score_k, a calibrated
/// log-likelihood ratio when trained by train_fusion().
struct FusionModel {
  std::vector<double> weights;
  double offset = 0;
  double prior = 0.5;
  int iterations = 0;
  double gradient_norm = 0;

  double apply(const std::vector<double>& x) const {
    double s = offset;
    for (std::size_t k = 0; k < weights.size(); ++k) s += weights[k] * x[k];
    return s;
  }
};

inline void to_json(nlohmann::json& j, const FusionModel& m) {
  j = {{"weights", m.weights}, {"offset", m.offset}, {"prior", m.prior},
       {"iterations", m.iterations}, {"gradient_norm", m.gradient_norm}};
}

struct FusionOptions {
  double prior = 0.5;
  double tolerance = 1e-8;
  int max_iterations = 200;
};

namespace fusion_detail {

inline double log1pexp(double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }
inline double sigmoid(double v) {
  return v >= 0 ? 1 / (1 + std::exp(-v)) : std::exp(v) / (1 + std::exp(v));
}

// Solves A x = b by Gaussian elimination with partial pivoting; A is small
// and symmetric positive semi-definite, so a tiny ridge keeps it regular.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n; ++i) a[i][i] += 1e-12 * (1 + std::abs(a[i][i]));
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    std::swap(a[c], a[p]);
    std::swap(b[c], b[p]);
    if (a[c][c] == 0) continue;
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = a[i][i] != 0 ? s / a[i][i] : 0.0;
  }
  return x;
}

}  // namespace fusion_detail

/// Prior-weighted linear logistic regression (the usual detection-score
/// fusion objective): minimizes
///   pi/Nt sum_t log(1 + e^-(s_t + logit pi)) + (1-pi)/Nn sum_n log(1 + e^(s_n + logit pi))
/// over weights and offset by damped Newton steps with backtracking.
/// `scores[k][i]` is system k on trial i; `target[i]` marks bonafide trials.
inline FusionModel train_fusion(const std::vector<std::vector<double>>& scores,
                                const std::vector<bool>& target, const FusionOptions& opt = {}) {
  using namespace fusion_detail;
  const std::size_t K = scores.size();
  if (K == 0) throw ConfigError("fusion needs at least one input system");
  const std::size_t N = target.size();
  for (const auto& s : scores)
    if (s.size() != N) throw DataError("fusion: score and label counts differ");
  const double nt = double(std::count(target.begin(), target.end(), true));
  const double nn = double(N) - nt;
  if (nt == 0 || nn == 0) throw DataError("fusion needs both bonafide and spoof dev trials");
  if (!(opt.prior > 0 && opt.prior < 1)) throw ConfigError("fusion prior must be in (0, 1)");

  const double logit = std::log(opt.prior / (1 - opt.prior));
  const std::size_t P = K + 1;
  std::vector<double> theta(P, 0.0);  // weights..., offset
  auto feature = [&](std::size_t i, std::size_t k) { return k < K ? scores[k][i] : 1.0; };
  auto objective = [&](const std::vector<double>& th) {
    double c = 0;
    for (std::size_t i = 0; i < N; ++i) {
      double s = th[K] + logit;
      for (std::size_t k = 0; k < K; ++k) s += th[k] * scores[k][i];
      c += target[i] ? opt.prior / nt * log1pexp(-s) : (1 - opt.prior) / nn * log1pexp(s);
    }
    return c;
  };

  FusionModel model;
  model.prior = opt.prior;
  double f = objective(theta);
  for (int it = 0; it < opt.max_iterations; ++it) {
    std::vector<double> g(P, 0.0);
    std::vector<std::vector<double>> h(P, std::vector<double>(P, 0.0));
    for (std::size_t i = 0; i < N; ++i) {
      double s = theta[K] + logit;
      for (std::size_t k = 0; k < K; ++k) s += theta[k] * scores[k][i];
      const double w = target[i] ? opt.prior / nt : (1 - opt.prior) / nn;
      const double p = sigmoid(s);
      const double r = target[i] ? p - 1 : p;  // d/ds of the trial's loss
      const double curv = p * (1 - p);
      for (std::size_t a = 0; a < P; ++a) {
        g[a] += w * r * feature(i, a);
        for (std::size_t b = 0; b <= a; ++b) h[a][b] += w * curv * feature(i, a) * feature(i, b);
      }
    }
    for (std::size_t a = 0; a < P; ++a)
      for (std::size_t b = 0; b < a; ++b) h[b][a] = h[a][b];
    double gnorm = 0;
    for (double v : g) gnorm += v * v;
    gnorm = std::sqrt(gnorm);
    model.iterations = it;
    model.gradient_norm = gnorm;
    if (gnorm < opt.tolerance) break;

    std::vector<double> neg(P);
    for (std::size_t a = 0; a < P; ++a) neg[a] = -g[a];
    std::vector<double> step = solve(h, neg);
    double slope = 0;
    for (std::size_t a = 0; a < P; ++a) slope += step[a] * g[a];
    if (!(slope < 0)) step = neg, slope = -gnorm * gnorm;  // fall back to steepest descent

    double t = 1.0;
    std::vector<double> trial(P);
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      for (std::size_t a = 0; a < P; ++a) trial[a] = theta[a] + t * step[a];
      const double ft = objective(trial);
      if (ft <= f + 1e-4 * t * slope) {
        theta = trial;
        f = ft;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  model.weights.assign(theta.begin(), theta.begin() + std::ptrdiff_t(K));
  model.offset = theta[K];
  return model;
}

/// Scores of several systems on a common trial list.
struct AlignedScores {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> scores;  // [system][trial]
};

/// Aligns systems on the first system's id order; any id missing from
/// another system is an error that lists the ids.
inline AlignedScores align_systems(const std::vector<ScoreList>& systems) {
  if (systems.empty()) throw ConfigError("no score files to align");
  AlignedScores out;
  for (const auto& r : systems[0]) out.ids.push_back(r.utt_id);
  for (std::size_t k = 0; k < systems.size(); ++k) {
    std::map<std::string, double> by_id;
    for (const auto& r : systems[k]) by_id[r.utt_id] = r.score;
    std::vector<double> col;
    std::vector<std::string> missing;
    for (const auto& id : out.ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) missing.push_back(id);
      else col.push_back(it->second);
    }
    if (!missing.empty() || by_id.size() != out.ids.size()) {
      std::string list;
      for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i)
        list += (i ? ", " : "") + missing[i];
      throw DataError("score file " + std::to_string(k + 1) + " does not match system 1's ids" +
                      (missing.empty() ? std::string(" (extra ids)") : "; missing: " + list));
    }
    out.scores.push_back(std::move(col));
  }
  return out;
}

inline ScoreList apply_fusion(const FusionModel& model, const std::vector<ScoreList>& systems) {
  if (systems.size() != model.weights.size())
    throw ConfigError("fusion model expects " + std::to_string(model.weights.size()) +
                      " systems, got " + std::to_string(systems.size()));
  const auto aligned = align_systems(systems);
  ScoreList out;
  std::vector<double> x(systems.size());
  for (std::size_t i = 0; i < aligned.ids.size(); ++i) {
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = aligned.scores[k][i];
    out.push_back({aligned.ids[i], model.apply(x)});
  }
  return out;
}

}  // namespace protospoof::eval
