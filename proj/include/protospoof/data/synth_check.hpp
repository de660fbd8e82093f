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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "protospoof/core/parallel.hpp"
#include "protospoof/data/synth.hpp"
#include "protospoof/dsp/frontend.hpp"

namespace protospoof::data {

struct SeparabilityResult {
  std::string attack_id;
  double train_accuracy = 0;
  double heldout_accuracy = 0;
};

/// Generator self-test: for each spoof profile, a linear discriminant on
/// per-utterance mean LFCC vectors separates bonafide items from that
/// profile's items. Items alternate between a fitting half and a held-out
/// half. Nothing is written to disk.
inline std::vector<SeparabilityResult> separability_check(const SynthSpec& spec,
                                                          const SynthProfiles& profiles,
                                                          std::size_t per_class = 100,
                                                          int jobs = 1,
                                                          double shrinkage = 0.1) {
  spec.validate();
  const dsp::FrontendConfig fc;
  auto mean_lfcc = [&](const dsp::Waveform& w) {
    const auto f = dsp::lfcc(w, fc);
    std::vector<double> m(f.cols, 0.0);
    for (std::size_t t = 0; t < f.rows; ++t)
      for (std::size_t c = 0; c < f.cols; ++c) m[c] += f.at(t, c) / double(f.rows);
    return m;
  };
  auto features = [&](const SpoofProfile* profile, const std::string& tag) {
    std::vector<std::vector<double>> out(per_class);
    parallel_for(per_class, jobs, [&](std::size_t i) {
      const auto seed = derive_seed(spec.seed, "separability", tag, std::to_string(i));
      out[i] = mean_lfcc(synthesize(spec, profiles.bonafide, profile, i % spec.n_speakers, seed));
    });
    return out;
  };
  const auto bona = features(nullptr, "-");

  std::vector<SeparabilityResult> results;
  for (const auto& profile : profiles.spoof) {
    const auto spoof = features(&profile, profile.attack_id);
    std::vector<std::vector<double>> rows;
    std::vector<bool> target;
    for (std::size_t i = 0; i < per_class; ++i) {
      rows.push_back(bona[i]);
      target.push_back(true);
      rows.push_back(spoof[i]);
      target.push_back(false);
    }
    const std::size_t D = rows[0].size();
    // Standardize with statistics of the fitting half.
    std::vector<double> mu(D, 0.0), sd(D, 0.0);
    std::size_t n_fit = 0;
    for (std::size_t i = 0; i < rows.size(); i += 4)
      for (std::size_t j = i; j < std::min(rows.size(), i + 2); ++j, ++n_fit)
        for (std::size_t d = 0; d < D; ++d) mu[d] += rows[j][d];
    for (auto& v : mu) v /= double(n_fit);
    for (std::size_t i = 0; i < rows.size(); i += 4)
      for (std::size_t j = i; j < std::min(rows.size(), i + 2); ++j)
        for (std::size_t d = 0; d < D; ++d) sd[d] += (rows[j][d] - mu[d]) * (rows[j][d] - mu[d]);
    for (auto& v : sd) v = std::sqrt(v / double(n_fit)) + 1e-9;

    // Shrinkage LDA on standardized features, fitted on the pairs with even
    // pair index; odd pairs are held out.
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(Eigen::Index(D), Eigen::Index(D));
    Eigen::VectorXd mean_b = Eigen::VectorXd::Zero(Eigen::Index(D)), mean_s = mean_b;
    std::vector<Eigen::VectorXd> z(rows.size(), Eigen::VectorXd(Eigen::Index(D)));
    double nb = 0, ns = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t d = 0; d < D; ++d) z[i][Eigen::Index(d)] = (rows[i][d] - mu[d]) / sd[d];
      if ((i / 2) % 2 != 0) continue;
      if (target[i]) mean_b += z[i], ++nb;
      else mean_s += z[i], ++ns;
    }
    mean_b /= nb;
    mean_s /= ns;
    for (std::size_t i = 0; i < rows.size(); i += 4)
      for (std::size_t j = i; j < std::min(rows.size(), i + 2); ++j) {
        const Eigen::VectorXd c = z[j] - (target[j] ? mean_b : mean_s);
        cov += c * c.transpose();
      }
    cov /= double(n_fit);
    cov += shrinkage * Eigen::MatrixXd::Identity(Eigen::Index(D), Eigen::Index(D));
    const Eigen::VectorXd w = cov.ldlt().solve(mean_b - mean_s);
    const double bias = -0.5 * w.dot(mean_b + mean_s);
    std::size_t ok_fit = 0, n_f = 0, ok_held = 0, n_h = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const bool correct = (w.dot(z[i]) + bias > 0) == target[i];
      if ((i / 2) % 2 == 0) ok_fit += correct, ++n_f;
      else ok_held += correct, ++n_h;
    }
    results.push_back({profile.attack_id, double(ok_fit) / double(n_f), double(ok_held) / double(n_h)});
  }
  return results;
}

}  // namespace protospoof::data
