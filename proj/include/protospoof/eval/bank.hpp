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
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "protospoof/core/error.hpp"

namespace protospoof::eval {

/// Class prototypes used for test-time scoring: the mean training embedding
/// of each class.
struct PrototypeBank {
  std::vector<double> bonafide;
  std::vector<double> spoof;
  std::string checkpoint;     // checkpoint the embeddings came from
  std::string training_hash;  // identifies the training list
  bool squared = true;        // distance convention used by cm_score

  std::size_t dim() const { return bonafide.size(); }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PrototypeBank, bonafide, spoof, checkpoint,
                                                training_hash, squared)

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

/// Per-class mean of `embeddings`; labels are 0 (bonafide) / 1 (spoof).
inline PrototypeBank bank_from_embeddings(const std::vector<std::vector<double>>& embeddings,
                                          const std::vector<std::size_t>& labels) {
  if (embeddings.empty() || embeddings.size() != labels.size())
    throw DataError("prototype bank needs one label per embedding");
  const std::size_t d = embeddings[0].size();
  std::vector<double> sum[2] = {std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].size() != d) throw DataError("embeddings differ in dimension");
    for (std::size_t c = 0; c < d; ++c) sum[labels[i]][c] += embeddings[i][c];
    ++count[labels[i]];
  }
  if (!count[0]) throw DataError("prototype bank: no bonafide training embeddings");
  if (!count[1]) throw DataError("prototype bank: no spoof training embeddings");
  PrototypeBank bank;
  for (int k = 0; k < 2; ++k)
    for (auto& v : sum[k]) v /= double(count[k]);
  bank.bonafide = std::move(sum[0]);
  bank.spoof = std::move(sum[1]);
  return bank;
}

/// d(e, p_spoof) - d(e, p_bonafide); positive leans bonafide. Squared
/// Euclidean by default, plain Euclidean when `squared` is false.
inline double cm_score(const std::vector<double>& e, const PrototypeBank& bank) {
  if (e.size() != bank.dim()) throw ConfigError("cm_score: embedding dimension mismatch");
  const double ds = squared_distance(e, bank.spoof), db = squared_distance(e, bank.bonafide);
  return bank.squared ? ds - db : std::sqrt(ds) - std::sqrt(db);
}

inline void save_bank(const std::string& path, const PrototypeBank& bank) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write prototype bank " + path);
  out << nlohmann::json(bank).dump(1) << '\n';
}

inline PrototypeBank load_bank(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open prototype bank " + path);
  PrototypeBank bank;
  try {
    bank = nlohmann::json::parse(in).get<PrototypeBank>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (bank.bonafide.empty() || bank.bonafide.size() != bank.spoof.size())
    throw DataError(path + ": malformed prototype bank");
  return bank;
}

}  // namespace protospoof::eval
