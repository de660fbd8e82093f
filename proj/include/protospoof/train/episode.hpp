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

#include <random>
#include <string>
#include <vector>

#include "protospoof/core/error.hpp"

namespace protospoof::train {

inline const char* class_name(std::size_t k) { return k == 0 ? "bonafide" : "spoof"; }

/// Indices into a dataset, per class: supports then queries.
struct Episode {
  std::vector<std::vector<std::size_t>> support;  // [class][N_S]
  std::vector<std::vector<std::size_t>> query;    // [class][N_Q]

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& s : support) n += s.size();
    for (const auto& q : query) n += q.size();
    return n;
  }
};

/// Uniform draw of `n` distinct elements of `pool` (partial Fisher-Yates);
/// the drawn elements are removed from `pool`.
template <class Rng>
std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t>& pool, std::size_t n,
                                                  Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
    out.push_back(pool[i]);
  }
  pool.erase(pool.begin(), pool.begin() + std::ptrdiff_t(n));
  return out;
}

/// For each class: N_S supports drawn uniformly without replacement, then
/// N_Q queries from the rest of that class.
template <class Rng>
Episode sample_episode(const std::vector<std::vector<std::size_t>>& by_class, std::size_t n_support,
                       std::size_t n_query, Rng& rng) {
  Episode ep;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    if (by_class[k].size() < n_support + n_query)
      throw DataError(std::string("class ") + class_name(k) + " has " +
                      std::to_string(by_class[k].size()) + " utterances; an episode needs " +
                      std::to_string(n_support + n_query));
    std::vector<std::size_t> pool = by_class[k];
    ep.support.push_back(draw_without_replacement(pool, n_support, rng));
    ep.query.push_back(draw_without_replacement(pool, n_query, rng));
  }
  return ep;
}

}  // namespace protospoof::train
