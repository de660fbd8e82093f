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
#include <random>
#include <string>
#include <vector>

#include "protospoof/core/random.hpp"
#include "protospoof/core/tensor.hpp"
#include "protospoof/dsp/frontend.hpp"
#include "protospoof/model/embedding_net.hpp"

namespace protospoof::train {

/// Utterance features held in memory with their labels (0 bonafide, 1 spoof).
struct FeatureSet {
  std::vector<std::string> ids;
  std::vector<std::string> attacks;
  std::vector<std::size_t> labels;
  std::vector<dsp::FeatureMatrix> features;

  std::size_t size() const { return ids.size(); }

  std::vector<std::vector<std::size_t>> by_class() const {
    std::vector<std::vector<std::size_t>> out(2);
    for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
    return out;
  }

  void add(std::string id, std::string attack, std::size_t label, dsp::FeatureMatrix f) {
    ids.push_back(std::move(id));
    attacks.push_back(std::move(attack));
    labels.push_back(label);
    features.push_back(std::move(f));
  }
};

/// [B, 1, frames, D] batch; each utterance is brought to `frames` rows with
/// fix_length using `rng`.
template <class T, class Rng>
Tensor<T> make_batch(const FeatureSet& set, const std::vector<std::size_t>& idx, std::size_t frames,
                     Rng& rng) {
  const std::size_t D = set.features.at(idx.at(0)).cols;
  Tensor<T> batch({idx.size(), 1, frames, D});
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const auto& f = set.features.at(idx[b]);
    if (f.cols != D) throw DataError("utterance " + set.ids[idx[b]] + " has a different feature width");
    const auto fixed = dsp::fix_length(f, frames, rng);
    T* dst = batch.data() + b * frames * D;
    for (std::size_t i = 0; i < fixed.data.size(); ++i) dst[i] = static_cast<T>(fixed.data[i]);
  }
  return batch;
}

/// Like make_batch, but each utterance's crop comes from its own stream keyed
/// by (seed, id), so evaluation does not depend on batch composition.
template <class T>
Tensor<T> make_eval_batch(const FeatureSet& set, const std::vector<std::size_t>& idx,
                          std::size_t frames, std::uint64_t seed) {
  const std::size_t D = set.features.at(idx.at(0)).cols;
  Tensor<T> batch({idx.size(), 1, frames, D});
  for (std::size_t b = 0; b < idx.size(); ++b) {
    std::mt19937_64 rng(derive_seed(seed, "crop", set.ids[idx[b]]));
    std::vector<std::size_t> one{idx[b]};
    const Tensor<T> single = make_batch<T>(set, one, frames, rng);
    std::copy(single.data(), single.data() + single.size(), batch.data() + b * frames * D);
  }
  return batch;
}

/// Eval-mode embeddings of every utterance, in set order.
template <class T>
std::vector<std::vector<double>> embed_all(model::EmbeddingNet<T>& net, const FeatureSet& set,
                                           std::size_t frames, std::uint64_t seed,
                                           std::size_t batch_size = 16) {
  std::vector<std::vector<double>> out;
  out.reserve(set.size());
  for (std::size_t start = 0; start < set.size(); start += batch_size) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(set.size(), start + batch_size); ++i) idx.push_back(i);
    const Tensor<T> e = net.embed(make_eval_batch<T>(set, idx, frames, seed));
    const std::size_t M = e.shape()[1];
    for (std::size_t b = 0; b < idx.size(); ++b)
      out.emplace_back(e.data() + b * M, e.data() + (b + 1) * M);
  }
  return out;
}

}  // namespace protospoof::train
