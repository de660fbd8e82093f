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
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "protospoof/core/error.hpp"
#include "protospoof/core/graph.hpp"
#include "protospoof/core/ops.hpp"
#include "protospoof/core/parameter.hpp"
#include "protospoof/model/layers.hpp"

namespace protospoof::loss {

enum class LossKind { prototypical, softmax, am_softmax, oc_softmax, contrastive };

NLOHMANN_JSON_SERIALIZE_ENUM(LossKind, {{LossKind::prototypical, "prototypical"},
                                        {LossKind::softmax, "softmax"},
                                        {LossKind::am_softmax, "am_softmax"},
                                        {LossKind::oc_softmax, "oc_softmax"},
                                        {LossKind::contrastive, "contrastive"}})

struct LossConfig {
  LossKind kind = LossKind::prototypical;
  double am_scale = 30.0;
  double am_margin = 0.2;
  double oc_alpha = 20.0;
  double oc_margin_bonafide = 0.9;
  double oc_margin_spoof = 0.2;
  double contrastive_margin = 1.0;

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("loss: " + m); };
    if (!(am_scale > 0) || !(oc_alpha > 0)) fail("scales must be positive");
    for (double m : {am_margin, oc_margin_bonafide, oc_margin_spoof})
      if (!(m >= 0 && m <= 1)) fail("cosine margins must be in [0, 1]");
    if (!(contrastive_margin > 0)) fail("contrastive_margin must be positive");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LossConfig, kind, am_scale, am_margin, oc_alpha,
                                                oc_margin_bonafide, oc_margin_spoof,
                                                contrastive_margin)

// Class indices used throughout: 0 = bonafide, 1 = spoof.

/// Prototype per class: the mean of that class's rows of `embeddings`.
template <class T>
Var<T> compute_prototypes(Var<T> embeddings, const std::vector<std::vector<std::size_t>>& groups) {
  return ops::group_mean_rows(embeddings, groups);
}

/// log p(k | x) = log softmax_k(-||f(x) - p_k||^2), one row per query.
template <class T>
Var<T> protonet_log_posterior(Var<T> queries, Var<T> prototypes) {
  return ops::log_softmax_rows(ops::scale(ops::sq_dist(queries, prototypes), T(-1)));
}

template <class T>
Var<T> protonet_posterior(Var<T> queries, Var<T> prototypes) {
  return ops::softmax_rows(ops::scale(ops::sq_dist(queries, prototypes), T(-1)));
}

/// Negative log posterior of the true class, summed over queries.
template <class T>
Var<T> prototypical_loss(Var<T> queries, Var<T> prototypes, const std::vector<std::size_t>& labels) {
  return ops::scale(ops::pick_sum(protonet_log_posterior(queries, prototypes), labels), T(-1));
}

/// Mean cross-entropy of raw logits.
template <class T>
Var<T> softmax_ce(Var<T> logits, const std::vector<std::size_t>& labels) {
  const T n = T(labels.size());
  return ops::scale(ops::pick_sum(ops::log_softmax_rows(logits), labels), T(-1) / n);
}

/// Additive-margin softmax: cross-entropy over s * (cos - m [true class]),
/// with embeddings and class weight rows L2-normalized.
template <class T>
Var<T> am_softmax(Var<T> embeddings, Var<T> class_weights, const std::vector<std::size_t>& labels,
                  T s, T m) {
  Var<T> cos = ops::matmul_nt(ops::l2_normalize_rows(embeddings),
                              ops::l2_normalize_rows(class_weights));
  Tensor<T> a(cos.shape(), s), b(cos.shape(), T(0));
  const std::size_t k = cos.shape()[1];
  for (std::size_t i = 0; i < labels.size(); ++i) b[i * k + labels[i]] = -s * m;
  return softmax_ce(ops::affine_elementwise(cos, a, b), labels);
}

/// One-class softmax: bonafide rows pay softplus(alpha (m0 - cos)), spoof
/// rows softplus(alpha (cos - m1)); mean over the batch.
template <class T>
Var<T> oc_softmax(Var<T> embeddings, Var<T> direction, const std::vector<std::size_t>& labels,
                  T alpha, T m0, T m1) {
  Var<T> cos = ops::matmul_nt(ops::l2_normalize_rows(embeddings), ops::l2_normalize_rows(direction));
  Tensor<T> a(cos.shape()), b(cos.shape());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool bona = labels[i] == 0;
    a[i] = bona ? -alpha : alpha;
    b[i] = bona ? alpha * m0 : -alpha * m1;
  }
  return ops::mean_all(ops::softplus(ops::affine_elementwise(cos, a, b)));
}

/// Mean over all in-batch pairs i < j of d^2 (same class) or
/// max(0, margin - d)^2 (different classes).
template <class T>
Var<T> contrastive_loss(Var<T> embeddings, const std::vector<std::size_t>& labels, T margin) {
  const std::size_t n = labels.size();
  if (n < 2) throw ConfigError("contrastive loss needs at least one pair");
  Var<T> d2 = ops::sq_dist(embeddings, embeddings);
  Tensor<T> same({n, n}), diff({n, n}), zero({n, n}), neg({n, n}, T(-1)), m({n, n}, margin);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) (labels[i] == labels[j] ? same : diff)[i * n + j] = 1;
  Var<T> pull = ops::affine_elementwise(d2, same, zero);
  Var<T> hinge = ops::relu(ops::affine_elementwise(ops::safe_sqrt(d2), neg, m));
  Var<T> push = ops::affine_elementwise(ops::square(hinge), diff, zero);
  return ops::scale(ops::sum_all(ops::add(pull, push)), T(2) / T(n * (n - 1)));
}

/// Trainable parameters that some losses attach on top of the embedding:
/// an affine 2-way head (softmax), class weight rows (AM-softmax) or a
/// target direction (OC-softmax).
template <class T>
class LossHead {
 public:
  LossHead(const LossConfig& cfg, std::size_t dim, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    if (cfg_.kind == LossKind::softmax) linear_ = model::Linear<T>(params_, "head.affine", dim, 2, rng);
    if (cfg_.kind == LossKind::am_softmax)
      weights_ = &params_.add("head.class_weights", model::normal_tensor<T>({2, dim}, 1.0, rng));
    if (cfg_.kind == LossKind::oc_softmax)
      weights_ = &params_.add("head.direction", model::normal_tensor<T>({1, dim}, 1.0, rng));
  }

  LossHead(const LossHead&) = delete;
  LossHead& operator=(const LossHead&) = delete;

  ParameterStore<T>& parameters() { return params_; }
  const LossConfig& config() const { return cfg_; }

  /// Batch loss for the non-episodic objectives.
  Var<T> operator()(Graph<T>& g, Var<T> embeddings, const std::vector<std::size_t>& labels) const {
    typename Graph<T>::Scope scope(g, "loss");
    switch (cfg_.kind) {
      case LossKind::softmax:
        return softmax_ce(linear_(g, embeddings), labels);
      case LossKind::am_softmax:
        return am_softmax(embeddings, g.parameter(*weights_), labels, T(cfg_.am_scale),
                          T(cfg_.am_margin));
      case LossKind::oc_softmax:
        return oc_softmax(embeddings, g.parameter(*weights_), labels, T(cfg_.oc_alpha),
                          T(cfg_.oc_margin_bonafide), T(cfg_.oc_margin_spoof));
      case LossKind::contrastive:
        return contrastive_loss(embeddings, labels, T(cfg_.contrastive_margin));
      case LossKind::prototypical:
        break;
    }
    throw ConfigError("prototypical loss is computed per episode, not per batch");
  }

 private:
  LossConfig cfg_;
  ParameterStore<T> params_;
  model::Linear<T> linear_;
  Parameter<T>* weights_ = nullptr;
};

}  // namespace protospoof::loss
