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
#include <cstdint>
#include <string>
#include <vector>

#include "protospoof/core/parameter.hpp"

namespace protospoof {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment accumulators for one optimizer. Accumulators are bound to
/// parameters by position in the list handed to adam_step, so the same list
/// (same order) must be passed on every call.
template <class T>
struct AdamState {
  AdamOptions options;
  std::uint64_t step = 0;
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;
};

/// One bias-corrected Adam update over `params`; gradients are zeroed
/// afterwards. A non-finite gradient aborts before any parameter changes.
template <class T>
void adam_step(const std::vector<Parameter<T>*>& params, AdamState<T>& state) {
  for (const Parameter<T>* p : params) {
    if (!p->grad.all_finite()) throw NumericError("non-finite gradient for parameter " + p->name);
    if (p->grad.shape() != p->value.shape())
      throw ConfigError("gradient shape mismatch for parameter " + p->name);
  }
  if (state.first_moment.empty()) {
    for (const Parameter<T>* p : params) {
      state.first_moment.emplace_back(p->value.shape());
      state.second_moment.emplace_back(p->value.shape());
    }
  }
  if (state.first_moment.size() != params.size())
    throw ConfigError("Adam state was built for a different parameter list");

  ++state.step;
  const AdamOptions& o = state.options;
  const double c1 = 1.0 - std::pow(o.beta1, double(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, double(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<T>& p = *params[k];
    Tensor<T>& m = state.first_moment[k];
    Tensor<T>& v = state.second_moment[k];
    if (m.shape() != p.value.shape())
      throw ConfigError("Adam moment shape mismatch for parameter " + p.name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      const double mi = o.beta1 * double(m[i]) + (1.0 - o.beta1) * g;
      const double vi = o.beta2 * double(v[i]) + (1.0 - o.beta2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double update = o.lr * (mi / c1) / (std::sqrt(vi / c2) + o.eps);
      p.value[i] = static_cast<T>(double(p.value[i]) - update);
    }
    p.zero_grad();
  }
}

}  // namespace protospoof
