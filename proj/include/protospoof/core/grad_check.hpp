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
#include <functional>
#include <string>
#include <vector>

#include "protospoof/core/graph.hpp"

namespace protospoof {

struct GradCheckReport {
  double max_rel_error = 0;
  double max_abs_error = 0;
  std::size_t checked = 0;
  std::string worst;  // "<input>[<index>]"
};

/// Compares reverse-mode gradients of a scalar function against central
/// differences. `build` receives one Var per seed tensor and returns the
/// scalar output. Relative error is |a - n| / max(|a|, |n|, scale_floor);
/// the floor keeps near-zero components from dominating.
template <class T>
GradCheckReport grad_check(
    const std::function<Var<T>(Graph<T>&, const std::vector<Var<T>>&)>& build,
    std::vector<Tensor<T>> seeds, double h = 1e-5, double scale_floor = 1e-6) {
  auto evaluate = [&](const std::vector<Tensor<T>>& xs) {
    Graph<T> g(false);
    std::vector<Var<T>> vars;
    for (const auto& x : xs) vars.push_back(g.constant(x));
    return double(build(g, vars).value()[0]);
  };

  Graph<T> g;
  std::vector<Var<T>> vars;
  for (const auto& x : seeds) vars.push_back(g.input(x));
  Var<T> out = build(g, vars);
  g.backward(out);

  GradCheckReport report;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    const Tensor<T> analytic = g.grad(vars[k]);
    for (std::size_t i = 0; i < seeds[k].size(); ++i) {
      const T saved = seeds[k][i];
      seeds[k][i] = saved + T(h);
      const double up = evaluate(seeds);
      seeds[k][i] = saved - T(h);
      const double down = evaluate(seeds);
      seeds[k][i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[i];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), scale_floor});
      ++report.checked;
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = "input" + std::to_string(k) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

}  // namespace protospoof

namespace protospoof {

/// Same comparison with respect to model parameters. At most
/// `max_per_param` entries of each parameter are probed (evenly strided).
template <class T>
GradCheckReport grad_check_parameters(const std::vector<Parameter<T>*>& params,
                                      const std::function<Var<T>(Graph<T>&)>& build,
                                      double h = 1e-5, double scale_floor = 1e-6,
                                      std::size_t max_per_param = 64) {
  for (Parameter<T>* p : params) p->zero_grad();
  {
    Graph<T> g;
    g.backward(build(g));
  }
  GradCheckReport report;
  for (Parameter<T>* p : params) {
    const Tensor<T> analytic = p->grad;
    const std::size_t stride = std::max<std::size_t>(1, p->value.size() / max_per_param);
    for (std::size_t i = 0; i < p->value.size(); i += stride) {
      const T saved = p->value[i];
      p->value[i] = saved + T(h);
      double up, down;
      {
        Graph<T> g(false);
        up = double(build(g).value()[0]);
      }
      p->value[i] = saved - T(h);
      {
        Graph<T> g(false);
        down = double(build(g).value()[0]);
      }
      p->value[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[i];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), scale_floor});
      ++report.checked;
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = p->name + "[" + std::to_string(i) + "]";
      }
    }
    p->zero_grad();
  }
  return report;
}

}  // namespace protospoof
