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

#include <filesystem>
#include <random>
#include <string>

#include "protospoof/core/graph.hpp"
#include "protospoof/core/ops.hpp"
#include "protospoof/core/tensor.hpp"

namespace protospoof::testing {

inline Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1,
                                    double hi = 1) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
  return t;
}

// Random values bounded away from zero, for ops with a kink at 0.
inline Tensor<double> away_from_zero(Shape shape, std::mt19937_64& rng) {
  Tensor<double> t = random_tensor(std::move(shape), rng, 0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (std::size_t i = 0; i < t.size(); ++i)
    if (sign(rng)) t[i] = -t[i];
  return t;
}

// Reduces any output to a scalar with fixed random weights, so every output
// element's gradient is exercised.
inline Var<double> probe(Var<double> out, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  Tensor<double> w = random_tensor(out.shape(), rng);
  return ops::sum_all(ops::mul(out, out.graph().constant(std::move(w))));
}

// Fresh scratch directory under the system temp dir.
inline std::string scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("protospoof_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace protospoof::testing
