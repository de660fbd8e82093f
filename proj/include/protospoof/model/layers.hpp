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
#include <optional>
#include <random>
#include <string>

#include "protospoof/core/ops.hpp"
#include "protospoof/core/parameter.hpp"

namespace protospoof::model {

template <class T>
Tensor<T> normal_tensor(Shape shape, double stddev, std::mt19937_64& rng) {
  Tensor<T> t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(dist(rng));
  return t;
}

template <class T>
struct Conv {
  Parameter<T>* weight = nullptr;
  std::size_t stride = 1, pad = 0;

  Conv() = default;
  // Kaiming-normal (fan-in, ReLU gain).
  Conv(ParameterStore<T>& ps, const std::string& name, std::size_t in, std::size_t out,
       std::size_t k, std::size_t s, std::mt19937_64& rng)
      : stride(s), pad(k / 2) {
    const double std = std::sqrt(2.0 / double(in * k * k));
    weight = &ps.add(name + ".weight", normal_tensor<T>({out, in, k, k}, std, rng));
  }

  Var<T> operator()(Graph<T>& g, Var<T> x) const {
    typename Graph<T>::Scope scope(g, weight->name.substr(0, weight->name.rfind('.')));
    return ops::conv2d(x, g.parameter(*weight), stride, pad);
  }
};

template <class T>
struct BatchNorm {
  Parameter<T>* gamma = nullptr;
  Parameter<T>* beta = nullptr;
  Parameter<T>* running_mean = nullptr;
  Parameter<T>* running_var = nullptr;

  BatchNorm() = default;
  BatchNorm(ParameterStore<T>& ps, const std::string& name, std::size_t channels) {
    gamma = &ps.add(name + ".gamma", Tensor<T>({channels}, T(1)));
    beta = &ps.add(name + ".beta", Tensor<T>({channels}, T(0)));
    running_mean = &ps.add(name + ".running_mean", Tensor<T>({channels}, T(0)), false);
    running_var = &ps.add(name + ".running_var", Tensor<T>({channels}, T(1)), false);
  }

  Var<T> operator()(Graph<T>& g, Var<T> x, bool train) const {
    typename Graph<T>::Scope scope(g, gamma->name.substr(0, gamma->name.rfind('.')));
    return ops::batchnorm(x, g.parameter(*gamma), g.parameter(*beta), *running_mean,
                          *running_var, train);
  }
};

template <class T>
struct Linear {
  Parameter<T>* weight = nullptr;  // [in, out]
  Parameter<T>* bias = nullptr;

  Linear() = default;
  Linear(ParameterStore<T>& ps, const std::string& name, std::size_t in, std::size_t out,
         std::mt19937_64& rng) {
    weight = &ps.add(name + ".weight", normal_tensor<T>({in, out}, 1.0 / std::sqrt(double(in)), rng));
    bias = &ps.add(name + ".bias", Tensor<T>({out}, T(0)));
  }

  Var<T> operator()(Graph<T>& g, Var<T> x) const {
    typename Graph<T>::Scope scope(g, weight->name.substr(0, weight->name.rfind('.')));
    return ops::affine(x, g.parameter(*weight), g.parameter(*bias));
  }
};

/// Squeeze-and-excitation: per-channel gates in (0, 1) computed from the
/// channel means through a C -> C/r -> C bottleneck.
template <class T>
struct SqueezeExcite {
  Linear<T> reduce, expand;

  SqueezeExcite() = default;
  SqueezeExcite(ParameterStore<T>& ps, const std::string& name, std::size_t channels,
                std::size_t reduction, std::mt19937_64& rng)
      : reduce(ps, name + ".fc1", channels, channels / reduction, rng),
        expand(ps, name + ".fc2", channels / reduction, channels, rng) {}

  Var<T> operator()(Graph<T>& g, Var<T> x) const {
    Var<T> squeezed = ops::mean_trailing(x, 2);
    Var<T> gates = ops::sigmoid(expand(g, ops::relu(reduce(g, squeezed))));
    return ops::channel_scale(x, gates);
  }
};

/// Projection shortcut used when a block changes shape.
template <class T>
struct Shortcut {
  Conv<T> conv;
  BatchNorm<T> bn;

  Shortcut(ParameterStore<T>& ps, const std::string& name, std::size_t in, std::size_t out,
           std::size_t stride, std::mt19937_64& rng)
      : conv(ps, name + ".conv", in, out, 1, stride, rng), bn(ps, name + ".bn", out) {}

  Var<T> operator()(Graph<T>& g, Var<T> x, bool train) const { return bn(g, conv(g, x), train); }
};

template <class T>
struct BasicBlock {
  Conv<T> conv1, conv2;
  BatchNorm<T> bn1, bn2;
  std::optional<SqueezeExcite<T>> se;
  std::optional<Shortcut<T>> shortcut;

  BasicBlock(ParameterStore<T>& ps, const std::string& name, std::size_t in, std::size_t out,
             std::size_t stride, std::size_t se_reduction, std::mt19937_64& rng)
      : conv1(ps, name + ".conv1", in, out, 3, stride, rng),
        conv2(ps, name + ".conv2", out, out, 3, 1, rng),
        bn1(ps, name + ".bn1", out),
        bn2(ps, name + ".bn2", out) {
    if (se_reduction > 0) se.emplace(ps, name + ".se", out, se_reduction, rng);
    if (stride != 1 || in != out) shortcut.emplace(ps, name + ".shortcut", in, out, stride, rng);
  }

  Var<T> operator()(Graph<T>& g, Var<T> x, bool train) const {
    Var<T> h = ops::relu(bn1(g, conv1(g, x), train));
    h = bn2(g, conv2(g, h), train);
    if (se) h = (*se)(g, h);
    Var<T> skip = shortcut ? (*shortcut)(g, x, train) : x;
    return ops::relu(ops::add(h, skip));
  }
};

template <class T>
struct BottleneckBlock {
  static constexpr std::size_t kExpansion = 4;
  Conv<T> conv1, conv2, conv3;
  BatchNorm<T> bn1, bn2, bn3;
  std::optional<Shortcut<T>> shortcut;

  BottleneckBlock(ParameterStore<T>& ps, const std::string& name, std::size_t in,
                  std::size_t mid, std::size_t stride, std::mt19937_64& rng)
      : conv1(ps, name + ".conv1", in, mid, 1, 1, rng),
        conv2(ps, name + ".conv2", mid, mid, 3, stride, rng),
        conv3(ps, name + ".conv3", mid, mid * kExpansion, 1, 1, rng),
        bn1(ps, name + ".bn1", mid),
        bn2(ps, name + ".bn2", mid),
        bn3(ps, name + ".bn3", mid * kExpansion) {
    if (stride != 1 || in != mid * kExpansion)
      shortcut.emplace(ps, name + ".shortcut", in, mid * kExpansion, stride, rng);
  }

  Var<T> operator()(Graph<T>& g, Var<T> x, bool train) const {
    Var<T> h = ops::relu(bn1(g, conv1(g, x), train));
    h = ops::relu(bn2(g, conv2(g, h), train));
    h = bn3(g, conv3(g, h), train);
    Var<T> skip = shortcut ? (*shortcut)(g, x, train) : x;
    return ops::relu(ops::add(h, skip));
  }
};

/// Self-attentive statistics pooling: frame scores come from
/// affine -> tanh -> affine, are softmax-normalized over time, and weight a
/// mean and a standard deviation that are concatenated: [B, C, T] -> [B, 2C].
template <class T>
struct AttentivePool {
  Linear<T> hidden, score;

  AttentivePool() = default;
  AttentivePool(ParameterStore<T>& ps, const std::string& name, std::size_t channels,
                std::size_t hidden_size, std::mt19937_64& rng)
      : hidden(ps, name + ".fc1", channels, hidden_size, rng),
        score(ps, name + ".fc2", hidden_size, 1, rng) {}

  Var<T> weights(Graph<T>& g, Var<T> frames) const {
    const std::size_t B = frames.shape()[0], C = frames.shape()[1], L = frames.shape()[2];
    Var<T> rows = ops::reshape(ops::transpose_last2(frames), {B * L, C});
    Var<T> e = score(g, ops::tanh(hidden(g, rows)));
    return ops::softmax_rows(ops::reshape(e, {B, L}));
  }

  Var<T> operator()(Graph<T>& g, Var<T> frames) const {
    const std::size_t L = frames.shape()[2];
    Var<T> alpha = weights(g, frames);
    Var<T> mean = ops::weighted_sum_last(frames, alpha);
    Var<T> centered = ops::sub(frames, ops::broadcast_trailing(mean, L));
    Var<T> var = ops::weighted_sum_last(ops::square(centered), alpha);
    return ops::concat_cols(mean, ops::safe_sqrt(var));
  }
};

}  // namespace protospoof::model
