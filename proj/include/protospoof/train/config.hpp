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

#include "json.hpp"
#include "protospoof/core/error.hpp"

namespace protospoof::train {

struct TrainConfig {
  int n_classes = 2;
  int n_support = 20;
  int n_query = 20;
  int episodes_per_epoch = 500;
  int epochs = 20;
  double learning_rate = 3e-4;
  double lr_decay = 0.5;
  int lr_decay_interval = 10;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 64;  // non-episodic losses
  bool per_query_steps = false;
  std::uint64_t seed = 0;

  /// Learning rate for a 1-based epoch: alpha * decay^floor((epoch-1)/interval).
  double lr_at_epoch(int epoch) const {
    const int k = (epoch - 1) / lr_decay_interval;
    return learning_rate * std::pow(lr_decay, k);
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError("train: " + m); };
    if (n_classes != 2) fail("n_classes must be 2 (bonafide, spoof)");
    if (n_support < 1 || n_query < 1) fail("n_support and n_query must be >= 1");
    if (episodes_per_epoch < 1) fail("episodes_per_epoch must be >= 1");
    if (epochs < 0) fail("epochs must be >= 0");
    if (!(learning_rate >= 0)) fail("learning_rate must be >= 0");
    if (!(lr_decay > 0 && lr_decay <= 1)) fail("lr_decay must be in (0, 1]");
    if (lr_decay_interval < 1) fail("lr_decay_interval must be >= 1");
    if (batch_size < 2) fail("batch_size must be >= 2");
  }

  static TrainConfig preset(const std::string& name) {
    TrainConfig c;
    if (name == "asvspoof2019") return c;
    if (name == "asvspoof2021") {
      c.episodes_per_epoch = 1000;
      c.epochs = 100;
      c.learning_rate = 5e-4;
      c.lr_decay_interval = 15;
      return c;
    }
    if (name == "toy") {
      c.episodes_per_epoch = 50;
      c.epochs = 20;
      c.n_support = 5;
      c.n_query = 5;
      c.learning_rate = 1e-3;
      c.lr_decay_interval = 10;
      c.batch_size = 20;
      return c;
    }
    throw ConfigError("unknown train preset '" + name + "' (asvspoof2019, asvspoof2021, toy)");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainConfig, n_classes, n_support, n_query,
                                                episodes_per_epoch, epochs, learning_rate, lr_decay,
                                                lr_decay_interval, adam_beta1, adam_beta2, adam_eps,
                                                batch_size, per_query_steps, seed)

}  // namespace protospoof::train
