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
#include <variant>
#include <vector>

#include "protospoof/core/checkpoint.hpp"
#include "protospoof/model/layers.hpp"
#include "protospoof/model/net_config.hpp"

namespace protospoof::model {

/// SE-ResNet embedding extractor: stem conv -> four residual stages ->
/// frequency-axis mean -> temporal pooling -> affine to the embedding.
/// Input is [B, 1, frames, coefficients]; output is [B, embedding_dim].
template <class T>
class EmbeddingNet {
 public:
  explicit EmbeddingNet(const NetConfig& cfg, std::uint64_t seed = 0) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    const auto w0 = static_cast<std::size_t>(cfg_.stage_widths[0]);
    stem_conv_ = Conv<T>(params_, "stem.conv", 1, w0, 3, cfg_.stem_stride, rng);
    stem_bn_ = BatchNorm<T>(params_, "stem.bn", w0);

    std::size_t in = w0;
    for (int s = 0; s < 4; ++s) {
      const auto width = static_cast<std::size_t>(cfg_.stage_widths[s]);
      for (int b = 0; b < cfg_.blocks_per_stage[s]; ++b) {
        const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
        const std::string name = "stage" + std::to_string(s + 1) + ".block" + std::to_string(b);
        if (cfg_.block_type == BlockType::bottleneck) {
          blocks_.emplace_back(std::in_place_type<BottleneckBlock<T>>, params_, name, in, width,
                               stride, rng);
          in = width * BottleneckBlock<T>::kExpansion;
        } else {
          const std::size_t r =
              cfg_.block_type == BlockType::se_basic ? std::size_t(cfg_.se_reduction) : 0;
          blocks_.emplace_back(std::in_place_type<BasicBlock<T>>, params_, name, in, width,
                               stride, r, rng);
          in = width;
        }
      }
    }
    channels_ = in;
    std::size_t pooled = in;
    if (cfg_.pooling == Pooling::attentive) {
      pool_ = AttentivePool<T>(params_, "pool", in, std::size_t(cfg_.attention_hidden), rng);
      pooled = 2 * in;
    }
    head_ = Linear<T>(params_, "embedding", pooled, std::size_t(cfg_.embedding_dim), rng);
  }

  EmbeddingNet(const EmbeddingNet&) = delete;
  EmbeddingNet& operator=(const EmbeddingNet&) = delete;
  // Layers point at parameters owned through unique_ptr, so moves are safe.
  EmbeddingNet(EmbeddingNet&&) = default;

  const NetConfig& config() const { return cfg_; }
  ParameterStore<T>& parameters() { return params_; }
  const ParameterStore<T>& parameters() const { return params_; }
  std::size_t output_channels() const { return channels_; }
  const AttentivePool<T>& attentive_pool() const { return pool_; }

  bool training() const { return training_; }
  void set_training(bool on) { training_ = on; }

  /// Frame-level features after the residual stages, collapsed over the
  /// frequency axis: [B, C, T'].
  Var<T> frames(Graph<T>& g, Var<T> input) const {
    const Shape& s = input.shape();
    if (s.size() != 4 || s[1] != 1)
      throw ConfigError("embedding net expects input [B, 1, frames, dims], got " +
                        shape_string(s));
    Var<T> h = ops::relu(stem_bn_(g, stem_conv_(g, input), training_));
    for (const auto& block : blocks_)
      h = std::visit([&](const auto& b) { return b(g, h, training_); }, block);
    return ops::mean_trailing(h, 3);
  }

  Var<T> pool(Graph<T>& g, Var<T> frames) const {
    typename Graph<T>::Scope scope(g, "pool");
    if (cfg_.pooling == Pooling::attentive) return pool_(g, frames);
    return ops::mean_trailing(frames, 2);
  }

  Var<T> forward(Graph<T>& g, Var<T> input) const { return head_(g, pool(g, frames(g, input))); }

  /// Eval-mode convenience: embeddings for a batch, no tape kept.
  Tensor<T> embed(const Tensor<T>& batch) {
    const bool was = training_;
    training_ = false;
    Graph<T> g(false);
    Tensor<T> out = forward(g, g.constant(batch)).value();
    training_ = was;
    return out;
  }

  void save(const std::string& path, nlohmann::json extra = nlohmann::json::object()) const {
    extra["net"] = cfg_;
    save_checkpoint(path, params_, extra);
  }

  nlohmann::json load(const std::string& path) {
    nlohmann::json header = load_checkpoint(path, params_);
    if (header.contains("net")) {
      if (header["net"] != nlohmann::json(cfg_))
        throw DataError("checkpoint " + path + " was written for a different network config");
    }
    return header;
  }

 private:
  NetConfig cfg_;
  ParameterStore<T> params_;
  Conv<T> stem_conv_;
  BatchNorm<T> stem_bn_;
  std::vector<std::variant<BasicBlock<T>, BottleneckBlock<T>>> blocks_;
  AttentivePool<T> pool_;
  Linear<T> head_;
  std::size_t channels_ = 0;
  bool training_ = true;
};

}  // namespace protospoof::model
