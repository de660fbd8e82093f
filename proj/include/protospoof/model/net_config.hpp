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

#include <array>
#include <string>
#include <string_view>

#include "json.hpp"
#include "protospoof/core/error.hpp"

namespace protospoof::model {

enum class BlockType { basic, bottleneck, se_basic };
enum class Pooling { attentive, global_average };

NLOHMANN_JSON_SERIALIZE_ENUM(BlockType, {{BlockType::basic, "basic"},
                                         {BlockType::bottleneck, "bottleneck"},
                                         {BlockType::se_basic, "se_basic"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Pooling, {{Pooling::attentive, "attentive"},
                                       {Pooling::global_average, "global_average"}})

struct NetConfig {
  BlockType block_type = BlockType::se_basic;
  std::array<int, 4> blocks_per_stage{1, 1, 1, 1};
  std::array<int, 4> stage_widths{4, 8, 16, 32};
  Pooling pooling = Pooling::attentive;
  int se_reduction = 4;
  int embedding_dim = 128;
  int attention_hidden = 128;
  // Stride of the stem convolution on both axes.
  int stem_stride = 1;

  void validate() const {
    for (int i = 0; i < 4; ++i) {
      if (blocks_per_stage[i] < 1)
        throw ConfigError("net.blocks_per_stage entries must be >= 1");
      if (stage_widths[i] < 1) throw ConfigError("net.stage_widths entries must be >= 1");
      if (block_type == BlockType::se_basic &&
          (se_reduction < 1 || stage_widths[i] % se_reduction != 0))
        throw ConfigError("net.se_reduction " + std::to_string(se_reduction) +
                          " does not divide stage width " + std::to_string(stage_widths[i]));
    }
    if (embedding_dim < 1) throw ConfigError("net.embedding_dim must be >= 1");
    if (attention_hidden < 1) throw ConfigError("net.attention_hidden must be >= 1");
    if (stem_stride < 1) throw ConfigError("net.stem_stride must be >= 1");
  }

  /// Named architectures. Widths [64,128,256,512] with attentive pooling
  /// and [16,32,64,128] with global average pooling are the two SE-ResNet34
  /// variants; "test" is the small unit-test network.
  static NetConfig preset(std::string_view name) {
    NetConfig c;
    c.stage_widths = {64, 128, 256, 512};
    c.se_reduction = 8;
    if (name == "resnet18") {
      c.block_type = BlockType::basic;
      c.blocks_per_stage = {2, 2, 2, 2};
    } else if (name == "resnet34") {
      c.block_type = BlockType::basic;
      c.blocks_per_stage = {3, 4, 6, 3};
    } else if (name == "resnet50") {
      c.block_type = BlockType::bottleneck;
      c.blocks_per_stage = {3, 4, 6, 3};
    } else if (name == "se_resnet34" || name == "se_resnet34_atten") {
      c.block_type = BlockType::se_basic;
      c.blocks_per_stage = {3, 4, 6, 3};
    } else if (name == "se_resnet34_avg") {
      c.block_type = BlockType::se_basic;
      c.blocks_per_stage = {3, 4, 6, 3};
      c.stage_widths = {16, 32, 64, 128};
      c.pooling = Pooling::global_average;
    } else if (name == "test") {
      c = NetConfig{};
    } else {
      throw ConfigError("unknown network preset '" + std::string(name) + "'");
    }
    return c;
  }
};

inline void to_json(nlohmann::json& j, const NetConfig& c) {
  j = nlohmann::json{{"block_type", c.block_type},
                     {"blocks_per_stage", c.blocks_per_stage},
                     {"stage_widths", c.stage_widths},
                     {"pooling", c.pooling},
                     {"se_reduction", c.se_reduction},
                     {"embedding_dim", c.embedding_dim},
                     {"attention_hidden", c.attention_hidden},
                     {"stem_stride", c.stem_stride}};
}

inline void from_json(const nlohmann::json& j, NetConfig& c) {
  NetConfig d;
  c.block_type = j.value("block_type", d.block_type);
  c.blocks_per_stage = j.value("blocks_per_stage", d.blocks_per_stage);
  c.stage_widths = j.value("stage_widths", d.stage_widths);
  c.pooling = j.value("pooling", d.pooling);
  c.se_reduction = j.value("se_reduction", d.se_reduction);
  c.embedding_dim = j.value("embedding_dim", d.embedding_dim);
  c.attention_hidden = j.value("attention_hidden", d.attention_hidden);
  c.stem_stride = j.value("stem_stride", d.stem_stride);
}

}  // namespace protospoof::model
