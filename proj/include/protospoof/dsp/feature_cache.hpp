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
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "protospoof/core/error.hpp"
#include "protospoof/dsp/frontend.hpp"

namespace protospoof::dsp {

// Record layout: "PSFEAT01", u64 config hash, u64 T, u64 D, u32 kind,
// then T*D little-endian doubles, row-major.
inline constexpr char kFeatureMagic[8] = {'P', 'S', 'F', 'E', 'A', 'T', '0', '1'};

inline std::string feature_cache_path(const std::string& dir, const std::string& utt_id,
                                      std::uint64_t hash) {
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  return (std::filesystem::path(dir) / (utt_id + "." + hex + ".feat")).string();
}

inline void write_features(const std::string& path, const FeatureMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write feature file " + path);
  const std::uint64_t hdr[3] = {m.hash, m.rows, m.cols};
  const std::uint32_t kind = static_cast<std::uint32_t>(m.kind);
  out.write(kFeatureMagic, 8);
  out.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
  out.write(reinterpret_cast<const char*>(&kind), sizeof(kind));
  out.write(reinterpret_cast<const char*>(m.data.data()),
            std::streamsize(m.data.size() * sizeof(double)));
  if (!out) throw DataError("write failed for " + path);
}

inline FeatureMatrix read_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file " + path);
  char magic[8];
  std::uint64_t hdr[3];
  std::uint32_t kind = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
  in.read(reinterpret_cast<char*>(&kind), sizeof(kind));
  if (!in || std::memcmp(magic, kFeatureMagic, 8) != 0 || kind > 1)
    throw DataError(path + ": not a feature file");
  FeatureMatrix m(hdr[1], hdr[2]);
  m.hash = hdr[0];
  m.kind = static_cast<FeatureKind>(kind);
  in.read(reinterpret_cast<char*>(m.data.data()),
          std::streamsize(m.data.size() * sizeof(double)));
  if (!in) throw DataError(path + ": truncated feature file");
  return m;
}

/// Cached features for an utterance, or nullopt when absent or stale.
inline std::optional<FeatureMatrix> load_cached(const std::string& dir, const std::string& utt_id,
                                                std::uint64_t hash) {
  const auto path = feature_cache_path(dir, utt_id, hash);
  if (!std::filesystem::exists(path)) return std::nullopt;
  FeatureMatrix m = read_features(path);
  if (m.hash != hash) return std::nullopt;
  return m;
}

}  // namespace protospoof::dsp
