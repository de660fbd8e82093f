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
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>

#include "json.hpp"
#include "protospoof/core/parameter.hpp"

namespace protospoof {

// Binary checkpoint container (little-endian):
//   "PSCKPT\0\0" | u32 version | u32 scalar bytes | u64 header length |
//   header JSON | u64 entry count |
//   per entry: u32 name length, name, u32 rank, u64 dims[rank], raw values.
// Values are written in the model's own scalar type so reloads are bit-exact.
inline constexpr char kCheckpointMagic[8] = {'P', 'S', 'C', 'K', 'P', 'T', 0, 0};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <class V>
void write_pod(std::ostream& os, const V& v) {
  static_assert(std::is_trivially_copyable_v<V>);
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <class V>
V read_pod(std::istream& is, const std::string& path) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!is) throw DataError("truncated checkpoint " + path);
  return v;
}

}  // namespace detail

template <class T>
void save_checkpoint(const std::string& path, const ParameterStore<T>& params,
                     const nlohmann::json& header) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open checkpoint for writing: " + path);
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_pod(os, kCheckpointVersion);
  detail::write_pod(os, static_cast<std::uint32_t>(sizeof(T)));
  const std::string h = header.dump();
  detail::write_pod(os, static_cast<std::uint64_t>(h.size()));
  os.write(h.data(), static_cast<std::streamsize>(h.size()));
  detail::write_pod(os, static_cast<std::uint64_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter<T>& p = params[i];
    detail::write_pod(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    detail::write_pod(os, static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t d : p.value.shape()) detail::write_pod(os, static_cast<std::uint64_t>(d));
    os.write(reinterpret_cast<const char*>(p.value.data()),
             static_cast<std::streamsize>(p.value.size() * sizeof(T)));
  }
  os.flush();
  if (!os) throw Error("failed writing checkpoint " + path);
}

/// Reads only the JSON header (e.g. to rebuild the network before loading).
inline nlohmann::json read_checkpoint_header(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw DataError("not a checkpoint file: " + path);
  const auto version = detail::read_pod<std::uint32_t>(is, path);
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version) + " in " + path);
  detail::read_pod<std::uint32_t>(is, path);
  const auto len = detail::read_pod<std::uint64_t>(is, path);
  std::string h(len, '\0');
  is.read(h.data(), static_cast<std::streamsize>(len));
  if (!is) throw DataError("truncated checkpoint header in " + path);
  return nlohmann::json::parse(h);
}

/// Loads values into an existing store. Every stored entry must match a
/// parameter by name and shape, and every parameter must be present.
/// Values stored at a different precision are converted.
template <class T>
nlohmann::json load_checkpoint(const std::string& path, ParameterStore<T>& params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw DataError("not a checkpoint file: " + path);
  const auto version = detail::read_pod<std::uint32_t>(is, path);
  if (version != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  const auto scalar_bytes = detail::read_pod<std::uint32_t>(is, path);
  if (scalar_bytes != 4 && scalar_bytes != 8)
    throw DataError("bad scalar width in checkpoint " + path);
  const auto len = detail::read_pod<std::uint64_t>(is, path);
  std::string h(len, '\0');
  is.read(h.data(), static_cast<std::streamsize>(len));
  const auto count = detail::read_pod<std::uint64_t>(is, path);
  if (count != params.size())
    throw DataError("checkpoint " + path + " holds " + std::to_string(count) +
                    " tensors, model has " + std::to_string(params.size()));
  for (std::uint64_t e = 0; e < count; ++e) {
    const auto nlen = detail::read_pod<std::uint32_t>(is, path);
    std::string name(nlen, '\0');
    is.read(name.data(), nlen);
    const auto rank = detail::read_pod<std::uint32_t>(is, path);
    Shape shape(rank);
    for (auto& d : shape) d = detail::read_pod<std::uint64_t>(is, path);
    if (!params.contains(name)) throw DataError("checkpoint tensor " + name + " not in model");
    Parameter<T>& p = params.get(name);
    if (p.value.shape() != shape)
      throw DataError("shape mismatch for " + name + ": checkpoint " + shape_string(shape) +
                      ", model " + shape_string(p.value.shape()));
    if (scalar_bytes == sizeof(T)) {
      is.read(reinterpret_cast<char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(T)));
    } else if (scalar_bytes == 4) {
      std::vector<float> buf(p.value.size());
      is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
      for (std::size_t i = 0; i < buf.size(); ++i) p.value[i] = static_cast<T>(buf[i]);
    } else {
      std::vector<double> buf(p.value.size());
      is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
      for (std::size_t i = 0; i < buf.size(); ++i) p.value[i] = static_cast<T>(buf[i]);
    }
    if (!is) throw DataError("truncated checkpoint " + path);
  }
  return nlohmann::json::parse(h);
}

}  // namespace protospoof
