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
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "protospoof/core/error.hpp"

namespace protospoof::data {

enum class Label { bonafide = 0, spoof = 1 };

inline const char* label_name(Label l) { return l == Label::bonafide ? "bonafide" : "spoof"; }

inline Label parse_label(const std::string& s) {
  if (s == "bonafide") return Label::bonafide;
  if (s == "spoof") return Label::spoof;
  throw DataError("bad label '" + s + "' (expected bonafide or spoof)");
}

/// One protocol row: utterance id, speaker id, attack id ("-" for bonafide),
/// label, audio path.
struct ManifestRecord {
  std::string utt_id;
  std::string speaker_id;
  std::string attack_id;
  Label label = Label::bonafide;
  std::string audio_path;

  bool operator==(const ManifestRecord&) const = default;
};

struct Manifest {
  std::vector<ManifestRecord> records;
  std::string base_dir;  // relative audio paths resolve against this

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  std::string audio_path(const ManifestRecord& r) const {
    std::filesystem::path p(r.audio_path);
    if (p.is_absolute() || base_dir.empty()) return p.string();
    return (std::filesystem::path(base_dir) / p).string();
  }

  std::size_t count(Label l) const {
    std::size_t n = 0;
    for (const auto& r : records) n += r.label == l;
    return n;
  }
};

enum class MissingAudio { ignore, warn, error };

/// Checks record invariants: unique ids and bonafide <=> attack "-".
inline void validate_manifest(const Manifest& m, const std::string& source = "manifest") {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    if (!seen.insert(r.utt_id).second)
      throw DataError(source + ": duplicate utterance id '" + r.utt_id + "'");
    if ((r.label == Label::bonafide) != (r.attack_id == "-"))
      throw DataError(source + ": utterance '" + r.utt_id + "' is " + label_name(r.label) +
                      " with attack id '" + r.attack_id + "'");
  }
}

/// Parses whitespace-separated rows; '#' starts a comment line.
inline Manifest parse_manifest_text(const std::string& text, const std::string& source,
                                    const std::string& base_dir = "",
                                    MissingAudio missing = MissingAudio::ignore) {
  Manifest m;
  m.base_dir = base_dir;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto where = source + ":" + std::to_string(lineno) + ": ";
    std::istringstream fields(line);
    std::vector<std::string> cols;
    for (std::string f; fields >> f;) cols.push_back(f);
    if (cols.empty() || cols[0][0] == '#') continue;
    if (cols.size() != 5)
      throw DataError(where + "expected 5 columns (utt speaker attack label path), got " +
                      std::to_string(cols.size()));
    ManifestRecord r;
    r.utt_id = cols[0];
    r.speaker_id = cols[1];
    r.attack_id = cols[2];
    try {
      r.label = parse_label(cols[3]);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    r.audio_path = cols[4];
    if (!seen.insert(r.utt_id).second)
      throw DataError(where + "duplicate utterance id '" + r.utt_id + "'");
    if ((r.label == Label::bonafide) != (r.attack_id == "-"))
      throw DataError(where + label_name(r.label) + " utterance with attack id '" +
                      r.attack_id + "'");
    m.records.push_back(std::move(r));
    if (missing != MissingAudio::ignore &&
        !std::filesystem::exists(m.audio_path(m.records.back()))) {
      const auto msg = where + "audio file not found: " + m.audio_path(m.records.back());
      if (missing == MissingAudio::error) throw DataError(msg);
      std::cerr << "warning: " << msg << "\n";
    }
  }
  return m;
}

inline Manifest parse_manifest(const std::string& path,
                               MissingAudio missing = MissingAudio::ignore) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path().string();
  return parse_manifest_text(ss.str(), path, dir, missing);
}

inline std::string serialize_manifest(const Manifest& m) {
  std::string out;
  for (const auto& r : m.records) {
    out += r.utt_id + '\t' + r.speaker_id + '\t' + r.attack_id + '\t' + label_name(r.label) +
           '\t' + r.audio_path + '\n';
  }
  return out;
}

inline void write_manifest(const std::string& path, const Manifest& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path);
  out << serialize_manifest(m);
  if (!out) throw DataError("write failed for " + path);
}

}  // namespace protospoof::data
