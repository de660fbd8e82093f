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
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "protospoof/core/error.hpp"
#include "protospoof/data/manifest.hpp"

namespace protospoof::eval {

struct ScoreRecord {
  std::string utt_id;
  double score = 0;
};

using ScoreList = std::vector<ScoreRecord>;

inline std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

/// `utt_id<TAB>score` per line.
inline void write_scores(const std::string& path, const ScoreList& scores) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write score file " + path);
  for (const auto& s : scores) out << s.utt_id << '\t' << format_score(s.score) << '\n';
  if (!out) throw DataError("write failed for " + path);
}

inline ScoreList read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open score file " + path);
  ScoreList out;
  std::set<std::string> seen;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    std::istringstream f(line);
    std::string id, value, extra;
    if (!(f >> id)) continue;
    const auto where = path + ":" + std::to_string(lineno) + ": ";
    if (!(f >> value) || (f >> extra)) throw DataError(where + "expected 'utt_id score'");
    double v;
    try {
      std::size_t used = 0;
      v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw DataError(where + "bad score '" + value + "'");
    }
    if (!std::isfinite(v)) throw DataError(where + "non-finite score");
    if (!seen.insert(id).second) throw DataError(where + "duplicate utterance id '" + id + "'");
    out.push_back({id, v});
  }
  return out;
}

/// CM keys: either `utt_id label` lines or a full five-column manifest.
inline std::map<std::string, data::Label> read_cm_keys(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open key file " + path);
  std::map<std::string, data::Label> keys;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    std::istringstream f(line);
    std::vector<std::string> cols;
    for (std::string c; f >> c;) cols.push_back(c);
    if (cols.empty() || cols[0][0] == '#') continue;
    const auto where = path + ":" + std::to_string(lineno) + ": ";
    std::string label;
    if (cols.size() == 2) label = cols[1];
    else if (cols.size() == 5) label = cols[3];
    else throw DataError(where + "expected 'utt_id label' or a manifest row");
    try {
      if (!keys.emplace(cols[0], data::parse_label(label)).second)
        throw DataError("duplicate utterance id '" + cols[0] + "'");
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  return keys;
}

inline std::map<std::string, data::Label> keys_from_manifest(const data::Manifest& m) {
  std::map<std::string, data::Label> keys;
  for (const auto& r : m.records) keys[r.utt_id] = r.label;
  return keys;
}

/// Scores split by class. Every scored id must have a key.
struct LabeledScores {
  std::vector<double> bonafide;
  std::vector<double> spoof;
};

inline LabeledScores split_by_label(const ScoreList& scores,
                                    const std::map<std::string, data::Label>& keys) {
  LabeledScores out;
  std::vector<std::string> missing;
  for (const auto& s : scores) {
    auto it = keys.find(s.utt_id);
    if (it == keys.end()) {
      missing.push_back(s.utt_id);
      continue;
    }
    (it->second == data::Label::bonafide ? out.bonafide : out.spoof).push_back(s.score);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i)
      list += (i ? ", " : "") + missing[i];
    throw DataError(std::to_string(missing.size()) + " scored utterances have no key: " + list);
  }
  return out;
}

/// ASV trials for the tandem cost: `utt_id key score`, key in
/// {target, nontarget, spoof}.
struct AsvScores {
  std::vector<double> target;
  std::vector<double> nontarget;
  std::vector<double> spoof;
};

inline AsvScores read_asv_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ASV score file " + path);
  AsvScores out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    std::istringstream f(line);
    std::vector<std::string> cols;
    for (std::string c; f >> c;) cols.push_back(c);
    if (cols.empty() || cols[0][0] == '#') continue;
    const auto where = path + ":" + std::to_string(lineno) + ": ";
    if (cols.size() != 3) throw DataError(where + "expected 'utt_id key score'");
    double v;
    try {
      v = std::stod(cols[2]);
    } catch (const std::exception&) {
      throw DataError(where + "bad score '" + cols[2] + "'");
    }
    if (cols[1] == "target") out.target.push_back(v);
    else if (cols[1] == "nontarget") out.nontarget.push_back(v);
    else if (cols[1] == "spoof") out.spoof.push_back(v);
    else throw DataError(where + "bad ASV key '" + cols[1] + "'");
  }
  return out;
}

}  // namespace protospoof::eval
