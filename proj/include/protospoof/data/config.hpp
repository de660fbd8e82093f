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
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "protospoof/core/error.hpp"
#include "protospoof/dsp/frontend.hpp"
#include "protospoof/eval/tdcf.hpp"
#include "protospoof/loss/losses.hpp"
#include "protospoof/model/net_config.hpp"
#include "protospoof/train/config.hpp"

namespace protospoof::data {

// A small TOML subset: [section] headers, `key = value` with strings, bools,
// integers, floats and single-line arrays of those, and # comments.

namespace toml_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::string strip_comment(const std::string& line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == '\\' && quote == '"') ++i;
      else if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

class ValueParser {
 public:
  ValueParser(const std::string& s, const std::string& where) : s_(s), where_(where) {}

  nlohmann::json parse() {
    nlohmann::json v = value();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing text");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError(where_ + ": " + why + " in value '" + s_ + "'");
  }
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  nlohmann::json value() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"' || c == '\'') return string(c);
    if (c == '[') return array();
    if (s_.compare(pos_, 4, "true") == 0) return pos_ += 4, true;
    if (s_.compare(pos_, 5, "false") == 0) return pos_ += 5, false;
    return number();
  }
  nlohmann::json string(char quote) {
    std::string out;
    for (++pos_; pos_ < s_.size(); ++pos_) {
      const char c = s_[pos_];
      if (c == quote) {
        ++pos_;
        return out;
      }
      if (c == '\\' && quote == '"' && pos_ + 1 < s_.size()) {
        const char e = s_[++pos_];
        out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
      } else {
        out += c;
      }
    }
    fail("unterminated string");
  }
  nlohmann::json array() {
    nlohmann::json arr = nlohmann::json::array();
    ++pos_;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ']') return ++pos_, arr;
    while (true) {
      arr.push_back(value());
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated array");
      if (s_[pos_] == ']') return ++pos_, arr;
      if (s_[pos_] != ',') fail("expected ',' in array");
      ++pos_;
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ']') return ++pos_, arr;
    }
  }
  nlohmann::json number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '.' || s_[pos_] == '+' || s_[pos_] == '-' ||
                                s_[pos_] == '_'))
      ++pos_;
    std::string tok = s_.substr(start, pos_ - start);
    std::erase(tok, '_');
    if (tok.empty()) fail("expected a value");
    const bool is_float = tok.find_first_of(".eE") != std::string::npos;
    try {
      std::size_t used = 0;
      if (is_float) {
        const double d = std::stod(tok, &used);
        if (used == tok.size()) return d;
      } else {
        const long long i = std::stoll(tok, &used, 10);
        if (used == tok.size()) return i;
      }
    } catch (const std::exception&) {
    }
    fail("cannot parse '" + tok + "'");
  }

  const std::string& s_;
  std::string where_;
  std::size_t pos_ = 0;
};

}  // namespace toml_detail

/// Parses the subset into {"section": {"key": value}}; top-level keys live
/// under "".
inline nlohmann::json parse_toml(const std::string& text, const std::string& source = "config") {
  nlohmann::json root = nlohmann::json::object();
  std::string section;
  std::istringstream in(text);
  std::string raw;
  for (std::size_t lineno = 1; std::getline(in, raw); ++lineno) {
    const auto where = source + ":" + std::to_string(lineno);
    const std::string line = toml_detail::trim(toml_detail::strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": malformed section header");
      section = toml_detail::trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      if (root.contains(section)) throw ConfigError(where + ": duplicate section [" + section + "]");
      root[section] = nlohmann::json::object();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = toml_detail::trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": missing key");
    auto& table = root[section];
    if (table.contains(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    table[key] = toml_detail::ValueParser(toml_detail::trim(line.substr(eq + 1)), where).parse();
  }
  return root;
}

inline std::string toml_value(const nlohmann::json& v) {
  if (v.is_array()) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + toml_value(v[i]);
    return s + "]";
  }
  if (v.is_number_float()) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v.get<double>());
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
  }
  return v.dump();
}

/// Everything a pipeline run needs. One root seed drives every random
/// stream.
struct RunConfig {
  std::uint64_t seed = 0;
  dsp::FrontendConfig frontend;
  std::string net_preset = "test";
  model::NetConfig net = model::NetConfig::preset("test");
  loss::LossConfig loss;
  std::string train_preset = "asvspoof2019";
  train::TrainConfig train = train::TrainConfig::preset("asvspoof2019");
  bool squared_distance = true;
  eval::TdcfParams tdcf;

  void validate() const {
    frontend.validate();
    net.validate();
    loss.validate();
    train.validate();
    tdcf.validate();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j[""] = {{"seed", seed}};
    j["frontend"] = frontend;
    j["net"] = net;
    j["net"]["preset"] = net_preset;
    j["loss"] = loss;
    j["train"] = train;
    j["train"].erase("seed");
    j["train"]["preset"] = train_preset;
    j["scoring"] = {{"squared_distance", squared_distance}};
    j["tdcf"] = tdcf;
    return j;
  }

  std::string to_toml() const {
    const auto j = to_json();
    std::string out;
    for (const auto& [k, v] : j[""].items()) out += k + " = " + toml_value(v) + "\n";
    for (const char* section : {"frontend", "net", "loss", "train", "scoring", "tdcf"}) {
      out += std::string("\n[") + section + "]\n";
      const auto& tbl = j[section];
      if (tbl.contains("preset")) out += "preset = " + toml_value(tbl["preset"]) + "\n";
      for (const auto& [k, v] : tbl.items())
        if (k != "preset") out += k + " = " + toml_value(v) + "\n";
    }
    return out;
  }
};

namespace config_detail {

// Overlays `given` on `defaults`, rejecting unknown keys, then converts and
// checks that the value survives a round trip (catches wrong types and
// unknown enum names).
template <class Cfg>
Cfg overlay(const std::string& section, nlohmann::json defaults, const nlohmann::json& given) {
  for (const auto& [k, v] : given.items()) {
    if (!defaults.contains(k)) throw ConfigError("unknown key '" + k + "' in [" + section + "]");
    defaults[k] = v;
  }
  Cfg cfg;
  try {
    cfg = defaults.get<Cfg>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("invalid value type in [" + section + "]");
  }
  const nlohmann::json back = cfg;
  for (const auto& [k, v] : given.items())
    if (back.at(k) != v)
      throw ConfigError("invalid value for " + section + "." + k + ": " + v.dump());
  return cfg;
}

}  // namespace config_detail

/// Builds a RunConfig from parsed TOML. Presets named in [net] / [train] are
/// applied first; explicit keys override them.
inline RunConfig run_config_from_json(const nlohmann::json& root) {
  RunConfig rc;
  for (const auto& [section, body] : root.items()) {
    static const char* known[] = {"", "frontend", "net", "loss", "train", "scoring", "tdcf"};
    if (std::find(std::begin(known), std::end(known), section) == std::end(known))
      throw ConfigError("unknown config section [" + section + "]");
    if (!body.is_object()) throw ConfigError("section [" + section + "] is not a table");
  }
  auto table = [&](const char* name) {
    return root.contains(name) ? root[name] : nlohmann::json::object();
  };

  nlohmann::json top = table("");
  for (const auto& [k, v] : top.items()) {
    if (k != "seed") throw ConfigError("unknown top-level key '" + k + "'");
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError("seed must be a non-negative integer");
    rc.seed = v.get<std::uint64_t>();
  }

  rc.frontend = config_detail::overlay<dsp::FrontendConfig>("frontend", rc.frontend, table("frontend"));

  nlohmann::json net = table("net");
  if (net.contains("preset")) {
    if (!net["preset"].is_string()) throw ConfigError("net.preset must be a string");
    rc.net_preset = net["preset"].get<std::string>();
    net.erase("preset");
  }
  rc.net = config_detail::overlay<model::NetConfig>("net", model::NetConfig::preset(rc.net_preset), net);

  rc.loss = config_detail::overlay<loss::LossConfig>("loss", rc.loss, table("loss"));

  nlohmann::json tr = table("train");
  if (tr.contains("preset")) {
    if (!tr["preset"].is_string()) throw ConfigError("train.preset must be a string");
    rc.train_preset = tr["preset"].get<std::string>();
    tr.erase("preset");
  }
  if (tr.contains("seed")) throw ConfigError("train.seed is set by the top-level seed");
  nlohmann::json tdefaults = train::TrainConfig::preset(rc.train_preset);
  tdefaults.erase("seed");
  rc.train = config_detail::overlay<train::TrainConfig>("train", tdefaults, tr);
  rc.train.seed = rc.seed;

  const nlohmann::json scoring = table("scoring");
  for (const auto& [k, v] : scoring.items()) {
    if (k != "squared_distance") throw ConfigError("unknown key '" + k + "' in [scoring]");
    if (!v.is_boolean()) throw ConfigError("scoring.squared_distance must be true or false");
    rc.squared_distance = v.get<bool>();
  }

  rc.tdcf = config_detail::overlay<eval::TdcfParams>("tdcf", rc.tdcf, table("tdcf"));
  rc.validate();
  return rc;
}

inline RunConfig parse_run_config(const std::string& text, const std::string& source = "config") {
  return run_config_from_json(parse_toml(text, source));
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_text_file(path), path);
}

/// [tdcf] table of a standalone cost file (or the whole file when it has no
/// sections).
inline eval::TdcfParams load_tdcf_params(const std::string& path) {
  const auto root = parse_toml(read_text_file(path), path);
  nlohmann::json body = nlohmann::json::object();
  if (root.contains("tdcf")) body = root["tdcf"];
  else if (root.contains("")) body = root[""];
  for (const auto& [section, _] : root.items())
    if (section != "" && section != "tdcf")
      throw ConfigError(path + ": unexpected section [" + section + "]");
  auto p = config_detail::overlay<eval::TdcfParams>("tdcf", eval::TdcfParams{}, body);
  p.validate();
  return p;
}

}  // namespace protospoof::data
