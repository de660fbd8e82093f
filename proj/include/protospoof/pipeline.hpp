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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "protospoof/augment/augment.hpp"
#include "protospoof/core/checkpoint.hpp"
#include "protospoof/core/parallel.hpp"
#include "protospoof/data/config.hpp"
#include "protospoof/data/manifest.hpp"
#include "protospoof/dsp/feature_cache.hpp"
#include "protospoof/dsp/frontend.hpp"
#include "protospoof/eval/bank.hpp"
#include "protospoof/eval/eer.hpp"
#include "protospoof/eval/fusion.hpp"
#include "protospoof/eval/scores.hpp"
#include "protospoof/eval/tdcf.hpp"
#include "protospoof/train/trainer.hpp"

// End-to-end stages shared by the command-line tool and the acceptance
// runner.
namespace protospoof::pipeline {

using Net = model::EmbeddingNet<float>;

/// Cache key of one utterance: frontend config plus the audio location.
inline std::uint64_t feature_key(const dsp::FrontendConfig& cfg, const std::string& audio_path) {
  return fnv1a(std::filesystem::absolute(audio_path).lexically_normal().string(),
               dsp::config_hash(cfg));
}

/// Features for every manifest record, in manifest order. With a cache
/// directory, existing entries are reused and new ones are written.
inline train::FeatureSet load_features(const data::Manifest& m, const dsp::FrontendConfig& cfg,
                                       const std::string& cache_dir = "", int jobs = 1) {
  cfg.validate();
  if (!cache_dir.empty()) std::filesystem::create_directories(cache_dir);
  std::vector<dsp::FeatureMatrix> feats(m.records.size());
  parallel_for(m.records.size(), jobs, [&](std::size_t i) {
    const auto& r = m.records[i];
    const std::string path = m.audio_path(r);
    const std::uint64_t key = feature_key(cfg, path);
    if (!cache_dir.empty()) {
      if (auto hit = dsp::load_cached(cache_dir, r.utt_id, key)) {
        feats[i] = std::move(*hit);
        return;
      }
    }
    dsp::FeatureMatrix f = dsp::extract(augment::load_audio(path, cfg.sample_rate), cfg);
    if (f.rows == 0) throw DataError("utterance " + r.utt_id + " is too short for one frame");
    if (!cache_dir.empty()) {
      f.hash = key;
      dsp::write_features(dsp::feature_cache_path(cache_dir, r.utt_id, key), f);
    }
    feats[i] = std::move(f);
  });
  train::FeatureSet set;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    set.add(r.utt_id, r.attack_id, r.label == data::Label::bonafide ? 0 : 1, std::move(feats[i]));
  }
  return set;
}

inline void require_both_classes(const data::Manifest& m, const std::string& what) {
  if (m.count(data::Label::bonafide) == 0 || m.count(data::Label::spoof) == 0)
    throw DataError(what + " needs both bonafide and spoof utterances");
}

/// Trains per the run config. Writes best.ckpt, bank.json, history.jsonl and
/// the resolved config.toml under out_dir; features are cached in
/// out_dir/features unless another cache directory is given.
inline train::TrainOutputs train_run(const data::RunConfig& rc, const data::Manifest& train_manifest,
                                     const data::Manifest& dev_manifest, const std::string& out_dir,
                                     int jobs = 1, std::ostream* log = nullptr,
                                     std::string cache_dir = "") {
  rc.validate();
  require_both_classes(train_manifest, "training manifest");
  require_both_classes(dev_manifest, "development manifest");
  std::filesystem::create_directories(out_dir);
  if (cache_dir.empty()) cache_dir = (std::filesystem::path(out_dir) / "features").string();
  {
    std::ofstream cfg_out(std::filesystem::path(out_dir) / "config.toml");
    cfg_out << rc.to_toml();
  }
  const auto train_set = load_features(train_manifest, rc.frontend, cache_dir, jobs);
  const auto dev_set = load_features(dev_manifest, rc.frontend, cache_dir, jobs);
  train::Trainer<float> trainer(rc.net, rc.loss, rc.train, std::size_t(rc.frontend.fixed_frames));
  trainer.set_squared_distance(rc.squared_distance);
  trainer.set_checkpoint_extra({{"run", rc.to_json()}});
  return trainer.train(train_set, dev_set, out_dir, log);
}

struct LoadedModel {
  data::RunConfig run;
  Net net;
  nlohmann::json header;
};

/// Rebuilds the network and run config recorded in a checkpoint.
inline LoadedModel load_model(const std::string& checkpoint) {
  const nlohmann::json header = read_checkpoint_header(checkpoint);
  if (!header.contains("run"))
    throw DataError("checkpoint " + checkpoint + " carries no run configuration");
  data::RunConfig rc = data::run_config_from_json(header["run"]);
  LoadedModel m{rc, Net(rc.net, 0), header};
  m.net.load(checkpoint);
  m.net.set_training(false);
  return m;
}

inline std::vector<std::vector<double>> embed_manifest(LoadedModel& model, const data::Manifest& m,
                                                       const std::string& cache_dir, int jobs) {
  const auto set = load_features(m, model.run.frontend, cache_dir, jobs);
  return train::embed_all(model.net, set, std::size_t(model.run.frontend.fixed_frames),
                          model.run.train.seed);
}

/// Per-class mean of eval-mode embeddings over a training manifest.
inline eval::PrototypeBank build_prototype_bank(LoadedModel& model, const std::string& checkpoint,
                                                const data::Manifest& train_manifest,
                                                const std::string& cache_dir = "", int jobs = 1) {
  require_both_classes(train_manifest, "training manifest");
  const auto emb = embed_manifest(model, train_manifest, cache_dir, jobs);
  std::vector<std::size_t> labels;
  std::vector<std::string> ids;
  for (const auto& r : train_manifest.records) {
    labels.push_back(r.label == data::Label::bonafide ? 0 : 1);
    ids.push_back(r.utt_id);
  }
  eval::PrototypeBank bank = eval::bank_from_embeddings(emb, labels);
  bank.checkpoint = checkpoint;
  bank.training_hash = train::list_hash(ids);
  bank.squared = model.run.squared_distance;
  return bank;
}

/// CM scores for every manifest utterance, in manifest order.
inline eval::ScoreList score_manifest(LoadedModel& model, const eval::PrototypeBank& bank,
                                      const data::Manifest& m, const std::string& cache_dir = "",
                                      int jobs = 1) {
  const auto emb = embed_manifest(model, m, cache_dir, jobs);
  eval::ScoreList out;
  for (std::size_t i = 0; i < emb.size(); ++i)
    out.push_back({m.records[i].utt_id, eval::cm_score(emb[i], bank)});
  return out;
}

/// Rows of `utt_id label attack v1 ... vM`, tab-separated. Values use nine
/// significant digits, which round-trips single precision exactly.
inline void write_embeddings(const std::string& path, const data::Manifest& m,
                             const std::vector<std::vector<double>>& emb) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  char buf[32];
  for (std::size_t i = 0; i < emb.size(); ++i) {
    const auto& r = m.records[i];
    out << r.utt_id << '\t' << data::label_name(r.label) << '\t' << r.attack_id;
    for (double v : emb[i]) {
      std::snprintf(buf, sizeof(buf), "%.9g", v);
      out << '\t' << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed for " + path);
}

struct EvalReport {
  double eer = 0;
  double eer_threshold = 0;
  double min_tdcf = 0;
  double tdcf_threshold = 0;
  std::size_t n_bonafide = 0;
  std::size_t n_spoof = 0;
  eval::AsvErrors asv;
  bool asv_from_scores = false;
};

inline EvalReport evaluate(const eval::ScoreList& cm, const std::map<std::string, data::Label>& keys,
                           const eval::TdcfParams& params,
                           const std::optional<eval::AsvScores>& asv = std::nullopt) {
  const auto split = eval::split_by_label(cm, keys);
  EvalReport r;
  r.n_bonafide = split.bonafide.size();
  r.n_spoof = split.spoof.size();
  const auto eer = eval::compute_eer(split.bonafide, split.spoof);
  r.eer = eer.eer;
  r.eer_threshold = eer.threshold;
  r.asv_from_scores = asv.has_value();
  r.asv = asv ? eval::asv_errors_at_eer(*asv) : eval::fixed_asv_errors(params);
  const auto t = eval::min_tdcf(split.bonafide, split.spoof, params, r.asv);
  r.min_tdcf = t.min_tdcf;
  r.tdcf_threshold = t.threshold;
  return r;
}

inline nlohmann::json to_json(const EvalReport& r) {
  return {{"eer", r.eer},
          {"eer_threshold", r.eer_threshold},
          {"min_tdcf", r.min_tdcf},
          {"tdcf_threshold", r.tdcf_threshold},
          {"n_bonafide", r.n_bonafide},
          {"n_spoof", r.n_spoof},
          {"asv_p_miss", r.asv.p_miss},
          {"asv_p_fa", r.asv.p_fa},
          {"asv_p_miss_spoof", r.asv.p_miss_spoof},
          {"asv_from_scores", r.asv_from_scores}};
}

struct FusionResult {
  eval::FusionModel model;
  std::vector<eval::ScoreList> fused;  // one per target set
};

/// Fits linear-logistic fusion weights on dev score files and applies them
/// to each group of target score files (one file per system per group).
inline FusionResult fuse(const std::vector<eval::ScoreList>& dev,
                         const std::map<std::string, data::Label>& dev_keys,
                         const std::vector<std::vector<eval::ScoreList>>& targets,
                         const eval::FusionOptions& opt = {}) {
  const auto aligned = eval::align_systems(dev);
  std::vector<bool> target;
  std::vector<std::string> missing;
  for (const auto& id : aligned.ids) {
    auto it = dev_keys.find(id);
    if (it == dev_keys.end()) {
      missing.push_back(id);
      continue;
    }
    target.push_back(it->second == data::Label::bonafide);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i) list += " " + missing[i];
    throw DataError("dev keys lack " + std::to_string(missing.size()) + " scored ids:" + list);
  }
  FusionResult out;
  out.model = eval::train_fusion(aligned.scores, target, opt);
  for (const auto& group : targets) {
    if (group.size() != dev.size())
      throw ConfigError("fusion target needs " + std::to_string(dev.size()) + " score files");
    out.fused.push_back(eval::apply_fusion(out.model, group));
  }
  return out;
}

}  // namespace protospoof::pipeline
