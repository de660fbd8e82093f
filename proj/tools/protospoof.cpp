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

// protospoof: command-line front end for the spoofing countermeasure
// pipeline. Exit status: 0 ok, 1 runtime error, 2 usage error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "protospoof/core/runtime.hpp"
#include "protospoof/data/synth.hpp"
#include "protospoof/data/synth_check.hpp"
#include "protospoof/pipeline.hpp"

#ifndef PROTOSPOOF_DATA_DIR
#define PROTOSPOOF_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace protospoof;

namespace {

const std::map<std::string, data::MissingAudio> kMissingAudio{
    {"ignore", data::MissingAudio::ignore},
    {"warn", data::MissingAudio::warn},
    {"error", data::MissingAudio::error}};

struct Common {
  int jobs = 1;
  data::MissingAudio missing = data::MissingAudio::error;
};

void add_jobs(CLI::App* cmd, Common& c) {
  cmd->add_option("--jobs,-j", c.jobs, "Worker threads for per-utterance stages")
      ->check(CLI::Range(1, 1024))
      ->capture_default_str();
}

void add_missing(CLI::App* cmd, Common& c) {
  cmd->add_option("--missing-audio", c.missing, "Manifest rows whose audio is absent: ignore|warn|error")
      ->transform(CLI::CheckedTransformer(kMissingAudio))
      ->capture_default_str();
}

std::string default_profiles() {
  return (fs::path(PROTOSPOOF_DATA_DIR) / "synth_profiles_v1.json").string();
}

// ---- gen-synth ----

struct GenSynthArgs {
  std::string out_dir, profiles = default_profiles();
  data::SynthSpec spec;
  bool self_test = false;
  Common common;
};

int run_gen_synth(const GenSynthArgs& a) {
  const auto profiles = data::load_profiles(a.profiles);
  if (a.self_test) {
    bool ok = true;
    for (const auto& r : data::separability_check(a.spec, profiles, 100, a.common.jobs)) {
      std::printf("separability %s: fit accuracy %.3f, held-out accuracy %.3f\n", r.attack_id.c_str(),
                  r.train_accuracy, r.heldout_accuracy);
      ok = ok && r.train_accuracy >= 0.9;
    }
    if (!ok) {
      std::cerr << "gen-synth: separability self-test failed\n";
      return 1;
    }
  }
  const auto m = data::gen_synth(a.spec, profiles, a.out_dir, a.common.jobs);
  const auto path = (fs::path(a.out_dir) / "manifest.tsv").string();
  data::write_manifest(path, m);
  std::printf("wrote %zu utterances (%zu bonafide, %zu spoof) to %s\n", m.size(),
              m.count(data::Label::bonafide), m.count(data::Label::spoof), path.c_str());
  return 0;
}

// ---- augment ----

struct AugmentArgs {
  std::string manifest, out_dir, policy = "codec,pitch,reverb";
  std::uint64_t seed = 0;
  Common common;
};

int run_augment(const AugmentArgs& a) {
  const auto in = data::parse_manifest(a.manifest, a.common.missing);
  const auto policy = augment::AugmentPolicy::parse(a.policy);
  const auto out = augment::build_augmented_manifest(in, policy, a.seed, a.out_dir, a.common.jobs);
  fs::create_directories(a.out_dir);
  const auto path = (fs::path(a.out_dir) / "manifest.tsv").string();
  data::write_manifest(path, out);
  std::printf("wrote %zu utterances (%zu original) to %s\n", out.size(), in.size(), path.c_str());
  return 0;
}

// ---- extract-features ----

struct ExtractArgs {
  std::string manifest, out_dir, config;
  Common common;
};

int run_extract(const ExtractArgs& a) {
  const data::RunConfig rc = a.config.empty() ? data::RunConfig{} : data::load_run_config(a.config);
  const auto m = data::parse_manifest(a.manifest, a.common.missing);
  const auto set = pipeline::load_features(m, rc.frontend, a.out_dir, a.common.jobs);
  std::size_t frames = 0;
  for (const auto& f : set.features) frames += f.rows;
  std::printf("%zu utterances, %zu frames, %zu dims, cached in %s\n", set.size(), frames,
              set.features.empty() ? std::size_t(0) : set.features[0].cols, a.out_dir.c_str());
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string config, train_manifest, dev_manifest, out_dir, cache_dir;
  std::optional<std::uint64_t> seed;
  bool print_config = false;
  Common common;
};

data::RunConfig resolve_config(const std::string& path, const std::optional<std::uint64_t>& seed) {
  data::RunConfig rc = path.empty() ? data::RunConfig{} : data::load_run_config(path);
  if (seed) {
    rc.seed = *seed;
    rc.train.seed = *seed;
  }
  return rc;
}

int run_train(const TrainArgs& a) {
  const auto rc = resolve_config(a.config, a.seed);
  if (a.print_config) {
    std::cout << rc.to_toml();
    return 0;
  }
  const auto tm = data::parse_manifest(a.train_manifest, a.common.missing);
  const auto dm = data::parse_manifest(a.dev_manifest, a.common.missing);
  const auto t0 = std::chrono::steady_clock::now();
  const auto out = pipeline::train_run(rc, tm, dm, a.out_dir, a.common.jobs, &std::cerr, a.cache_dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("best dev accuracy %.4f at epoch %d (%.1f s)\ncheckpoint %s\nbank %s\nhistory %s\n",
              out.best_accuracy, out.best_epoch, secs, out.checkpoint.c_str(), out.bank.c_str(),
              out.history.c_str());
  return 0;
}

// ---- score ----

struct ScoreArgs {
  std::string checkpoint, bank, manifest, out, train_manifest, cache_dir;
  Common common;
};

int run_score(const ScoreArgs& a) {
  auto model = pipeline::load_model(a.checkpoint);
  eval::PrototypeBank bank;
  if (!a.train_manifest.empty()) {
    const auto tm = data::parse_manifest(a.train_manifest, a.common.missing);
    bank = pipeline::build_prototype_bank(model, a.checkpoint, tm, a.cache_dir, a.common.jobs);
    if (!a.bank.empty()) eval::save_bank(a.bank, bank);
  } else {
    if (a.bank.empty()) throw ConfigError("score needs --bank or --train-manifest");
    bank = eval::load_bank(a.bank);
  }
  const auto m = data::parse_manifest(a.manifest, a.common.missing);
  const auto scores = pipeline::score_manifest(model, bank, m, a.cache_dir, a.common.jobs);
  eval::write_scores(a.out, scores);
  std::printf("scored %zu utterances (%s distance) -> %s\n", scores.size(),
              bank.squared ? "squared" : "euclidean", a.out.c_str());
  return 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string cm, keys, asv, tdcf_config;
  bool json = false;
};

int run_evaluate(const EvaluateArgs& a) {
  const auto scores = eval::read_scores(a.cm);
  const auto keys = eval::read_cm_keys(a.keys);
  const eval::TdcfParams params =
      a.tdcf_config.empty() ? eval::TdcfParams{} : data::load_tdcf_params(a.tdcf_config);
  std::optional<eval::AsvScores> asv;
  if (!a.asv.empty()) asv = eval::read_asv_scores(a.asv);
  const auto r = pipeline::evaluate(scores, keys, params, asv);
  if (a.json) {
    std::cout << pipeline::to_json(r).dump(2) << "\n";
    return 0;
  }
  std::printf("trials     %zu bonafide, %zu spoof\n", r.n_bonafide, r.n_spoof);
  std::printf("EER        %.1f %%  (%.6f, threshold %.6g)\n", 100 * r.eer, r.eer, r.eer_threshold);
  std::printf("min-tDCF   %.6f  (threshold %.6g, ASV %s: Pmiss %.4f Pfa %.4f Pmiss_spoof %.4f)\n",
              r.min_tdcf, r.tdcf_threshold, r.asv_from_scores ? "from scores" : "fixed",
              r.asv.p_miss, r.asv.p_fa, r.asv.p_miss_spoof);
  return 0;
}

// ---- fuse ----

struct FuseArgs {
  std::vector<std::string> dev, apply, out;
  std::string dev_keys, weights_out;
};

int run_fuse(const FuseArgs& a) {
  if (a.dev.size() < 2) throw ConfigError("fuse needs at least two --dev score files");
  const std::size_t K = a.dev.size();
  if (a.apply.size() % K != 0)
    throw ConfigError("--apply takes groups of " + std::to_string(K) + " files (one per system)");
  if (a.out.size() != a.apply.size() / K)
    throw ConfigError("need one --out per --apply group (" + std::to_string(a.apply.size() / K) + ")");
  std::vector<eval::ScoreList> dev;
  for (const auto& p : a.dev) dev.push_back(eval::read_scores(p));
  std::vector<std::vector<eval::ScoreList>> targets(a.out.size());
  for (std::size_t i = 0; i < a.apply.size(); ++i) targets[i / K].push_back(eval::read_scores(a.apply[i]));
  const auto r = pipeline::fuse(dev, eval::read_cm_keys(a.dev_keys), targets);
  for (std::size_t g = 0; g < a.out.size(); ++g) eval::write_scores(a.out[g], r.fused[g]);
  nlohmann::json w = r.model;
  if (!a.weights_out.empty()) {
    std::ofstream os(a.weights_out);
    os << w.dump(2) << "\n";
    if (!os) throw DataError("cannot write " + a.weights_out);
  }
  std::cout << w.dump() << "\n";
  return 0;
}

// ---- export-embeddings ----

struct ExportArgs {
  std::string checkpoint, manifest, out, cache_dir;
  Common common;
};

int run_export(const ExportArgs& a) {
  auto model = pipeline::load_model(a.checkpoint);
  const auto m = data::parse_manifest(a.manifest, a.common.missing);
  const auto emb = pipeline::embed_manifest(model, m, a.cache_dir, a.common.jobs);
  pipeline::write_embeddings(a.out, m, emb);
  std::printf("exported %zu embeddings -> %s\n", emb.size(), a.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_allocator();
  CLI::App app{"Spoofing countermeasure toolkit: synthetic data, features, prototype training, scoring"};
  app.require_subcommand(0, 1);
  bool print_config = false;
  std::string print_config_from;
  app.add_flag("--print-config", print_config, "Print the full run configuration with defaults and exit");
  app.add_option("--config", print_config_from, "Config file to resolve for --print-config");

  GenSynthArgs gs;
  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic bonafide/spoof corpus");
  gen->add_option("--out-dir", gs.out_dir, "Output directory (wav/ and manifest.tsv)")->required();
  gen->add_option("--n-bonafide", gs.spec.n_bonafide, "Bonafide utterances")->capture_default_str();
  gen->add_option("--n-spoof", gs.spec.n_spoof, "Spoof utterances")->capture_default_str();
  gen->add_option("--min-duration", gs.spec.min_duration, "Shortest utterance (s)")->capture_default_str();
  gen->add_option("--max-duration", gs.spec.max_duration, "Longest utterance (s)")->capture_default_str();
  gen->add_option("--seed", gs.spec.seed, "Root seed")->capture_default_str();
  gen->add_option("--prefix", gs.spec.prefix, "Utterance id prefix")->capture_default_str();
  gen->add_option("--speakers", gs.spec.n_speakers, "Number of synthetic speakers")->capture_default_str();
  gen->add_option("--profiles", gs.profiles, "Spoof artifact profile file")->capture_default_str();
  gen->add_flag("--self-test", gs.self_test, "Run the mean-LFCC separability check first");
  add_jobs(gen, gs.common);

  AugmentArgs ag;
  auto* aug = app.add_subcommand("augment", "Write augmented copies and a merged manifest");
  aug->add_option("--manifest", ag.manifest, "Input manifest")->required();
  aug->add_option("--out-dir", ag.out_dir, "Output directory")->required();
  aug->add_option("--policy", ag.policy, "Comma list of codec, pitch, reverb")->capture_default_str();
  aug->add_option("--seed", ag.seed, "Root seed")->capture_default_str();
  add_jobs(aug, ag.common);
  add_missing(aug, ag.common);

  ExtractArgs ex;
  auto* ext = app.add_subcommand("extract-features", "Compute and cache features for a manifest");
  ext->add_option("--manifest", ex.manifest, "Manifest")->required();
  ext->add_option("--out-dir", ex.out_dir, "Feature cache directory")->required();
  ext->add_option("--config", ex.config, "Run config ([frontend] is used)");
  add_jobs(ext, ex.common);
  add_missing(ext, ex.common);

  TrainArgs tr;
  auto* trn = app.add_subcommand("train", "Train an embedding network");
  trn->add_option("--config", tr.config, "Run config (TOML)");
  trn->add_option("--train-manifest", tr.train_manifest, "Training manifest");
  trn->add_option("--dev-manifest", tr.dev_manifest, "Development manifest");
  trn->add_option("--out-dir", tr.out_dir, "Run directory");
  trn->add_option("--cache-dir", tr.cache_dir, "Feature cache (default <out-dir>/features)");
  trn->add_option("--seed", tr.seed, "Override the root seed");
  trn->add_flag("--print-config", tr.print_config, "Print the resolved config and exit");
  add_jobs(trn, tr.common);
  add_missing(trn, tr.common);

  ScoreArgs sc;
  auto* scr = app.add_subcommand("score", "Score a manifest against a prototype bank");
  scr->add_option("--checkpoint", sc.checkpoint, "Model checkpoint")->required();
  scr->add_option("--bank", sc.bank, "Prototype bank (written when --train-manifest is given)");
  scr->add_option("--manifest", sc.manifest, "Utterances to score")->required();
  scr->add_option("--out", sc.out, "Score file")->required();
  scr->add_option("--train-manifest", sc.train_manifest, "Rebuild the bank from this training list");
  scr->add_option("--cache-dir", sc.cache_dir, "Feature cache");
  add_jobs(scr, sc.common);
  add_missing(scr, sc.common);

  EvaluateArgs ev;
  auto* evl = app.add_subcommand("evaluate", "EER and min-tDCF of a score file");
  evl->add_option("--cm", ev.cm, "CM score file")->required();
  evl->add_option("--keys", ev.keys, "Keys (utt label) or manifest")->required();
  evl->add_option("--asv", ev.asv, "ASV score file (utt key score)");
  evl->add_option("--tdcf-config", ev.tdcf_config, "t-DCF priors/costs (TOML)");
  evl->add_flag("--json", ev.json, "Print a JSON report");

  FuseArgs fu;
  auto* fus = app.add_subcommand("fuse", "Linear-logistic score fusion");
  fus->add_option("--dev", fu.dev, "Dev score files, one per system")->required();
  fus->add_option("--dev-keys", fu.dev_keys, "Dev keys or manifest")->required();
  fus->add_option("--apply", fu.apply, "Target score files, systems in --dev order");
  fus->add_option("--out", fu.out, "Fused output file per --apply group");
  fus->add_option("--weights-out", fu.weights_out, "Write fusion weights (JSON)");

  ExportArgs xp;
  auto* exp = app.add_subcommand("export-embeddings", "Write per-utterance embeddings");
  exp->add_option("--checkpoint", xp.checkpoint, "Model checkpoint")->required();
  exp->add_option("--manifest", xp.manifest, "Manifest")->required();
  exp->add_option("--out", xp.out, "Output table")->required();
  exp->add_option("--cache-dir", xp.cache_dir, "Feature cache");
  add_jobs(exp, xp.common);
  add_missing(exp, xp.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (app.get_subcommands().empty()) std::cerr << "\n" << app.help();
    return 2;
  }

  try {
    if (print_config) {
      std::cout << resolve_config(print_config_from, std::nullopt).to_toml();
      return 0;
    }
    if (*gen) return run_gen_synth(gs);
    if (*aug) return run_augment(ag);
    if (*ext) return run_extract(ex);
    if (*trn) {
      if (!tr.print_config && (tr.train_manifest.empty() || tr.dev_manifest.empty() || tr.out_dir.empty())) {
        std::cerr << "train: --train-manifest, --dev-manifest and --out-dir are required\n"
                  << trn->help();
        return 2;
      }
      return run_train(tr);
    }
    if (*scr) return run_score(sc);
    if (*evl) return run_evaluate(ev);
    if (*fus) return run_fuse(fu);
    if (*exp) return run_export(xp);
    std::cerr << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
