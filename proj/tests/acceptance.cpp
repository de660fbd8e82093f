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

// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Criteria 8-11 share one toy corpus and its trained systems.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "grad_cases.hpp"
#include "oracles.hpp"
#include "protospoof/augment/augment.hpp"
#include "protospoof/core/runtime.hpp"
#include "protospoof/data/synth.hpp"
#include "protospoof/dsp/frontend.hpp"
#include "protospoof/loss/losses.hpp"
#include "protospoof/pipeline.hpp"
#include "protospoof/train/episode.hpp"

namespace {

using namespace protospoof;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---- 1: gradients ----

Outcome gradients() {
  const auto t0 = Clock::now();
  double worst_op = 0;
  std::string worst_name;
  std::size_t n_ops = 0;
  for (auto& c : testing::op_grad_cases(11)) {
    const auto r = grad_check<double>(c.build, c.seeds, 1e-5);
    ++n_ops;
    if (r.max_rel_error > worst_op) {
      worst_op = r.max_rel_error;
      worst_name = c.name;
    }
  }
  double worst_net = 0;
  for (bool train : {true, false}) {
    model::NetConfig cfg = model::NetConfig::preset("test");
    cfg.embedding_dim = 8;
    cfg.attention_hidden = 6;
    model::EmbeddingNet<double> net(cfg, 4);
    net.set_training(train);
    std::mt19937_64 rng(4);
    const auto x = testing::random_tensor({3, 1, 16, 12}, rng);
    const auto r = grad_check_parameters<double>(
        net.parameters().trainable(),
        [&](Graph<double>& g) { return testing::probe(net.forward(g, g.constant(x)), 17); }, 1e-6,
        1e-6, 8);
    worst_net = std::max(worst_net, r.max_rel_error);
  }
  const double secs = seconds_since(t0);
  return {worst_op < 1e-4 && worst_net < 1e-3 && secs < 120,
          fmt("%zu op cases, worst %.2e (%s); full net %.2e; %.1f s", n_ops, worst_op,
              worst_name.c_str(), worst_net, secs)};
}

// ---- 2, 3: posterior, loss, prototypes ----

Outcome posterior() {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> dim(1, 16), nq(1, 6);
  double worst_sum = 0, worst_direct = 0, worst_sym = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto d = std::size_t(dim(rng)), n = std::size_t(nq(rng));
    const auto q = testing::random_tensor({n, d}, rng, -2, 2);
    const auto p = testing::random_tensor({2, d}, rng, -2, 2);
    Graph<double> g(false);
    const auto post = loss::protonet_posterior(g.constant(q), g.constant(p)).value();
    for (std::size_t i = 0; i < n; ++i) {
      double e[2];
      for (std::size_t k = 0; k < 2; ++k) {
        double s = 0;
        for (std::size_t j = 0; j < d; ++j) s += std::pow(q.at(i, j) - p.at(k, j), 2);
        e[k] = std::exp(-s);
      }
      worst_sum = std::max(worst_sum, std::abs(post.at(i, 0) + post.at(i, 1) - 1));
      for (std::size_t k = 0; k < 2; ++k)
        worst_direct = std::max(worst_direct, std::abs(post.at(i, k) - e[k] / (e[0] + e[1])));
    }
    // Query at the midpoint of the two prototypes.
    Tensor<double> mid({1, d});
    for (std::size_t j = 0; j < d; ++j) mid[j] = 0.5 * (p.at(0, j) + p.at(1, j));
    const auto ps = loss::protonet_posterior(g.constant(mid), g.constant(p)).value();
    worst_sym = std::max({worst_sym, std::abs(ps[0] - 0.5), std::abs(ps[1] - 0.5)});
  }
  return {worst_sum < 1e-9 && worst_direct < 1e-12 && worst_sym < 1e-12,
          fmt("1000 instances: |sum-1| %.1e, vs direct %.1e, symmetric %.1e", worst_sum,
              worst_direct, worst_sym)};
}

Outcome symmetric_loss_and_prototypes() {
  std::mt19937_64 rng(31);
  double worst_loss = 0, worst_proto = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = testing::random_tensor({1, 8}, rng), off = testing::random_tensor({1, 8}, rng);
    Tensor<double> p({2, 8});
    for (std::size_t j = 0; j < 8; ++j) {
      p.at(0, j) = c[j] + off[j];
      p.at(1, j) = c[j] - off[j];
    }
    Graph<double> g(false);
    const double l = loss::prototypical_loss(g.constant(c), g.constant(p), {std::size_t(trial % 2)}).value()[0];
    worst_loss = std::max(worst_loss, std::abs(l - std::numbers::ln2));

    const auto e = testing::random_tensor({12, 5}, rng, -3, 3);
    std::vector<std::vector<std::size_t>> groups(2);
    for (std::size_t i = 0; i < 12; ++i) groups[(i + std::size_t(trial)) % 3 == 0].push_back(i);
    const auto protos = loss::compute_prototypes(g.constant(e), groups).value();
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t j = 0; j < 5; ++j) {
        double s = 0;
        for (std::size_t i : groups[k]) s += e.at(i, j);
        worst_proto = std::max(worst_proto, std::abs(protos.at(k, j) - s / double(groups[k].size())));
      }
  }
  return {worst_loss < 1e-12 && worst_proto < 1e-12,
          fmt("|loss - ln2| %.1e, |prototype - mean| %.1e", worst_loss, worst_proto)};
}

// ---- 4: episodes ----

Outcome episodes() {
  const auto cfg = train::TrainConfig::preset("asvspoof2019");
  std::vector<std::vector<std::size_t>> by_class(2);
  for (std::size_t i = 0; i < 300; ++i) {
    by_class[0].push_back(i);
    by_class[1].push_back(300 + i);
  }
  std::mt19937_64 a(41), b(41);
  bool disjoint = true, sized = true, same = true;
  for (int e = 0; e < 1000; ++e) {
    const auto ea = train::sample_episode(by_class, std::size_t(cfg.n_support), std::size_t(cfg.n_query), a);
    const auto eb = train::sample_episode(by_class, std::size_t(cfg.n_support), std::size_t(cfg.n_query), b);
    sized = sized && ea.size() == 80;
    same = same && ea.support == eb.support && ea.query == eb.query;
    for (std::size_t k = 0; k < 2; ++k) {
      std::set<std::size_t> s(ea.support[k].begin(), ea.support[k].end());
      for (std::size_t i : ea.query[k]) disjoint = disjoint && !s.count(i);
      disjoint = disjoint && s.size() == ea.support[k].size();
    }
  }
  return {disjoint && sized && same,
          fmt("1000 episodes: disjoint %s, size 80 %s, seed-reproducible %s", disjoint ? "yes" : "no",
              sized ? "yes" : "no", same ? "yes" : "no")};
}

// ---- 5, 6: EER and min-tDCF ----

std::vector<double> draw_scores(std::mt19937_64& rng, std::size_t n, double mean, bool coarse) {
  std::normal_distribution<double> g(mean, 1);
  std::vector<double> v(n);
  for (auto& x : v) x = coarse ? std::round(g(rng) * 2) / 2 : g(rng);
  return v;
}

Outcome eer_oracle() {
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<std::size_t> size(3, 50);
  double worst = 0;
  bool exact = true;
  for (int t = 0; t < 200; ++t) {
    const auto b = draw_scores(rng, size(rng), 1.0, t % 3 == 0);
    const auto s = draw_scores(rng, size(rng), 0.0, t % 3 == 0);
    const double got = eval::compute_eer(b, s).eer, ref = oracle::brute_eer(b, s);
    worst = std::max(worst, std::abs(got - ref));
    // When the sweep lands on an operating point the two must agree bit for bit.
    for (double th : oracle::candidate_thresholds(b, s))
      if (oracle::miss_at(b, th) == oracle::fa_at(s, th) && ref == oracle::miss_at(b, th))
        exact = exact && got == ref;
  }
  const double perfect = eval::compute_eer({2, 3, 4}, {-1, 0, 1}).eer;
  const auto same = draw_scores(rng, 40, 0, false);
  const double chance = eval::compute_eer(same, same).eer;
  return {worst < 1e-12 && exact && perfect == 0 && std::abs(chance - 0.5) < 1e-12,
          fmt("200 sets: max |diff| %.1e, exact at operating points %s; perfect %.3f; identical %.3f",
              worst, exact ? "yes" : "no", perfect, chance)};
}

Outcome tdcf_oracle() {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<std::size_t> size(5, 30);
  double worst_ref = 0, worst_mono = 0;
  for (int i = 0; i < 50; ++i) {
    const auto b = draw_scores(rng, size(rng), 3 * u(rng), i % 4 == 0);
    const auto s = draw_scores(rng, size(rng), 0.0, i % 4 == 0);
    eval::TdcfParams p;
    p.variant = i % 2 ? eval::TdcfVariant::asvspoof2021 : eval::TdcfVariant::asvspoof2019;
    p.p_spoof = 0.01 + 0.2 * u(rng);
    p.p_target = (1 - p.p_spoof) * (0.8 + 0.19 * u(rng));
    p.p_nontarget = 1 - p.p_spoof - p.p_target;
    p.c_fa_cm = 1 + 9 * u(rng);
    p.c_fa_asv = 1 + 9 * u(rng);
    eval::AsvErrors a{0.05 * u(rng), 0.05 * u(rng), 0.5 * u(rng)};
    const double got = eval::min_tdcf(b, s, p, a).min_tdcf;
    worst_ref = std::max(worst_ref, std::abs(got - oracle::reference_tdcf(b, s, p, a)));
    for (int k = 0; k < 3; ++k) {
      auto f = [k](double x) { return k == 0 ? 3 * x - 7 : k == 1 ? std::exp(0.5 * x) : x * x * x; };
      auto tb = b, ts = s;
      for (auto& x : tb) x = f(x);
      for (auto& x : ts) x = f(x);
      worst_mono = std::max(worst_mono, std::abs(eval::min_tdcf(tb, ts, p, a).min_tdcf - got));
    }
  }
  return {worst_ref < 1e-10 && worst_mono < 1e-12,
          fmt("50 sets: vs reference %.1e, under monotone maps %.1e", worst_ref, worst_mono)};
}

// ---- 7: DSP ----

Outcome dsp_properties() {
  std::vector<std::string> failures;
  dsp::FrontendConfig fc;
  for (std::size_t n = 320; n < 40000; n += 97) {
    dsp::Waveform w;
    w.samples.assign(n, 0.01);
    if (dsp::frame_signal(w, fc).size() != (n - 320) / 160 + 1) failures.push_back("frame count " + std::to_string(n));
  }
  std::mt19937_64 rng(71);
  for (std::size_t T : {1u, 5u, 299u, 749u, 750u, 751u, 1000u, 3000u}) {
    dsp::FeatureMatrix m(T, 3, 1.0);
    if (dsp::fix_length(m, 750, rng).rows != 750) failures.push_back("fix_length " + std::to_string(T));
  }
  for (int c = 0; c < 256; ++c)
    if (augment::alaw_to_linear(std::uint8_t(c)) != oracle::alaw_law_decode(c) ||
        augment::linear_to_alaw(augment::alaw_to_linear(std::uint8_t(c))) != c)
      failures.push_back("a-law code " + std::to_string(c));
  dsp::Waveform tone;
  tone.samples.resize(16000);
  for (std::size_t i = 0; i < 16000; ++i) tone.samples[i] = 0.5 * std::sin(2 * std::numbers::pi * 440 * double(i) / 16000);
  double worst_pitch = 0;
  for (int cents : {-300, -100, 100, 300, 1200}) {
    const double expect = 440 * std::exp2(cents / 1200.0);
    const double got = oracle::peak_hz(augment::pitch_shift(tone, cents).samples, expect * 0.9, expect * 1.1);
    worst_pitch = std::max(worst_pitch, std::abs(got / expect - 1));
  }
  if (worst_pitch >= 0.01) failures.push_back("pitch");
  double prev = 0;
  for (double s = 10; s <= 90; s += 10) {
    const double t = oracle::schroeder_t60(augment::make_rir(s, 16000, 7).taps);
    if (!(t > prev)) failures.push_back("reverb T60 at " + std::to_string(int(s)));
    prev = t;
  }
  std::string detail = fmt("frame count, fix_length, 256 a-law codes, pitch worst %.3f%%, T60 monotone",
                           100 * worst_pitch);
  for (const auto& f : failures) detail += "; failed " + f;
  return {failures.empty(), detail};
}

// ---- 8-11: toy runs ----

struct System {
  std::string dir;
  double dev_accuracy = 0;
  double dev_eer = 0, eval_eer = 0, eval_tdcf = 0;
  eval::ScoreList dev_scores, eval_scores;
  double seconds = 0;
};

struct Corpus {
  data::Manifest train, dev, eval;
};

class ToyRuns {
 public:
  ToyRuns(std::string work, int jobs) : work_(std::move(work)), jobs_(jobs) {}

  Corpus make_corpus(const std::string& dir) {
    const auto profiles = data::load_profiles(std::string(PROTOSPOOF_DATA_DIR) + "/synth_profiles_v1.json");
    auto gen = [&](const char* name, std::size_t n, std::uint64_t seed, const char* prefix) {
      data::SynthSpec spec;
      spec.n_bonafide = spec.n_spoof = n;
      spec.seed = seed;
      spec.prefix = prefix;
      const auto out = (fs::path(dir) / name).string();
      auto m = data::gen_synth(spec, profiles, out, jobs_);
      data::write_manifest(out + "/manifest.tsv", m);
      return m;
    };
    return {gen("train", 100, 11, "tr"), gen("dev", 50, 12, "dv"), gen("eval", 100, 13, "ev")};
  }

  System run_system(const std::string& name, const std::string& config, const data::Manifest& train,
                    const Corpus& c, const std::string& root) {
    const auto t0 = Clock::now();
    System s;
    s.dir = (fs::path(root) / name).string();
    fs::remove_all(s.dir);
    const auto rc = data::load_run_config(std::string(PROTOSPOOF_SOURCE_DIR) + "/configs/" + config);
    std::ofstream log(s.dir + ".log");
    const auto out = pipeline::train_run(rc, train, c.dev, s.dir, jobs_, &log);
    s.dev_accuracy = out.best_accuracy;
    auto model = pipeline::load_model(out.checkpoint);
    const auto bank = eval::load_bank(out.bank);
    const auto cache = s.dir + "/features";
    s.dev_scores = pipeline::score_manifest(model, bank, c.dev, cache, jobs_);
    s.eval_scores = pipeline::score_manifest(model, bank, c.eval, cache, jobs_);
    eval::write_scores(s.dir + "/dev_scores.txt", s.dev_scores);
    eval::write_scores(s.dir + "/eval_scores.txt", s.eval_scores);
    const eval::TdcfParams params;
    s.dev_eer = pipeline::evaluate(s.dev_scores, eval::keys_from_manifest(c.dev), params).eer;
    const auto r = pipeline::evaluate(s.eval_scores, eval::keys_from_manifest(c.eval), params);
    s.eval_eer = r.eer;
    s.eval_tdcf = r.min_tdcf;
    s.seconds = seconds_since(t0);
    return s;
  }

  Outcome toy_run() {
    const auto t0 = Clock::now();
    corpus_ = make_corpus(work_ + "/corpus");
    proto_ = run_system("proto", "toy.toml", corpus_.train, corpus_, work_);
    const double wall = seconds_since(t0);
    oc_ = run_system("ocsoftmax", "toy_ocsoftmax.toml", corpus_.train, corpus_, work_);
    have_systems_ = true;
    const bool ok = proto_.eval_eer <= 0.05 && proto_.dev_accuracy >= 0.95 && wall < 600 &&
                    oc_.eval_eer <= 0.05;
    return {ok, fmt("prototypical: eval EER %.2f%% (min-tDCF %.4f), dev acc %.3f, %.0f s end to end "
                    "on %u hw threads; OC-softmax: eval EER %.2f%%, dev acc %.3f",
                    100 * proto_.eval_eer, proto_.eval_tdcf, proto_.dev_accuracy, wall,
                    std::thread::hardware_concurrency(), 100 * oc_.eval_eer, oc_.dev_accuracy)};
  }

  Outcome augmented() {
    if (!have_systems_) corpus_ = make_corpus(work_ + "/corpus");
    const auto dir = work_ + "/augmented_corpus";
    fs::remove_all(dir);
    const auto m = augment::build_augmented_manifest(
        corpus_.train, augment::AugmentPolicy::parse("codec,pitch,reverb"), 11, dir, jobs_);
    data::write_manifest(dir + "/manifest.tsv", m);
    std::map<std::string, data::ManifestRecord> orig;
    for (const auto& r : corpus_.train.records) orig[r.utt_id] = r;
    bool labels_kept = true;
    for (const auto& r : m.records) {
      const auto base = orig.count(r.utt_id) ? r.utt_id : r.utt_id.substr(0, r.utt_id.rfind('_'));
      auto it = orig.find(base);
      labels_kept = labels_kept && it != orig.end() && it->second.label == r.label &&
                    it->second.attack_id == r.attack_id;
    }
    const auto reloaded = data::parse_manifest(dir + "/manifest.tsv", data::MissingAudio::error);
    const bool five_fold = reloaded.size() == 5 * corpus_.train.size();
    const auto s = run_system("augmented", "toy.toml", reloaded, corpus_, work_);
    return {labels_kept && five_fold && s.eval_eer <= 0.08,
            fmt("%zu -> %zu utterances, labels kept %s; eval EER %.2f%%, dev acc %.3f",
                corpus_.train.size(), reloaded.size(), labels_kept ? "yes" : "no", 100 * s.eval_eer,
                s.dev_accuracy)};
  }

  Outcome fusion() {
    if (!have_systems_) return {false, "needs the criterion 8 systems"};
    const auto dev_keys = eval::keys_from_manifest(corpus_.dev);
    const auto eval_keys = eval::keys_from_manifest(corpus_.eval);
    const eval::TdcfParams params;
    const auto fused = pipeline::fuse({proto_.dev_scores, oc_.dev_scores}, dev_keys,
                                      {{proto_.eval_scores, oc_.eval_scores}});
    eval::write_scores(work_ + "/fused_eval_scores.txt", fused.fused[0]);
    const double eer = pipeline::evaluate(fused.fused[0], eval_keys, params).eer;
    const double best_single = std::min(proto_.eval_eer, oc_.eval_eer);
    const auto self = pipeline::fuse({proto_.dev_scores, proto_.dev_scores}, dev_keys,
                                     {{proto_.eval_scores, proto_.eval_scores}});
    const double self_eer = pipeline::evaluate(self.fused[0], eval_keys, params).eer;
    return {eer <= best_single + 0.01 && self_eer == proto_.eval_eer,
            fmt("fused eval EER %.2f%% vs best single %.2f%% (weights %.3g, %.3g); self-fusion "
                "%.2f%% vs %.2f%%",
                100 * eer, 100 * best_single, fused.model.weights[0], fused.model.weights[1],
                100 * self_eer, 100 * proto_.eval_eer)};
  }

  Outcome reproducibility() {
    if (!have_systems_) return {false, "needs the criterion 8 systems"};
    const auto root = work_ + "/repeat";
    fs::remove_all(root);
    const auto c = make_corpus(root + "/corpus");
    const auto again = run_system("proto", "toy.toml", c.train, c, root);
    auto slurp = [](const std::string& p) {
      std::ifstream in(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(in), {});
    };
    bool same = true;
    for (const char* f : {"/dev_scores.txt", "/eval_scores.txt"}) {
      const auto a = slurp(proto_.dir + f), b = slurp(again.dir + f);
      same = same && !a.empty() && a == b;
    }
    return {same, fmt("independent rerun from corpus generation: dev and eval score files %s",
                      same ? "byte-identical" : "differ")};
  }

 private:
  std::string work_;
  int jobs_;
  Corpus corpus_;
  System proto_, oc_;
  bool have_systems_ = false;
};

}  // namespace

int main(int argc, char** argv) {
  configure_allocator();
  CLI::App app{"Acceptance criteria runner"};
  std::string work_dir = "acceptance_work";
  int jobs = int(std::max(1u, std::thread::hardware_concurrency()));
  std::vector<int> only;
  app.add_option("--work-dir", work_dir, "Scratch directory for the toy runs")->capture_default_str();
  app.add_option("--jobs", jobs, "Worker threads for data preparation")->capture_default_str();
  app.add_option("--only", only, "Run only these criteria (1-11)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  fs::create_directories(work_dir);
  ToyRuns toy(work_dir, jobs);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradients},
      {"prototype posterior", posterior},
      {"symmetric loss and prototype means", symmetric_loss_and_prototypes},
      {"episode sampling", episodes},
      {"EER oracle", eer_oracle},
      {"min-tDCF oracle", tdcf_oracle},
      {"DSP properties", dsp_properties},
      {"toy end-to-end run", [&] { return toy.toy_run(); }},
      {"augmented toy run", [&] { return toy.augmented(); }},
      {"score fusion", [&] { return toy.fusion(); }},
      {"reproducibility", [&] { return toy.reproducibility(); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = int(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d %-36s %s  %s\n", id, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
