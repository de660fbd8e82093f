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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "protospoof/data/config.hpp"
#include "protospoof/data/manifest.hpp"
#include "protospoof/data/synth.hpp"
#include "protospoof/data/synth_check.hpp"
#include "protospoof/dsp/wav.hpp"
#include "test_util.hpp"

namespace protospoof::data {
namespace {

namespace fs = std::filesystem;

const std::string kProfiles = std::string(PROTOSPOOF_DATA_DIR) + "/synth_profiles_v1.json";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Manifest, ParsesValidLines) {
  const auto m = parse_manifest_text(
      "# utt speaker attack label path\n"
      "LA_T_1 LA_0079 - bonafide wav/LA_T_1.flac\n"
      "LA_T_2\tLA_0079\tA01\tspoof\twav/LA_T_2.flac\n"
      "\n"
      "LA_T_3 LA_0080 A05 spoof /abs/LA_T_3.wav\n",
      "m", "/data");
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.records[1].attack_id, "A01");
  EXPECT_EQ(m.records[1].label, Label::spoof);
  EXPECT_EQ(m.audio_path(m.records[0]), "/data/wav/LA_T_1.flac");
  EXPECT_EQ(m.audio_path(m.records[2]), "/abs/LA_T_3.wav");
  EXPECT_EQ(m.count(Label::bonafide), 1u);
}

TEST(Manifest, ErrorsNameTheLine) {
  try {
    parse_manifest_text("a s - bonafide a.wav\nb s A01 spoofed b.wav\n", "m.tsv");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("m.tsv:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_manifest_text("a s A05 bonafide a.wav\n", "m"), DataError);
  EXPECT_THROW(parse_manifest_text("a s - spoof a.wav\n", "m"), DataError);
  EXPECT_THROW(parse_manifest_text("a s - bonafide a.wav\na s - bonafide b.wav\n", "m"), DataError);
  EXPECT_THROW(parse_manifest_text("a s - bonafide\n", "m"), DataError);
  EXPECT_THROW(parse_manifest_text("a s - bonafide missing.wav\n", "m", "/nonexistent",
                                   MissingAudio::error),
               DataError);
}

TEST(Manifest, SerializeParseRoundTrip) {
  Manifest m;
  for (int i = 0; i < 50; ++i) {
    ManifestRecord r;
    r.utt_id = "utt_" + std::to_string(i);
    r.speaker_id = "spk" + std::to_string(i % 7);
    r.label = i % 3 ? Label::spoof : Label::bonafide;
    r.attack_id = i % 3 ? "S0" + std::to_string(i % 4 + 1) : "-";
    r.audio_path = "wav/" + r.utt_id + ".wav";
    m.records.push_back(r);
  }
  const auto back = parse_manifest_text(serialize_manifest(m), "rt");
  EXPECT_EQ(back.records, m.records);
  EXPECT_EQ(serialize_manifest(back), serialize_manifest(m));
}

TEST(Config, DefaultsRoundTripThroughText) {
  RunConfig rc;
  rc.seed = 17;
  rc.loss.kind = loss::LossKind::oc_softmax;
  rc.net.stem_stride = 2;
  rc.train.learning_rate = 0.2;
  rc.frontend.max_freq_hz = 4000;
  const auto text = rc.to_toml();
  const auto back = parse_run_config(text);
  EXPECT_EQ(back.to_json(), rc.to_json());
  EXPECT_EQ(back.to_toml(), text);
  EXPECT_EQ(back.train.seed, 17u);
}

TEST(Config, PresetsAndOverrides) {
  const auto rc = parse_run_config(
      "seed = 3\n[net]\npreset = \"se_resnet34_avg\"\nembedding_dim = 64\n"
      "[train]\npreset = \"toy\"\nepochs = 2 # short\n");
  EXPECT_EQ(rc.net.pooling, model::Pooling::global_average);
  EXPECT_EQ(rc.net.embedding_dim, 64);
  EXPECT_EQ(rc.train.episodes_per_epoch, 50);
  EXPECT_EQ(rc.train.epochs, 2);
  EXPECT_EQ(rc.train.seed, 3u);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_run_config("[net]\nwidth = 3\n"), ConfigError);
  EXPECT_THROW(parse_run_config("[nets]\n"), ConfigError);
  EXPECT_THROW(parse_run_config("[loss]\nkind = \"hinge\"\n"), ConfigError);
  EXPECT_THROW(parse_run_config("[train]\nepochs = \"ten\"\n"), ConfigError);
  EXPECT_THROW(parse_run_config("[train]\nseed = 4\n"), ConfigError);
  EXPECT_THROW(parse_run_config("seed = -1\n"), ConfigError);
  EXPECT_THROW(parse_run_config("[tdcf]\np_spoof = 0.5\n"), ConfigError);
  EXPECT_THROW(parse_run_config("[frontend]\nn_filters = 20\nn_filters = 30\n"), ConfigError);
  EXPECT_THROW(parse_run_config("[frontend\n"), ConfigError);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"toy.toml", "toy_ocsoftmax.toml"}) {
    const auto rc = load_run_config(std::string(PROTOSPOOF_DATA_DIR) + "/../configs/" + name);
    EXPECT_EQ(rc.train.epochs, 20);
    EXPECT_EQ(rc.train.episodes_per_epoch, 50);
  }
  const auto p = load_tdcf_params(std::string(PROTOSPOOF_DATA_DIR) + "/../configs/tdcf.toml");
  EXPECT_DOUBLE_EQ(p.p_spoof, 0.05);
}

TEST(SynthProfiles, ShippedFileIsValid) {
  const auto p = load_profiles(kProfiles);
  EXPECT_EQ(p.version, 1);
  ASSERT_EQ(p.spoof.size(), 4u);
  EXPECT_EQ(p.spoof[0].attack_id, "S01");
  EXPECT_THROW(parse_profiles(nlohmann::json::parse(R"({"version":1,"profiles":[]})"), "x"), ConfigError);
}

TEST(GenSynth, CountContractAndDeterminism) {
  const auto profiles = load_profiles(kProfiles);
  SynthSpec spec;
  spec.seed = 21;
  const auto a_dir = testing::scratch_dir("synth_a"), b_dir = testing::scratch_dir("synth_b");
  const auto a = gen_synth(spec, profiles, a_dir, 2);
  const auto b = gen_synth(spec, profiles, b_dir, 1);
  ASSERT_EQ(a.size(), 200u);
  EXPECT_EQ(a.count(Label::bonafide), 100u);
  EXPECT_EQ(a.count(Label::spoof), 100u);
  std::size_t wavs = 0;
  for (const auto& e : fs::directory_iterator(fs::path(a_dir) / "wav")) wavs += e.path().extension() == ".wav";
  EXPECT_EQ(wavs, 200u);
  std::map<std::string, int> per_attack;
  for (const auto& r : a.records) {
    ++per_attack[r.attack_id];
    const auto w = dsp::read_wav(a.audio_path(r));
    const double dur = double(w.samples.size()) / w.sample_rate;
    EXPECT_GE(dur, spec.min_duration - 1e-3);
    EXPECT_LE(dur, spec.max_duration + 1e-3);
  }
  EXPECT_EQ(per_attack["S01"], 25);
  EXPECT_EQ(per_attack["S04"], 25);
  EXPECT_EQ(serialize_manifest(a), serialize_manifest(b));
  for (std::size_t i = 0; i < a.size(); ++i)
    ASSERT_EQ(slurp(a.audio_path(a.records[i])), slurp(b.audio_path(b.records[i]))) << a.records[i].utt_id;
  SynthSpec other = spec;
  other.seed = 22;
  other.n_bonafide = 1;
  other.n_spoof = 0;
  const auto c = gen_synth(other, profiles, testing::scratch_dir("synth_c"));
  EXPECT_NE(slurp(c.audio_path(c.records[0])), slurp(a.audio_path(a.records[0])));
}

TEST(GenSynth, ClassesNotSeparableByLevelAlone) {
  const auto profiles = load_profiles(kProfiles);
  SynthSpec spec;
  spec.seed = 5;
  spec.n_bonafide = 40;
  spec.n_spoof = 40;
  const auto m = gen_synth(spec, profiles, testing::scratch_dir("synth_level"));
  double level[2] = {0, 0};
  for (const auto& r : m.records) {
    const auto w = dsp::read_wav(m.audio_path(r));
    double e = 0;
    for (double v : w.samples) e += v * v;
    level[r.label == Label::spoof] += 10 * std::log10(e / double(w.samples.size())) / 40;
  }
  EXPECT_LT(std::abs(level[0] - level[1]), 3.0);
}

TEST(GenSynth, EveryProfilePassesSeparabilitySelfTest) {
  SynthSpec spec;
  spec.seed = 1;
  for (const auto& r : separability_check(spec, load_profiles(kProfiles), 100, 2)) {
    EXPECT_GE(r.train_accuracy, 0.9) << r.attack_id;
    EXPECT_GE(r.heldout_accuracy, 0.8) << r.attack_id;
  }
}

}  // namespace
}  // namespace protospoof::data
