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
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "protospoof/data/config.hpp"
#include "protospoof/data/manifest.hpp"
#include "test_util.hpp"

namespace {

namespace fs = std::filesystem;

struct Result {
  int status = -1;
  std::string output;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(PROTOSPOOF_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  for (std::size_t n; (n = fread(buf.data(), 1, buf.size(), p)) > 0;) r.output.append(buf.data(), n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  const auto r = run("frobnicate");
  EXPECT_EQ(r.status, 2) << r.output;
  EXPECT_NE(r.output.find("gen-synth"), std::string::npos) << r.output;
}

TEST(Cli, MissingRequiredAndUnknownFlagsAreUsageErrors) {
  EXPECT_EQ(run("evaluate --cm x.txt").status, 2);
  EXPECT_EQ(run("score --bogus 1").status, 2);
  EXPECT_EQ(run("gen-synth --n-bonafide ten --out-dir /tmp/x").status, 2);
}

TEST(Cli, HelpListsFlagsPerSubcommand) {
  const auto top = run("--help");
  EXPECT_EQ(top.status, 0);
  for (const char* sub : {"gen-synth", "augment", "extract-features", "train", "score", "evaluate",
                          "fuse", "export-embeddings"})
    EXPECT_NE(top.output.find(sub), std::string::npos) << sub;
  const auto ev = run("evaluate --help");
  EXPECT_EQ(ev.status, 0);
  EXPECT_NE(ev.output.find("--tdcf-config"), std::string::npos);
  const auto tr = run("train --help");
  EXPECT_NE(tr.output.find("--dev-manifest"), std::string::npos);
}

TEST(Cli, EvaluatePerfectScoresPrintsZeroEer) {
  const auto dir = protospoof::testing::scratch_dir("cli_eval");
  std::ofstream(dir + "/scores.txt") << "a\t3\nb\t2.5\nc\t-1\nd\t-4\n";
  std::ofstream(dir + "/keys.txt") << "a bonafide\nb bonafide\nc spoof\nd spoof\n";
  const auto r = run("evaluate --cm " + dir + "/scores.txt --keys " + dir + "/keys.txt");
  EXPECT_EQ(r.status, 0) << r.output;
  EXPECT_NE(r.output.find("EER        0.0 %"), std::string::npos) << r.output;
  const auto j = run("evaluate --json --cm " + dir + "/scores.txt --keys " + dir + "/keys.txt");
  EXPECT_EQ(nlohmann::json::parse(j.output)["eer"], 0.0);
}

TEST(Cli, RuntimeErrorsExitOne) {
  const auto dir = protospoof::testing::scratch_dir("cli_err");
  std::ofstream(dir + "/scores.txt") << "a\t3\nb\t2.5\n";
  std::ofstream(dir + "/keys.txt") << "a bonafide\n";
  const auto r = run("evaluate --cm " + dir + "/scores.txt --keys " + dir + "/keys.txt");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.output.find("b"), std::string::npos);
  EXPECT_EQ(run("evaluate --cm /nonexistent --keys /nonexistent").status, 1);
  std::ofstream(dir + "/bad.toml") << "[net]\nwidth = 3\n";
  const auto c = run("--print-config --config " + dir + "/bad.toml");
  EXPECT_EQ(c.status, 1);
  EXPECT_NE(c.output.find("width"), std::string::npos);
}

TEST(Cli, PrintConfigRoundTrips) {
  const auto r = run("--print-config");
  ASSERT_EQ(r.status, 0) << r.output;
  const auto rc = protospoof::data::parse_run_config(r.output);
  EXPECT_EQ(rc.to_toml(), r.output);
  const auto t = run("--print-config --config " + std::string(PROTOSPOOF_SOURCE_DIR) + "/configs/toy.toml");
  EXPECT_NE(t.output.find("episodes_per_epoch = 50"), std::string::npos) << t.output;
}

TEST(Cli, TinyPipelineEndToEnd) {
  const auto dir = protospoof::testing::scratch_dir("cli_pipe");
  const std::string gen = " --n-bonafide 8 --n-spoof 8 --min-duration 0.5 --max-duration 0.8";
  ASSERT_EQ(run("gen-synth --out-dir " + dir + "/train --seed 1 --prefix tr" + gen).status, 0);
  ASSERT_EQ(run("gen-synth --out-dir " + dir + "/dev --seed 2 --prefix dv" + gen).status, 0);
  std::ofstream(dir + "/run.toml")
      << "seed = 4\n[net]\npreset = \"test\"\nstem_stride = 2\nembedding_dim = 16\n"
         "[train]\npreset = \"toy\"\nepochs = 2\nepisodes_per_epoch = 2\nn_support = 2\nn_query = 2\n";
  const auto ex = run("extract-features --manifest " + dir + "/train/manifest.tsv --out-dir " + dir +
                      "/feats --config " + dir + "/run.toml");
  ASSERT_EQ(ex.status, 0) << ex.output;
  const auto tr = run("train --config " + dir + "/run.toml --train-manifest " + dir +
                      "/train/manifest.tsv --dev-manifest " + dir + "/dev/manifest.tsv --out-dir " +
                      dir + "/run --cache-dir " + dir + "/feats");
  ASSERT_EQ(tr.status, 0) << tr.output;
  EXPECT_TRUE(fs::exists(dir + "/run/best.ckpt"));
  EXPECT_TRUE(fs::exists(dir + "/run/config.toml"));

  const std::string score = "score --checkpoint " + dir + "/run/best.ckpt --bank " + dir +
                            "/run/bank.json --manifest " + dir + "/dev/manifest.tsv --cache-dir " +
                            dir + "/feats --out ";
  ASSERT_EQ(run(score + dir + "/s1.txt").status, 0);
  ASSERT_EQ(run(score + dir + "/s2.txt").status, 0);
  EXPECT_EQ(slurp(dir + "/s1.txt"), slurp(dir + "/s2.txt"));
  const auto ev = run("evaluate --cm " + dir + "/s1.txt --keys " + dir + "/dev/manifest.tsv");
  EXPECT_EQ(ev.status, 0) << ev.output;
  EXPECT_NE(ev.output.find("trials     8 bonafide, 8 spoof"), std::string::npos) << ev.output;

  const std::string exp = "export-embeddings --checkpoint " + dir + "/run/best.ckpt --manifest " +
                          dir + "/dev/manifest.tsv --out ";
  ASSERT_EQ(run(exp + dir + "/e1.tsv").status, 0);
  ASSERT_EQ(run(exp + dir + "/e2.tsv").status, 0);
  const auto table = slurp(dir + "/e1.tsv");
  EXPECT_EQ(table, slurp(dir + "/e2.tsv"));
  std::istringstream rows(table);
  std::size_t n = 0;
  for (std::string line; std::getline(rows, line); ++n) {
    std::istringstream f(line);
    std::size_t cols = 0;
    for (std::string tok; f >> tok;) ++cols;
    EXPECT_EQ(cols, 3u + 16u);
  }
  EXPECT_EQ(n, 16u);

  const auto fu = run("fuse --dev " + dir + "/s1.txt " + dir + "/s2.txt --dev-keys " + dir +
                      "/dev/manifest.tsv --apply " + dir + "/s1.txt " + dir + "/s2.txt --out " + dir +
                      "/fused.txt --weights-out " + dir + "/w.json");
  EXPECT_EQ(fu.status, 0) << fu.output;
  EXPECT_TRUE(fs::exists(dir + "/fused.txt"));

  const auto ag = run("augment --manifest " + dir + "/dev/manifest.tsv --out-dir " + dir +
                      "/aug --policy codec,pitch,reverb --seed 3");
  ASSERT_EQ(ag.status, 0) << ag.output;
  EXPECT_EQ(protospoof::data::parse_manifest(dir + "/aug/manifest.tsv").size(), 80u);
}

}  // namespace
