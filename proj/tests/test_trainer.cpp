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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "protospoof/core/grad_check.hpp"
#include "protospoof/train/trainer.hpp"
#include "test_util.hpp"

namespace protospoof::train {
namespace {

std::vector<std::vector<std::size_t>> classes(std::size_t per_class) {
  std::vector<std::vector<std::size_t>> c(2);
  for (std::size_t i = 0; i < per_class; ++i) {
    c[0].push_back(i);
    c[1].push_back(per_class + i);
  }
  return c;
}

// Two Gaussian clouds in feature space, offset by +-shift on every coefficient.
FeatureSet toy_features(std::size_t per_class, std::size_t frames, std::size_t dims, double shift,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0, 1);
  FeatureSet set;
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < per_class; ++i) {
      dsp::FeatureMatrix f(frames, dims);
      for (auto& v : f.data) v = (k == 0 ? shift : -shift) + noise(rng);
      set.add((k ? "s" : "b") + std::to_string(i), k ? "S01" : "-", k, std::move(f));
    }
  return set;
}

model::NetConfig tiny_net() {
  model::NetConfig c = model::NetConfig::preset("test");
  c.embedding_dim = 8;
  c.attention_hidden = 8;
  return c;
}

TEST(Episode, PresetEpisodesAreDisjointAndSized) {
  const auto cfg = TrainConfig::preset("asvspoof2019");
  const auto by_class = classes(500);
  std::mt19937_64 rng(1);
  for (int e = 0; e < 1000; ++e) {
    const auto ep = sample_episode(by_class, std::size_t(cfg.n_support), std::size_t(cfg.n_query), rng);
    ASSERT_EQ(ep.size(), 80u);
    for (std::size_t k = 0; k < 2; ++k) {
      ASSERT_EQ(ep.support[k].size(), 20u);
      ASSERT_EQ(ep.query[k].size(), 20u);
      std::set<std::size_t> seen;
      for (std::size_t i : ep.support[k]) seen.insert(i);
      for (std::size_t i : ep.query[k]) seen.insert(i);
      ASSERT_EQ(seen.size(), 40u);
      for (std::size_t i : seen) ASSERT_TRUE(k == 0 ? i < 500 : i >= 500);
    }
  }
}

TEST(Episode, SameSeedSameEpisodes) {
  const auto by_class = classes(1000);
  std::mt19937_64 a(7), b(7), c(8);
  bool differs = false;
  for (int e = 0; e < 1000; ++e) {
    const auto ea = sample_episode(by_class, 20, 20, a), eb = sample_episode(by_class, 20, 20, b);
    const auto ec = sample_episode(by_class, 20, 20, c);
    ASSERT_EQ(ea.support, eb.support);
    ASSERT_EQ(ea.query, eb.query);
    differs = differs || ea.support != ec.support;
  }
  EXPECT_TRUE(differs);
}

TEST(Episode, ExactClassSizeIsExhausted) {
  const auto by_class = classes(10);
  std::mt19937_64 rng(2);
  const auto ep = sample_episode(by_class, 4, 6, rng);
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<std::size_t> all = ep.support[k];
    all.insert(all.end(), ep.query[k].begin(), ep.query[k].end());
    std::sort(all.begin(), all.end());
    EXPECT_EQ(all, by_class[k]);
  }
  EXPECT_THROW(sample_episode(by_class, 5, 6, rng), DataError);
}

TEST(TrainConfig, PresetsAndSchedule) {
  const auto c = TrainConfig::preset("asvspoof2019");
  EXPECT_EQ(c.episodes_per_epoch, 500);
  EXPECT_EQ(c.epochs, 20);
  EXPECT_DOUBLE_EQ(c.learning_rate, 0.0003);
  EXPECT_DOUBLE_EQ(c.lr_at_epoch(1), 0.0003);
  EXPECT_DOUBLE_EQ(c.lr_at_epoch(10), 0.0003);
  EXPECT_DOUBLE_EQ(c.lr_at_epoch(11), 0.00015);
  EXPECT_DOUBLE_EQ(c.lr_at_epoch(21), 0.000075);
  const auto d = TrainConfig::preset("asvspoof2021");
  EXPECT_EQ(d.episodes_per_epoch, 1000);
  EXPECT_EQ(d.epochs, 100);
  EXPECT_DOUBLE_EQ(d.lr_at_epoch(16), 0.00025);
  EXPECT_THROW(TrainConfig::preset("nope"), ConfigError);
}

TEST(ClassifyDev, PrototypesAndTies) {
  eval::PrototypeBank bank;
  bank.bonafide = {1, 0, 0};
  bank.spoof = {-1, 0, 0};
  EXPECT_EQ(classify_dev({{1, 0, 0}, {-1, 0, 0}, {1, 0, 0}}, {0, 1, 0}, bank), 1.0);
  const std::vector<std::vector<double>> tied{{0, 1, 0}, {0, -2, 3}, {0, 0, 0}, {0, 5, 5}};
  EXPECT_EQ(classify_dev(tied, {0, 1, 1, 0}, bank), 0.5);
  EXPECT_THROW(classify_dev({}, {}, bank), DataError);
}

TEST(ClassifyDev, MatchesBruteForce) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  eval::PrototypeBank bank;
  for (int j = 0; j < 5; ++j) {
    bank.bonafide.push_back(n(rng));
    bank.spoof.push_back(n(rng));
  }
  std::vector<std::vector<double>> emb(50, std::vector<double>(5));
  std::vector<std::size_t> labels;
  std::size_t correct = 0;
  for (auto& e : emb) {
    for (auto& v : e) v = n(rng);
    labels.push_back(rng() % 2);
    double db = 0, ds = 0;
    for (int j = 0; j < 5; ++j) {
      db += std::pow(e[std::size_t(j)] - bank.bonafide[std::size_t(j)], 2);
      ds += std::pow(e[std::size_t(j)] - bank.spoof[std::size_t(j)], 2);
    }
    correct += (db <= ds ? 0u : 1u) == labels.back();
  }
  EXPECT_EQ(classify_dev(emb, labels, bank), double(correct) / 50.0);
}

TEST(Trainer, FrozenNetGivesSameLossTwice) {
  // Features are exactly the crop length, so the crop rng plays no part.
  const auto data = toy_features(10, 12, 8, 0.5, 4);
  TrainConfig cfg = TrainConfig::preset("toy");
  cfg.learning_rate = 0;
  Trainer<double> t(tiny_net(), {}, cfg, 12);
  std::mt19937_64 rng(5);
  const auto ep = sample_episode(data.by_class(), 5, 5, rng);
  const double a = t.run_episode(data, ep);
  const double b = t.run_episode(data, ep);
  EXPECT_DOUBLE_EQ(a, b);
  EXPECT_GT(a, 0.0);
}

TEST(Trainer, EpisodeLossGradientCheck) {
  const auto data = toy_features(4, 8, 6, 0.3, 6);
  model::EmbeddingNet<double> net(tiny_net(), 7);
  std::mt19937_64 rng(8);
  std::vector<std::size_t> idx{0, 1, 4, 5, 2, 6};
  const auto batch = make_batch<double>(data, idx, 8, rng);
  const std::vector<std::vector<std::size_t>> groups{{0, 1}, {2, 3}};
  auto build = [&](Graph<double>& g) {
    Var<double> emb = net.forward(g, g.constant(batch));
    Var<double> protos = loss::compute_prototypes(emb, groups);
    return loss::prototypical_loss(ops::gather_rows(emb, {4, 5}), protos, {0, 1});
  };
  const auto r = grad_check_parameters<double>(net.parameters().trainable(), build, 1e-6, 1e-6, 6);
  EXPECT_LT(r.max_rel_error, 1e-3) << r.worst;
}

TEST(Trainer, EpisodesReduceLossOnSeparableData) {
  const auto data = toy_features(40, 8, 8, 1.0, 9);
  TrainConfig cfg = TrainConfig::preset("toy");
  Trainer<float> t(tiny_net(), {}, cfg, 8);
  const auto by_class = data.by_class();
  std::mt19937_64 rng(10);
  double first = 0, last = 0;
  for (int e = 0; e < 100; ++e) {
    const double per_query = t.run_episode(data, sample_episode(by_class, 5, 5, rng)) / 10.0;
    if (e < 5) first += per_query / 5;
    if (e >= 90) last += per_query / 10;
  }
  EXPECT_LT(last, 0.1);
  EXPECT_LT(last, first);
}

TEST(Trainer, ZeroEpochsSavesInitialModelWithEmptyHistory) {
  const auto dir = testing::scratch_dir("trainer_zero");
  const auto data = toy_features(6, 8, 6, 1.0, 11);
  TrainConfig cfg = TrainConfig::preset("toy");
  cfg.epochs = 0;
  Trainer<float> t(tiny_net(), {}, cfg, 8);
  const auto out = t.train(data, data, dir);
  EXPECT_TRUE(std::filesystem::exists(out.checkpoint));
  EXPECT_TRUE(std::filesystem::exists(out.bank));
  EXPECT_EQ(std::filesystem::file_size(out.history), 0u);
  model::EmbeddingNet<float> fresh(tiny_net(), derive_seed(cfg.seed, "init", "net"));
  fresh.load(out.checkpoint);
  for (std::size_t i = 0; i < fresh.parameters().size(); ++i)
    EXPECT_EQ(fresh.parameters()[i].value, t.net().parameters()[i].value);
}

TEST(Trainer, HistoryBestAccuracyNonDecreasingAndReproducible) {
  const auto data = toy_features(20, 8, 6, 0.4, 12);
  const auto dev = toy_features(10, 8, 6, 0.4, 13);
  TrainConfig cfg = TrainConfig::preset("toy");
  cfg.epochs = 3;
  cfg.episodes_per_epoch = 4;
  std::string banks[2];
  for (int run = 0; run < 2; ++run) {
    const auto dir = testing::scratch_dir("trainer_hist" + std::to_string(run));
    Trainer<float> t(tiny_net(), {}, cfg, 8);
    const auto out = t.train(data, dev, dir);
    std::ifstream in(out.history);
    std::string line;
    double best = -1;
    int epochs = 0;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line);
      if (j["type"] != "epoch") continue;
      EXPECT_GE(j["best_dev_accuracy"].get<double>(), best);
      best = j["best_dev_accuracy"].get<double>();
      ++epochs;
    }
    EXPECT_EQ(epochs, 3);
    EXPECT_EQ(best, out.best_accuracy);
    std::ifstream b(out.bank);
    auto j = nlohmann::json::parse(b);
    j.erase("checkpoint");
    banks[run] = j.dump();
  }
  EXPECT_EQ(banks[0], banks[1]);
}

TEST(Trainer, NonEpisodicLossRunsBatches) {
  const auto data = toy_features(20, 8, 6, 1.0, 14);
  loss::LossConfig lc;
  lc.kind = loss::LossKind::oc_softmax;
  TrainConfig cfg = TrainConfig::preset("toy");
  Trainer<float> t(tiny_net(), lc, cfg, 8);
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const double before = t.run_batch(data, idx);
  double after = before;
  for (int i = 0; i < 30; ++i) after = t.run_batch(data, idx);
  EXPECT_LT(after, before);
}

}  // namespace
}  // namespace protospoof::train
