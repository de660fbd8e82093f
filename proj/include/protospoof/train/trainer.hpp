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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "protospoof/core/adam.hpp"
#include "protospoof/core/graph.hpp"
#include "protospoof/core/random.hpp"
#include "protospoof/eval/bank.hpp"
#include "protospoof/loss/losses.hpp"
#include "protospoof/model/embedding_net.hpp"
#include "protospoof/train/config.hpp"
#include "protospoof/train/dataset.hpp"
#include "protospoof/train/episode.hpp"

namespace protospoof::train {

/// Nearest-prototype decisions (0 bonafide, 1 spoof); exact ties go to
/// bonafide.
inline std::vector<std::size_t> classify_nearest(const std::vector<std::vector<double>>& embeddings,
                                                 const eval::PrototypeBank& bank) {
  std::vector<std::size_t> out;
  out.reserve(embeddings.size());
  for (const auto& e : embeddings) {
    const double db = eval::squared_distance(e, bank.bonafide);
    const double ds = eval::squared_distance(e, bank.spoof);
    out.push_back(db <= ds ? 0 : 1);
  }
  return out;
}

/// Fraction of utterances whose nearest prototype matches the label.
inline double classify_dev(const std::vector<std::vector<double>>& embeddings,
                           const std::vector<std::size_t>& labels, const eval::PrototypeBank& bank) {
  if (embeddings.empty()) throw DataError("classify_dev: empty development set");
  const auto pred = classify_nearest(embeddings, bank);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i];
  return double(correct) / double(pred.size());
}

inline std::string list_hash(const std::vector<std::string>& ids) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& id : ids) h = fnv1a(id + "\n", h);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct TrainOutputs {
  std::string checkpoint;
  std::string bank;
  std::string history;
  double best_accuracy = -1;
  int best_epoch = 0;
};

/// Episodic (prototypical) or mini-batch (other losses) training of an
/// embedding net with Adam, keeping the checkpoint with the best
/// development accuracy.
template <class T>
class Trainer {
 public:
  Trainer(const model::NetConfig& net_cfg, const loss::LossConfig& loss_cfg, const TrainConfig& cfg,
          std::size_t frames)
      : cfg_(cfg),
        frames_(frames),
        net_(net_cfg, derive_seed(cfg.seed, "init", "net")),
        head_(loss_cfg, std::size_t(net_cfg.embedding_dim), derive_seed(cfg.seed, "init", "head")),
        rng_(derive_seed(cfg.seed, "episodes")) {
    cfg_.validate();
    params_ = net_.parameters().trainable();
    for (auto* p : head_.parameters().trainable()) params_.push_back(p);
    adam_.options = {cfg_.learning_rate, cfg_.adam_beta1, cfg_.adam_beta2, cfg_.adam_eps};
  }

  model::EmbeddingNet<T>& net() { return net_; }
  loss::LossHead<T>& head() { return head_; }
  AdamState<T>& optimizer() { return adam_; }
  const TrainConfig& config() const { return cfg_; }
  std::mt19937_64& rng() { return rng_; }
  void set_learning_rate(double lr) { adam_.options.lr = lr; }
  /// Distance convention stored in saved banks.
  void set_squared_distance(bool squared) { squared_ = squared; }
  /// Extra fields merged into every checkpoint header.
  void set_checkpoint_extra(nlohmann::json extra) { extra_ = std::move(extra); }

  /// Supports and queries of all classes go through the net as one batch;
  /// prototypes are the support means and the summed prototypical loss over
  /// the queries takes one optimizer step (or one step per query when
  /// per_query_steps is set). Returns the summed query loss.
  double run_episode(const FeatureSet& data, const Episode& ep) {
    net_.set_training(true);
    if (cfg_.per_query_steps) return run_episode_per_query(data, ep);
    std::vector<std::size_t> idx;
    std::vector<std::vector<std::size_t>> groups(ep.support.size());
    for (std::size_t k = 0; k < ep.support.size(); ++k)
      for (std::size_t i : ep.support[k]) {
        groups[k].push_back(idx.size());
        idx.push_back(i);
      }
    std::vector<std::size_t> query_rows, query_labels;
    for (std::size_t k = 0; k < ep.query.size(); ++k)
      for (std::size_t i : ep.query[k]) {
        query_rows.push_back(idx.size());
        query_labels.push_back(k);
        idx.push_back(i);
      }
    return step(data, idx, [&](Graph<T>&, Var<T> emb) {
      Var<T> protos = loss::compute_prototypes(emb, groups);
      return loss::prototypical_loss(ops::gather_rows(emb, query_rows), protos, query_labels);
    });
  }

  /// One optimizer step of a non-episodic loss on the given utterances.
  double run_batch(const FeatureSet& data, const std::vector<std::size_t>& idx) {
    net_.set_training(true);
    std::vector<std::size_t> labels;
    for (std::size_t i : idx) labels.push_back(data.labels[i]);
    return step(data, idx, [&](Graph<T>& g, Var<T> emb) { return head_(g, emb, labels); });
  }

  /// Prototype bank over a whole set with eval-mode embeddings.
  eval::PrototypeBank prototype_bank(const FeatureSet& data) {
    const auto emb = embed_all(net_, data, frames_, cfg_.seed);
    eval::PrototypeBank bank = eval::bank_from_embeddings(emb, data.labels);
    bank.training_hash = list_hash(data.ids);
    bank.squared = squared_;
    return bank;
  }

  /// Full training loop. Writes best.ckpt, bank.json and history.jsonl under
  /// out_dir. With zero epochs the initial model is saved and the history is
  /// empty.
  TrainOutputs train(const FeatureSet& train_set, const FeatureSet& dev_set,
                     const std::string& out_dir, std::ostream* log = nullptr) {
    std::filesystem::create_directories(out_dir);
    TrainOutputs out;
    out.checkpoint = (std::filesystem::path(out_dir) / "best.ckpt").string();
    out.bank = (std::filesystem::path(out_dir) / "bank.json").string();
    out.history = (std::filesystem::path(out_dir) / "history.jsonl").string();
    std::ofstream history(out.history);
    if (!history) throw DataError("cannot write " + out.history);

    const auto by_class = train_set.by_class();
    const bool episodic = head_.config().kind == loss::LossKind::prototypical;
    if (cfg_.epochs == 0) {
      save_best(out, train_set, 0, -1);
      return out;
    }
    for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
      const double lr = cfg_.lr_at_epoch(epoch);
      set_learning_rate(lr);
      double epoch_loss = 0;
      for (int e = 1; e <= cfg_.episodes_per_epoch; ++e) {
        double loss_sum, per_item;
        if (episodic) {
          const Episode ep = sample_episode(by_class, std::size_t(cfg_.n_support),
                                            std::size_t(cfg_.n_query), rng_);
          loss_sum = run_episode(train_set, ep);
          per_item = loss_sum / double(cfg_.n_query * cfg_.n_classes);
        } else {
          std::vector<std::size_t> pool(train_set.size());
          for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
          const std::size_t n = std::min<std::size_t>(std::size_t(cfg_.batch_size), pool.size());
          loss_sum = run_batch(train_set, draw_without_replacement(pool, n, rng_));
          per_item = loss_sum;
        }
        epoch_loss += per_item;
        history << nlohmann::json{{"type", "episode"}, {"epoch", epoch}, {"episode", e},
                                  {"loss", loss_sum}, {"loss_per_query", per_item}, {"lr", lr}}
                       .dump()
                << '\n';
      }
      const eval::PrototypeBank bank = prototype_bank(train_set);
      const double acc = classify_dev(embed_all(net_, dev_set, frames_, cfg_.seed), dev_set.labels, bank);
      if (acc > out.best_accuracy) save_best(out, train_set, epoch, acc, &bank);
      history << nlohmann::json{{"type", "epoch"}, {"epoch", epoch}, {"lr", lr},
                                {"mean_loss", epoch_loss / cfg_.episodes_per_epoch},
                                {"dev_accuracy", acc}, {"best_dev_accuracy", out.best_accuracy},
                                {"best_epoch", out.best_epoch}}
                     .dump()
              << '\n';
      history.flush();
      if (log)
        *log << "epoch " << epoch << "  lr " << lr << "  loss "
             << epoch_loss / cfg_.episodes_per_epoch << "  dev acc " << acc << "  best "
             << out.best_accuracy << " (epoch " << out.best_epoch << ")\n";
    }
    if (!history) throw DataError("write failed for " + out.history);
    return out;
  }

 private:
  template <class LossFn>
  double step(const FeatureSet& data, const std::vector<std::size_t>& idx, LossFn&& loss_fn) {
    const Tensor<T> batch = make_batch<T>(data, idx, frames_, rng_);
    double value = 0;
    try {
      Graph<T> g;
      Var<T> emb = net_.forward(g, g.constant(batch));
      Var<T> loss = loss_fn(g, emb);
      value = double(loss.value()[0]);
      g.backward(loss);
    } catch (const NumericError& e) {
      std::string ids;
      for (std::size_t i : idx) ids += " " + data.ids[i];
      throw NumericError(std::string(e.what()) + "; utterances:" + ids);
    }
    adam_step(params_, adam_);
    return value;
  }

  double run_episode_per_query(const FeatureSet& data, const Episode& ep) {
    double total = 0;
    for (std::size_t qk = 0; qk < ep.query.size(); ++qk)
      for (std::size_t q : ep.query[qk]) {
        std::vector<std::size_t> idx;
        std::vector<std::vector<std::size_t>> groups(ep.support.size());
        for (std::size_t k = 0; k < ep.support.size(); ++k)
          for (std::size_t i : ep.support[k]) {
            groups[k].push_back(idx.size());
            idx.push_back(i);
          }
        const std::size_t row = idx.size();
        idx.push_back(q);
        total += step(data, idx, [&](Graph<T>&, Var<T> emb) {
          return loss::prototypical_loss(ops::gather_rows(emb, {row}),
                                         loss::compute_prototypes(emb, groups), {qk});
        });
      }
    return total;
  }

  void save_best(TrainOutputs& out, const FeatureSet& train_set, int epoch, double acc,
                 const eval::PrototypeBank* bank = nullptr) {
    out.best_accuracy = acc;
    out.best_epoch = epoch;
    nlohmann::json header = extra_;
    header["epoch"] = epoch;
    header["dev_accuracy"] = acc;
    header["train"] = cfg_;
    net_.save(out.checkpoint, header);
    eval::PrototypeBank b = bank ? *bank : prototype_bank(train_set);
    b.checkpoint = out.checkpoint;
    eval::save_bank(out.bank, b);
  }

  TrainConfig cfg_;
  std::size_t frames_;
  model::EmbeddingNet<T> net_;
  loss::LossHead<T> head_;
  std::vector<Parameter<T>*> params_;
  AdamState<T> adam_;
  std::mt19937_64 rng_;
  bool squared_ = true;
  nlohmann::json extra_ = nlohmann::json::object();
};

}  // namespace protospoof::train
