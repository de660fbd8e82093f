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

#include <cmath>
#include <numbers>
#include <random>

#include "protospoof/core/grad_check.hpp"
#include "protospoof/loss/losses.hpp"
#include "test_util.hpp"

namespace protospoof::loss {
namespace {

using testing::random_tensor;
using G = Graph<double>;
using V = Var<double>;
using Vs = std::vector<V>;
using Rows = std::vector<std::vector<double>>;

Rows rows_of(const Tensor<double>& t) {
  Rows r(t.dim(0), std::vector<double>(t.dim(1)));
  for (std::size_t i = 0; i < t.dim(0); ++i)
    for (std::size_t j = 0; j < t.dim(1); ++j) r[i][j] = t.at(i, j);
  return r;
}

double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

double softplus(double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

void expect_grad_ok(const std::function<V(G&, const Vs&)>& f, std::vector<Tensor<double>> seeds,
                    const char* what) {
  const auto r = grad_check<double>(f, std::move(seeds), 1e-6);
  EXPECT_LT(r.max_rel_error, 1e-4) << what << " worst " << r.worst;
}

TEST(Posterior, MatchesDirectEvaluation) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> dim(1, 16), nq(1, 6);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = std::size_t(dim(rng)), n = std::size_t(nq(rng));
    const auto q = random_tensor({n, d}, rng, -2, 2), p = random_tensor({2, d}, rng, -2, 2);
    G g(false);
    const auto post = protonet_posterior(g.constant(q), g.constant(p)).value();
    const auto lp = protonet_log_posterior(g.constant(q), g.constant(p)).value();
    const auto Q = rows_of(q), P = rows_of(p);
    for (std::size_t i = 0; i < n; ++i) {
      const double e0 = std::exp(-sqdist(Q[i], P[0])), e1 = std::exp(-sqdist(Q[i], P[1]));
      const double ref[2] = {e0 / (e0 + e1), e1 / (e0 + e1)};
      ASSERT_NEAR(post.at(i, 0) + post.at(i, 1), 1.0, 1e-9);
      for (int k = 0; k < 2; ++k) {
        worst = std::max(worst, std::abs(post.at(i, std::size_t(k)) - ref[k]));
        if (ref[k] > 1e-300) {
          ASSERT_NEAR(std::exp(lp.at(i, std::size_t(k))), ref[k], 1e-12);
        }
      }
    }
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Posterior, FarQueryDoesNotUnderflowLog) {
  G g(false);
  Tensor<double> q({1, 1}, std::vector<double>{100.0});
  Tensor<double> p({2, 1}, std::vector<double>{0.0, 99.0});
  const auto lp = protonet_log_posterior(g.constant(q), g.constant(p)).value();
  EXPECT_NEAR(lp[0], -(10000.0 - 1.0), 1e-9);
  EXPECT_NEAR(lp[1], 0.0, 1e-12);
}

TEST(Posterior, SymmetricQueryIsHalfHalf) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_tensor({1, 6}, rng), off = random_tensor({1, 6}, rng);
    Tensor<double> p({2, 6});
    for (std::size_t j = 0; j < 6; ++j) {
      p.at(0, j) = c[j] + off[j];
      p.at(1, j) = c[j] - off[j];
    }
    G g(false);
    const auto post = protonet_posterior(g.constant(c), g.constant(p)).value();
    EXPECT_NEAR(post[0], 0.5, 1e-12);
    EXPECT_NEAR(post[1], 0.5, 1e-12);
    const auto loss = prototypical_loss(g.constant(c), g.constant(p), {trial % 2 == 0 ? 0u : 1u});
    EXPECT_NEAR(loss.value()[0], std::numbers::ln2, 1e-12);
  }
}

TEST(Prototypes, EqualBruteForceMeans) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto e = random_tensor({10, 7}, rng, -5, 5);
    std::vector<std::vector<std::size_t>> groups(2);
    for (std::size_t i = 0; i < 10; ++i) groups[(i * 7 + std::size_t(trial)) % 3 == 0 ? 0 : 1].push_back(i);
    G g(false);
    const auto p = compute_prototypes(g.constant(e), groups).value();
    for (std::size_t k = 0; k < 2; ++k)
      for (std::size_t j = 0; j < 7; ++j) {
        double s = 0;
        for (std::size_t i : groups[k]) s += e.at(i, j);
        EXPECT_NEAR(p.at(k, j), s / double(groups[k].size()), 1e-12);
      }
  }
}

TEST(PrototypicalLoss, SumsNegativeLogPosteriors) {
  std::mt19937_64 rng(4);
  const auto q = random_tensor({6, 4}, rng), p = random_tensor({2, 4}, rng);
  const std::vector<std::size_t> labels{0, 1, 1, 0, 1, 0};
  G g(false);
  const double loss = prototypical_loss(g.constant(q), g.constant(p), labels).value()[0];
  const auto Q = rows_of(q), P = rows_of(p);
  double ref = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    const double d0 = sqdist(Q[i], P[0]), d1 = sqdist(Q[i], P[1]);
    const double dl = labels[i] == 0 ? d0 : d1;
    ref += dl + std::log(std::exp(-d0) + std::exp(-d1));
  }
  EXPECT_NEAR(loss, ref, 1e-12);
}

TEST(PrototypicalLoss, GradientThroughPrototypes) {
  std::mt19937_64 rng(5);
  const std::vector<std::vector<std::size_t>> groups{{0, 1, 2}, {3, 4}};
  expect_grad_ok(
      [&](G&, const Vs& v) {
        return prototypical_loss(v[1], compute_prototypes(v[0], groups), {1, 0, 0, 1});
      },
      {random_tensor({5, 3}, rng), random_tensor({4, 3}, rng)}, "prototypical");
}

TEST(SoftmaxCe, OracleAndGradient) {
  std::mt19937_64 rng(6);
  const auto z = random_tensor({5, 2}, rng, -3, 3);
  const std::vector<std::size_t> labels{0, 1, 1, 0, 0};
  G g(false);
  double ref = 0;
  for (std::size_t i = 0; i < 5; ++i)
    ref -= z.at(i, labels[i]) - std::log(std::exp(z.at(i, 0)) + std::exp(z.at(i, 1)));
  EXPECT_NEAR(softmax_ce(g.constant(z), labels).value()[0], ref / 5, 1e-12);
  expect_grad_ok([&](G&, const Vs& v) { return softmax_ce(v[0], labels); }, {z}, "softmax_ce");
}

TEST(AmSoftmax, OracleAndGradient) {
  std::mt19937_64 rng(7);
  const auto e = random_tensor({6, 5}, rng), w = random_tensor({2, 5}, rng);
  const std::vector<std::size_t> labels{0, 1, 0, 1, 1, 0};
  const double s = 30, m = 0.2;
  const auto E = rows_of(e), W = rows_of(w);
  double ref = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    double z[2];
    for (std::size_t k = 0; k < 2; ++k) z[k] = s * (cosine(E[i], W[k]) - (k == labels[i] ? m : 0));
    const double mx = std::max(z[0], z[1]);
    ref -= z[labels[i]] - (mx + std::log(std::exp(z[0] - mx) + std::exp(z[1] - mx)));
  }
  G g(false);
  EXPECT_NEAR(am_softmax(g.constant(e), g.constant(w), labels, s, m).value()[0], ref / 6, 1e-10);
  expect_grad_ok([&](G&, const Vs& v) { return am_softmax(v[0], v[1], labels, 3.0, m); }, {e, w},
                 "am_softmax");
}

TEST(OcSoftmax, OracleAndGradient) {
  std::mt19937_64 rng(8);
  const auto e = random_tensor({7, 4}, rng), w = random_tensor({1, 4}, rng);
  const std::vector<std::size_t> labels{0, 0, 1, 1, 0, 1, 1};
  const double alpha = 20, m0 = 0.9, m1 = 0.2;
  const auto E = rows_of(e), W = rows_of(w);
  double ref = 0;
  for (std::size_t i = 0; i < 7; ++i) {
    const double c = cosine(E[i], W[0]);
    ref += labels[i] == 0 ? softplus(alpha * (m0 - c)) : softplus(alpha * (c - m1));
  }
  G g(false);
  EXPECT_NEAR(oc_softmax(g.constant(e), g.constant(w), labels, alpha, m0, m1).value()[0], ref / 7,
              1e-12);
  expect_grad_ok([&](G&, const Vs& v) { return oc_softmax(v[0], v[1], labels, 2.0, m0, m1); },
                 {e, w}, "oc_softmax");
}

TEST(Contrastive, OracleAndGradient) {
  std::mt19937_64 rng(9);
  const auto e = random_tensor({6, 3}, rng);
  const std::vector<std::size_t> labels{0, 1, 0, 1, 1, 0};
  const auto E = rows_of(e);
  for (double margin : {0.3, 1.0, 5.0}) {
    double ref = 0;
    int pairs = 0;
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = i + 1; j < 6; ++j, ++pairs) {
        const double d2 = sqdist(E[i], E[j]);
        ref += labels[i] == labels[j] ? d2 : std::pow(std::max(0.0, margin - std::sqrt(d2)), 2);
      }
    G g(false);
    EXPECT_NEAR(contrastive_loss(g.constant(e), labels, margin).value()[0], ref / pairs, 1e-12);
  }
  expect_grad_ok([&](G&, const Vs& v) { return contrastive_loss(v[0], labels, 1.0); }, {e},
                 "contrastive");
}

TEST(LossHead, ParametersPerKindAndPrototypicalIsEpisodic) {
  LossConfig c;
  EXPECT_EQ(LossHead<double>(c, 8, 1).parameters().size(), 0u);
  c.kind = LossKind::softmax;
  EXPECT_EQ(LossHead<double>(c, 8, 1).parameters().size(), 2u);
  c.kind = LossKind::oc_softmax;
  LossHead<double> oc(c, 8, 1);
  ASSERT_EQ(oc.parameters().size(), 1u);
  EXPECT_EQ(oc.parameters()[0].value.shape(), (Shape{1, 8}));
  LossHead<double> proto(LossConfig{}, 8, 1);
  G g(false);
  std::mt19937_64 rng(10);
  EXPECT_THROW(proto(g, g.constant(random_tensor({2, 8}, rng)), {0, 1}), ConfigError);
  LossConfig bad;
  bad.oc_margin_bonafide = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(LossHead, ParameterGradientCheck) {
  std::mt19937_64 rng(11);
  const auto e = random_tensor({6, 5}, rng);
  const std::vector<std::size_t> labels{0, 1, 1, 0, 1, 0};
  for (auto kind : {LossKind::softmax, LossKind::am_softmax, LossKind::oc_softmax}) {
    LossConfig c;
    c.kind = kind;
    c.am_scale = 3;
    c.oc_alpha = 2;
    LossHead<double> head(c, 5, 2);
    const auto r = grad_check_parameters<double>(
        head.parameters().trainable(), [&](G& g) { return head(g, g.constant(e), labels); }, 1e-6);
    EXPECT_LT(r.max_rel_error, 1e-4) << nlohmann::json(kind) << " " << r.worst;
  }
}

}  // namespace
}  // namespace protospoof::loss
