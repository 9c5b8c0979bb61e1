// Copyright 2026 The fedaudit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fedaudit/data.hpp"
#include "fedaudit/model.hpp"
#include "gradcheck.hpp"

namespace fedaudit::model {
namespace {

ModelParams tiny_model() {
  // d=4, one hidden layer of width 3, two classes.
  ModelParams m;
  m.dims.input = 4;
  m.dims.hidden = {3};
  m.dims.classes = 2;
  m.extractor = {
      1, 0, -1, 0.5,   // W row 0
      0, 2, 0, -1,     // W row 1
      -1, 1, 1, 1,     // W row 2
      0.1, -0.2, 0.3,  // b
  };
  m.head_glob = {1, -1, 0.5, -2, 0, 1, 0.25, -0.25};
  m.head_pers = {0.5, 0.5, 0.5, 1, 1, 1, 0, 0};
  m.validate();
  return m;
}

TEST(Forward, HandComputedTinyNetwork) {
  const auto m = tiny_model();
  const std::vector<double> x{1, 2, 3, 4};
  const auto f = forward(m, x);
  // Pre-activations: [1 - 3 + 2 + 0.1, 4 - 4 - 0.2, -1 + 2 + 3 + 4 + 0.3] = [0.1, -0.2, 8.3].
  ASSERT_EQ(f.z.size(), 3);
  EXPECT_NEAR(f.z(0), 0.1, 1e-12);
  EXPECT_EQ(f.z(1), 0.0);
  EXPECT_NEAR(f.z(2), 8.3, 1e-12);
  // Global head: [0.1 - 0 + 4.15 + 0.25, -0.2 + 0 + 8.3 - 0.25].
  EXPECT_NEAR(f.logits_glob(0), 4.5, 1e-12);
  EXPECT_NEAR(f.logits_glob(1), 7.85, 1e-12);
  // Personalized head: [0.05 + 4.15, 0.1 + 8.3].
  EXPECT_NEAR(f.logits_pers(0), 4.2, 1e-12);
  EXPECT_NEAR(f.logits_pers(1), 8.4, 1e-12);
}

TEST(Forward, ZeroParametersGiveZeroLogits) {
  Dims d;
  d.input = 5;
  auto m = init_params(d, 1);
  for (auto* v : {&m.extractor, &m.head_pers, &m.head_glob}) std::fill(v->begin(), v->end(), 0.0);
  const std::vector<double> x{1, -2, 3, 0.5, 9};
  const auto f = forward(m, x);
  EXPECT_TRUE(f.logits_glob.isZero(0));
  EXPECT_TRUE(f.logits_pers.isZero(0));
}

TEST(Forward, IdenticalHeadsGiveIdenticalLogits) {
  Dims d;
  d.input = 3;
  d.hidden = {4};
  auto m = init_params(d, 2);
  m.head_pers = m.head_glob;
  const std::vector<double> x{0.3, -1.2, 2.0};
  const auto f = forward(m, x);
  EXPECT_EQ(f.logits_pers, f.logits_glob);
}

TEST(Forward, DimensionMismatch) {
  const auto m = tiny_model();
  const std::vector<double> x{1, 2, 3};
  try {
    forward(m, x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(Losses, CrossEntropyExamples) {
  const std::vector<double> uniform{0.3, 0.3};
  EXPECT_NEAR(ce_loss(uniform, 0), std::log(2.0), 1e-15);
  const std::vector<double> sharp{10, -10};
  // log(1 + e^-20) and 20 + log(1 + e^-20).
  EXPECT_NEAR(ce_loss(sharp, 0), std::log1p(std::exp(-20.0)), 1e-14);
  EXPECT_NEAR(ce_loss(sharp, 0), 2.06e-9, 1e-11);
  EXPECT_NEAR(ce_loss(sharp, 1), 20.0 + std::log1p(std::exp(-20.0)), 1e-12);
  const std::vector<double> huge{1000, -1000};
  EXPECT_TRUE(std::isfinite(ce_loss(huge, 1)));
  EXPECT_NEAR(ce_loss(huge, 1), 2000, 1e-9);
}

TEST(Losses, BatchFrequencies) {
  const std::vector<int> a{0, 0, 1, 1};
  EXPECT_EQ(batch_class_freqs(a, 2), (std::vector<double>{0.5, 0.5}));
  const std::vector<int> b{0, 0, 0, 0};
  EXPECT_EQ(batch_class_freqs(b, 2), (std::vector<double>{1.0, 1.0 / 40.0}));
  const std::vector<int> c{0, 1, 1, 1};
  EXPECT_EQ(batch_class_freqs(c, 2), (std::vector<double>{0.25, 0.75}));
  const std::vector<int> empty;
  EXPECT_THROW(batch_class_freqs(empty, 2), Error);
}

TEST(Losses, LogitAdjustedExamples) {
  const std::vector<double> zeros{0, 0};
  const std::vector<double> freqs{0.75, 0.25};
  EXPECT_NEAR(la_loss(zeros, 1, freqs, 1.0), std::log(4.0), 1e-15);
  const std::vector<double> logits{0.7, -1.3, 2.1};
  const std::vector<double> f3{0.2, 0.5, 0.3};
  EXPECT_EQ(la_loss(logits, 2, f3, 0.0), ce_loss(logits, 2));
  const std::vector<double> flat{0.4, 0.4, 0.4};
  EXPECT_NEAR(la_loss(logits, 1, flat, 1.0), ce_loss(logits, 1), 1e-12);
}

TEST(Losses, ShiftInvariance) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> l(3), s(3);
    for (int c = 0; c < 3; ++c) l[c] = uniform01(rng) * 10 - 5;
    const double shift = uniform01(rng) * 100 - 50;
    for (int c = 0; c < 3; ++c) s[c] = l[c] + shift;
    const std::vector<double> f{0.2, 0.3, 0.5};
    const int y = static_cast<int>(uniform_below(rng, 3));
    EXPECT_NEAR(ce_loss(l, y), ce_loss(s, y), 1e-12);
    EXPECT_NEAR(la_loss(l, y, f, 1.0), la_loss(s, y, f, 1.0), 1e-12);
  }
}

TEST(Gradients, MatchFiniteDifferences) {
  const auto r = fedaudit::testing::gradient_check(2024, 20);
  EXPECT_EQ(r.instances, 20);
  EXPECT_EQ(r.failures, 0) << r.first_failure << " (max rel " << r.max_rel_error << ")";
}

TEST(Gradients, RoutingIsolation) {
  Dims d;
  d.input = 3;
  d.hidden = {4, 3};
  const auto m = init_params(d, 4);
  Matrix x(4, 3);
  x << 1, 0, -1, 0.5, 2, 0, -1, 1, 1, 0.3, 0.3, -0.7;
  const std::vector<int> y{0, 1, 1, 0};
  TrainHyper h;
  ParamBuffers base;
  compute_gradients(m, x, y, h, base);

  // Changing the global head moves only the CE branch: head_pers gradient is unchanged.
  auto m2 = m;
  for (auto& v : m2.head_glob) v *= -2.0;
  ParamBuffers g2;
  compute_gradients(m2, x, y, h, g2);
  EXPECT_EQ(g2.head_pers, base.head_pers);
  EXPECT_NE(g2.head_glob, base.head_glob);

  // Changing the personalized head or tau moves only the LA branch.
  auto m3 = m;
  for (auto& v : m3.head_pers) v += 0.5;
  TrainHyper h3 = h;
  h3.tau = 0.3;
  ParamBuffers g3;
  compute_gradients(m3, x, y, h3, g3);
  EXPECT_EQ(g3.head_glob, base.head_glob);

  // With lambda = 0 the extractor only sees the CE branch.
  TrainHyper h0 = h;
  h0.lambda_weight = 0.0;
  ParamBuffers a, b;
  compute_gradients(m, x, y, h0, a);
  compute_gradients(m3, x, y, h0, b);
  EXPECT_EQ(a.extractor, b.extractor);
  EXPECT_NE(a.head_pers, b.head_pers);
}

TEST(Gradients, LossDecomposition) {
  Dims d;
  d.input = 2;
  d.hidden = {3};
  const auto m = init_params(d, 5);
  Matrix x(3, 2);
  x << 1, 2, -1, 0.5, 0.2, -0.3;
  const std::vector<int> y{0, 1, 1};
  for (double lambda : {0.0, 0.5, 1.0, 3.0}) {
    TrainHyper h;
    h.lambda_weight = lambda;
    ParamBuffers g;
    const auto r = compute_gradients(m, x, y, h, g);
    EXPECT_EQ(r.total, r.ce + lambda * r.la);
  }
}

TEST(TrainStep, MomentumIdentities) {
  Dims d;
  d.input = 2;
  d.hidden = {3};
  const auto m = init_params(d, 6);
  Matrix x(2, 2);
  x << 1, 0, 0, 1;
  const std::vector<int> y{0, 1};
  TrainHyper h;
  h.lr = 0.1;
  h.momentum = 0.0;

  // Two momentum-free steps equal two plain SGD steps.
  auto s1 = train_step(m, OptimizerState::for_params(m), x, y, h);
  auto s2 = train_step(s1.params, s1.opt, x, y, h);
  ModelParams manual = m;
  for (int step = 0; step < 2; ++step) {
    ParamBuffers g;
    compute_gradients(manual, x, y, h, g);
    for (size_t i = 0; i < manual.extractor.size(); ++i) manual.extractor[i] -= h.lr * g.extractor[i];
    for (size_t i = 0; i < manual.head_pers.size(); ++i) manual.head_pers[i] -= h.lr * g.head_pers[i];
    for (size_t i = 0; i < manual.head_glob.size(); ++i) manual.head_glob[i] -= h.lr * g.head_glob[i];
  }
  EXPECT_EQ(s2.params.extractor, manual.extractor);
  EXPECT_EQ(s2.params.head_glob, manual.head_glob);
  EXPECT_EQ(s2.params.head_pers, manual.head_pers);

  TrainHyper frozen = h;
  frozen.lr = 0.0;
  frozen.momentum = 0.9;
  const auto s3 = train_step(m, OptimizerState::for_params(m), x, y, frozen);
  EXPECT_EQ(s3.params.extractor, m.extractor);
  EXPECT_EQ(s3.params.head_glob, m.head_glob);
}

TEST(TrainStep, VelocityAccumulates) {
  Dims d;
  d.input = 2;
  d.hidden = {2};
  const auto m = init_params(d, 7);
  Matrix x(1, 2);
  x << 0.5, -0.5;
  const std::vector<int> y{1};
  TrainHyper h;
  h.lr = 0.0;
  h.momentum = 0.5;
  auto s1 = train_step(m, OptimizerState::for_params(m), x, y, h);
  auto s2 = train_step(s1.params, s1.opt, x, y, h);
  ParamBuffers g;
  compute_gradients(m, x, y, h, g);
  for (size_t i = 0; i < g.head_glob.size(); ++i) EXPECT_DOUBLE_EQ(s2.opt.velocity.head_glob[i], 1.5 * g.head_glob[i]);
}

TEST(TrainStep, SeparableStepDecreasesLoss) {
  Dims d;
  d.input = 1;
  d.hidden = {2};
  auto m = init_params(d, 8);
  Matrix x(2, 1);
  x << 1.0, -1.0;
  const std::vector<int> y{0, 1};
  TrainHyper h;
  h.lr = 0.05;
  ParamBuffers g;
  const double before = compute_gradients(m, x, y, h, g).total;
  const auto s = train_step(m, OptimizerState::for_params(m), x, y, h);
  const double after = compute_gradients(s.params, x, y, h, g).total;
  EXPECT_LT(after, before);
}

TEST(TrainStep, NonFiniteLossIsReported) {
  Dims d;
  d.input = 1;
  d.hidden = {1};
  auto m = init_params(d, 9);
  m.head_glob[0] = std::nan("");
  Matrix x(1, 1);
  x << 1.0;
  const std::vector<int> y{0};
  try {
    train_step(m, OptimizerState::for_params(m), x, y, TrainHyper{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteLoss);
  }
}

data::Dataset toy_shard(int n, std::uint64_t seed) {
  return data::synth_generate({n / 2, n - n / 2}, 4, 4.0, seed);
}

TEST(LocalTrain, UpdateShapeAndDeterminism) {
  const auto shard = toy_shard(100, 1);
  Dims d;
  d.input = 4;
  d.hidden = {8, 4};
  const auto m = init_params(d, 10);
  TrainHyper h;
  h.local_epochs = 2;
  h.batch_size = 16;
  const auto a = local_train(m, shard, h, 77);
  const auto b = local_train(m, shard, h, 77);
  EXPECT_EQ(a.update.size(), m.extractor.size() + m.head_glob.size());
  EXPECT_EQ(a.update, b.update);
  // The personalized head trains locally but is not part of the update.
  EXPECT_NE(a.params.head_pers, m.head_pers);
  const auto g = global_vector(a.params);
  const auto g0 = global_vector(m);
  for (size_t i = 0; i < g.size(); ++i) EXPECT_EQ(a.update[i], g[i] - g0[i]);
}

TEST(LocalTrain, ZeroEpochsGiveZeroUpdate) {
  const auto shard = toy_shard(20, 2);
  Dims d;
  d.input = 4;
  const auto m = init_params(d, 11);
  TrainHyper h;
  h.local_epochs = 0;
  const auto r = local_train(m, shard, h, 1);
  for (double v : r.update) EXPECT_EQ(v, 0.0);
}

TEST(Evaluate, HandCountedConfusion) {
  // One input feature; the global head predicts class 1 iff x > 0.
  ModelParams m;
  m.dims.input = 1;
  m.dims.hidden = {};
  m.dims.classes = 2;
  m.head_glob = {-1, 1, 0, 0};
  m.head_pers = {1, -1, 0, 0};
  data::Dataset ds;
  ds.class_names = {"benign", "attack"};
  ds.features.resize(3, 1);
  ds.features << -2.0, 3.0, 1.0;
  ds.labels = {0, 1, 0};
  const auto c = evaluate(m, ds, false);
  // Predictions 0, 1, 1 against truth 0, 1, 0.
  EXPECT_EQ(c.at(0, 0), 1);
  EXPECT_EQ(c.at(0, 1), 1);
  EXPECT_EQ(c.at(1, 1), 1);
  EXPECT_EQ(c.at(1, 0), 0);
  const auto p = evaluate(m, ds, true);
  EXPECT_EQ(p.at(0, 1), 1);
  EXPECT_EQ(p.at(1, 0), 1);
  EXPECT_EQ(p.at(0, 0), 1);
}

TEST(Evaluate, ConstantClassifierOnBalancedSet) {
  ModelParams m;
  m.dims.input = 2;
  m.dims.hidden = {};
  m.dims.classes = 2;
  m.head_glob = {0, 0, 0, 0, 1, 0};
  m.head_pers = m.head_glob;
  data::Dataset two;
  two.class_names = {"benign", "attack"};
  two.features.resize(4, 2);
  two.features << 1, 2, -3, 4, 5, -6, 0, 0;
  two.labels = {0, 0, 1, 1};
  const auto conf = evaluate(m, two, false);
  EXPECT_DOUBLE_EQ(conf.accuracy(), 0.5);
}

}  // namespace
}  // namespace fedaudit::model
