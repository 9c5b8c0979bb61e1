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
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "audit_scenario.hpp"
#include "fedaudit/audit.hpp"
#include "fedaudit/gmm.hpp"

namespace fedaudit {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd blobs(const std::vector<VectorXd>& centers, int per_blob, double sd, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, sd);
  const auto d = centers[0].size();
  MatrixXd x(static_cast<Eigen::Index>(centers.size()) * per_blob, d);
  Eigen::Index r = 0;
  for (const auto& c : centers) {
    for (int i = 0; i < per_blob; ++i, ++r) {
      for (Eigen::Index j = 0; j < d; ++j) x(r, j) = c(j) + normal(rng);
    }
  }
  return x;
}

double gaussian_log_density(const VectorXd& x, const VectorXd& mean, const MatrixXd& cov) {
  const VectorXd diff = x - mean;
  const double quad = diff.dot(cov.inverse() * diff);
  return -0.5 * (static_cast<double>(x.size()) * std::log(2 * std::numbers::pi) + std::log(cov.determinant()) + quad);
}

TEST(Gmm, SingleComponentIsRegularizedSampleMoments) {
  const MatrixXd x = blobs({VectorXd::Zero(3)}, 50, 1.0, 1);
  gmm::FitOptions opt;
  opt.eps_cov = 0.01;
  const auto s = gmm::fit_gmm(x, 1, 7, opt);
  ASSERT_EQ(s.components(), 1);
  VectorXd mean = VectorXd::Zero(3);
  for (Eigen::Index i = 0; i < x.rows(); ++i) mean += x.row(i).transpose();
  mean /= 50.0;
  MatrixXd cov = MatrixXd::Zero(3, 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const VectorXd d = x.row(i).transpose() - mean;
    cov += d * d.transpose();
  }
  cov /= 50.0;
  cov.diagonal().array() += 0.01;
  EXPECT_LT((s.means[0] - mean).norm(), 1e-12);
  EXPECT_LT((s.covs[0] - cov).norm(), 1e-12);
  EXPECT_DOUBLE_EQ(s.weights[0], 1.0);

  double ll = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) ll += gaussian_log_density(x.row(i).transpose(), mean, cov);
  EXPECT_NEAR(s.log_likelihood, ll, 1e-9 * std::fabs(ll));
  // BIC with 1 + 3 + 6 - 1 = 9 free parameters.
  EXPECT_NEAR(gmm::bic(s, 50), -2 * ll + 9 * std::log(50.0), 1e-8 * std::fabs(ll));
}

TEST(Gmm, TwoSeparatedBlobsRecoverCenters) {
  VectorXd a(2), b(2);
  a << 0, 0;
  b << 10, 10;
  const MatrixXd x = blobs({a, b}, 200, 1.0, 2);
  const auto s = gmm::fit_gmm(x, 2, 3);
  ASSERT_EQ(s.components(), 2);
  const bool first_is_a = s.means[0].norm() < s.means[1].norm();
  const VectorXd& ma = first_is_a ? s.means[0] : s.means[1];
  const VectorXd& mb = first_is_a ? s.means[1] : s.means[0];
  EXPECT_LT((ma - a).norm(), 0.2);
  EXPECT_LT((mb - b).norm(), 0.2);
  // Each coordinate within 0.1 of the true center.
  EXPECT_LT((ma - a).cwiseAbs().maxCoeff(), 0.1 + 0.05);
  EXPECT_NEAR(s.weights[0], 0.5, 0.01);
}

TEST(Gmm, InvariantsAndDeterminism) {
  VectorXd a(3), b(3), c(3);
  a << 0, 0, 0;
  b << 4, 0, 0;
  c << 0, 4, 0;
  const MatrixXd x = blobs({a, b, c}, 40, 1.0, 4);
  gmm::FitOptions opt;
  opt.eps_cov = 0.05;
  const auto s = gmm::fit_gmm(x, 3, 11, opt);
  const auto t = gmm::fit_gmm(x, 3, 11, opt);
  double wsum = 0;
  for (int g = 0; g < s.components(); ++g) {
    wsum += s.weights[static_cast<size_t>(g)];
    EXPECT_GT(s.weights[static_cast<size_t>(g)], 0);
    const MatrixXd& cov = s.covs[static_cast<size_t>(g)];
    EXPECT_LT((cov - cov.transpose()).norm(), 1e-15);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
    EXPECT_GE(es.eigenvalues().minCoeff(), 0.05 - 1e-12);
    EXPECT_EQ(s.means[static_cast<size_t>(g)], t.means[static_cast<size_t>(g)]);
    EXPECT_EQ(cov, t.covs[static_cast<size_t>(g)]);
  }
  EXPECT_NEAR(wsum, 1.0, 1e-9);
  EXPECT_EQ(s.log_likelihood, t.log_likelihood);
}

TEST(Gmm, IdenticalRowsFallBackToOneComponent) {
  MatrixXd x(6, 2);
  for (int i = 0; i < 6; ++i) x.row(i) << 1.5, -2.0;
  const auto s = gmm::fit_gmm(x, 3, 1);
  EXPECT_EQ(s.components(), 1);
  EXPECT_TRUE(s.log_likelihood == s.log_likelihood);
  EXPECT_THROW(gmm::fit_gmm(x.topRows(2), 3, 1), Error);
}

TEST(Gmm, BicSelection) {
  const std::vector<int> cands{1, 2, 3};
  const MatrixXd one = blobs({VectorXd::Zero(2)}, 150, 1.0, 5);
  EXPECT_EQ(gmm::select_g_bic(one, cands, 9), 1);
  VectorXd a(2), b(2);
  a << -6, 0;
  b << 6, 0;
  const MatrixXd two = blobs({a, b}, 100, 1.0, 6);
  EXPECT_EQ(gmm::select_g_bic(two, cands, 9), 2);
  const std::vector<int> only{2};
  EXPECT_EQ(gmm::select_g_bic(one, only, 9), 2);
  const std::vector<int> none;
  EXPECT_THROW(gmm::select_g_bic(one, none, 9), Error);
}

gmm::GmmState two_component_state(double m0, double m1) {
  gmm::GmmState s;
  s.weights = {0.4, 0.6};
  s.means = {VectorXd::Constant(2, m0), VectorXd::Constant(2, m1)};
  s.covs = {MatrixXd::Identity(2, 2), 2.0 * MatrixXd::Identity(2, 2)};
  return s;
}

TEST(Blend, Examples) {
  const auto prev = two_component_state(0.0, 10.0);
  const auto next = two_component_state(2.0, 12.0);
  EXPECT_EQ(gmm::blend_gmm(prev, next, 1.0).state.means, prev.means);
  EXPECT_EQ(gmm::blend_gmm(prev, next, 0.0).state.means, next.means);
  const auto half = gmm::blend_gmm(prev, next, 0.5);
  EXPECT_FALSE(half.reset);
  EXPECT_EQ(half.state.means[0], VectorXd::Constant(2, 1.0));
  EXPECT_EQ(half.state.means[1], VectorXd::Constant(2, 11.0));

  // Components pair by nearest mean, not by index.
  auto swapped = next;
  std::swap(swapped.means[0], swapped.means[1]);
  std::swap(swapped.covs[0], swapped.covs[1]);
  std::swap(swapped.weights[0], swapped.weights[1]);
  EXPECT_EQ(gmm::blend_gmm(prev, swapped, 0.5).state.means[0], VectorXd::Constant(2, 1.0));

  gmm::GmmState single;
  single.weights = {1.0};
  single.means = {VectorXd::Zero(2)};
  single.covs = {MatrixXd::Identity(2, 2)};
  const auto reset = gmm::blend_gmm(prev, single, 0.5);
  EXPECT_TRUE(reset.reset);
  EXPECT_EQ(reset.state.components(), 1);

  gmm::GmmState wide = single;
  wide.means = {VectorXd::Zero(3)};
  wide.covs = {MatrixXd::Identity(3, 3)};
  EXPECT_THROW(gmm::blend_gmm(single, wide, 0.5), Error);
}

TEST(Blend, FixedPointProperty) {
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    const VectorXd a = VectorXd::Random(3);
    const VectorXd b = VectorXd::Random(3) * 5;
    const MatrixXd x = blobs({a, b}, 20, 0.5, rng());
    gmm::FitOptions opt;
    opt.eps_cov = 0.01;
    const auto s = gmm::fit_gmm(x, 2, rng(), opt);
    const double alpha = uniform01(rng);
    const auto out = gmm::blend_gmm(s, s, alpha).state;
    for (int g = 0; g < s.components(); ++g) {
      const auto gi = static_cast<size_t>(g);
      ASSERT_NEAR(out.weights[gi], s.weights[gi], 1e-12);
      ASSERT_LT((out.means[gi] - s.means[gi]).norm(), 1e-12 * (1 + s.means[gi].norm()));
      ASSERT_LT((out.covs[gi] - s.covs[gi]).norm(), 1e-12 * (1 + s.covs[gi].norm()));
    }
  }
}

TEST(Mahalanobis, Examples) {
  gmm::GmmState s;
  s.weights = {1.0};
  s.means = {VectorXd::Zero(2)};
  s.covs = {MatrixXd::Identity(2, 2)};
  VectorXd x(2);
  x << 3, 4;
  EXPECT_NEAR(gmm::mahalanobis(x, s).md, 5.0, 1e-12);
  EXPECT_EQ(gmm::mahalanobis(VectorXd::Zero(2), s).md, 0.0);
  s.covs[0] = Eigen::Vector2d(4, 1).asDiagonal();
  x << 2, 0;
  EXPECT_NEAR(gmm::mahalanobis(x, s).md, 1.0, 1e-12);
  EXPECT_THROW(gmm::mahalanobis(VectorXd::Zero(3), s), Error);

  const auto two = two_component_state(0.0, 10.0);
  const auto r = gmm::mahalanobis(VectorXd::Constant(2, 9.0), two);
  EXPECT_EQ(r.component, 1);
  EXPECT_NEAR(r.md, std::sqrt(2.0 / 2.0), 1e-12);
}

TEST(Mahalanobis, LinearInvarianceProperty) {
  Rng rng(13);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const int d = 2 + static_cast<int>(uniform_below(rng, 4));
    MatrixXd l = MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j <= i; ++j) l(i, j) = normal(rng);
      l(i, i) = 0.5 + std::fabs(l(i, i));
    }
    gmm::GmmState s;
    s.weights = {1.0};
    s.means = {VectorXd(d)};
    for (int i = 0; i < d; ++i) s.means[0](i) = normal(rng);
    s.covs = {l * l.transpose()};
    VectorXd x(d);
    for (int i = 0; i < d; ++i) x(i) = normal(rng) * 3;

    MatrixXd a(d, d);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
    a += 3.0 * MatrixXd::Identity(d, d);
    gmm::GmmState mapped = s;
    mapped.means[0] = a * s.means[0];
    mapped.covs[0] = a * s.covs[0] * a.transpose();

    const double md = gmm::mahalanobis(x, s).md;
    const double md_mapped = gmm::mahalanobis(a * x, mapped).md;
    const VectorXd diff = x - s.means[0];
    const double oracle = std::sqrt(diff.dot(s.covs[0].inverse() * diff));
    ASSERT_NEAR(md, oracle, 1e-9 * (1 + oracle));
    ASSERT_NEAR(md, md_mapped, 1e-9 * (1 + md));
  }
}

TEST(Features, Examples) {
  const std::vector<double> zero{0, 0, 0};
  EXPECT_EQ(audit::extract_features(zero), (audit::Features{0, 0, 0, 0, 1}));
  const std::vector<double> v{3, 4};
  const auto f = audit::extract_features(v);
  EXPECT_EQ(f[0], 5.0);
  EXPECT_DOUBLE_EQ(f[1], 7.0 / 5.0);
  EXPECT_EQ(f[2], 0.0);
  EXPECT_EQ(f[3], 3.5);
  EXPECT_EQ(f[4], 0.0);
  const std::vector<double> dir{0.6, 0.8};
  EXPECT_NEAR(audit::extract_features(v, dir)[2], 1.0, 1e-12);
  const std::vector<double> anti{-6, -8};
  EXPECT_NEAR(audit::extract_features(v, anti)[2], -1.0, 1e-12);
  const std::vector<double> sparse{0, 2, 0, -2};
  EXPECT_EQ(audit::extract_features(sparse)[4], 0.5);
  const std::vector<double> empty;
  EXPECT_THROW(audit::extract_features(empty), Error);
  const std::vector<double> short_dir{1.0};
  EXPECT_THROW(audit::extract_features(v, short_dir), Error);
}

TEST(Trajectory, Examples) {
  EXPECT_EQ(audit::trajectory_score(std::vector<double>{1.5, 2.0}), 0.5);
  EXPECT_EQ(audit::trajectory_score(std::vector<double>{2.0}), 0.0);
  EXPECT_EQ(audit::trajectory_score(std::vector<double>{3, 3, 3}), 0.0);
  EXPECT_EQ(audit::trajectory_score(std::vector<double>{4, 1}), 3.0);
  EXPECT_THROW(audit::trajectory_score(std::vector<double>{}), Error);
}

TEST(Thresholds, Examples) {
  // Sample standard deviation of {0.8, 1.0, 1.2} is 0.2.
  const std::vector<double> md{0.8, 1.0, 1.2};
  const std::vector<double> dmd{0.0, 0.1, 0.2};
  const std::vector<double> norms{1.0, 2.0, 4.0};
  const auto th = audit::update_thresholds(md, dmd, norms, 3.0, 0.95, 1e-6, {});
  EXPECT_NEAR(th.t_md, 0.6, 1e-12);
  // Median 2, MAD = median{1, 0, 2} = 1.
  EXPECT_DOUBLE_EQ(th.t_norm, 2.0 + 3.0 * 1.0);
  // Linear interpolation at position 0.95 * 2 = 1.9.
  EXPECT_NEAR(th.t_traj, 0.19, 1e-12);

  const std::vector<double> same{1, 1, 1};
  const auto floored = audit::update_thresholds(same, std::vector<double>{0, 0, 0}, same, 3.0, 0.95, 1e-6, {});
  EXPECT_EQ(floored.t_md, 1e-6);
  EXPECT_EQ(floored.t_traj, 1e-6);

  audit::Thresholds prev;
  prev.t_md = 7;
  const auto kept = audit::update_thresholds({1, 2}, {0, 0}, {1, 1}, 3.0, 0.95, 1e-6, prev);
  EXPECT_EQ(kept.t_md, 7);

  const audit::Thresholds warm;
  EXPECT_TRUE(std::isinf(warm.t_md) && std::isinf(warm.t_norm) && std::isinf(warm.t_traj));
}

TEST(Decide, Examples) {
  audit::Thresholds th;
  th.t_md = 1;
  th.t_traj = 1;
  th.t_norm = 1;
  th.down_weight = 0.5;
  auto v = audit::decide(0.5, 0.5, 0.5, th);
  EXPECT_EQ(v.kind, audit::VerdictKind::kAccept);
  EXPECT_EQ(v.weight, 1.0);
  v = audit::decide(2, 0.5, 0.5, th);
  EXPECT_EQ(v.kind, audit::VerdictKind::kDownWeight);
  EXPECT_EQ(v.weight, 0.5);
  v = audit::decide(2, 0.5, 2, th);
  EXPECT_EQ(v.kind, audit::VerdictKind::kReject);
  EXPECT_EQ(v.weight, 0.0);
  EXPECT_EQ(audit::decide(2, 2, 2, th).kind, audit::VerdictKind::kReject);
  EXPECT_EQ(audit::decide(1, 1, 1, th).kind, audit::VerdictKind::kAccept);
  EXPECT_EQ(audit::decide(1e9, 1e9, 1e9, audit::Thresholds{}).kind, audit::VerdictKind::kAccept);
}

TEST(Registration, UniqueTags) {
  const auto t20 = audit::register_clients(20, 1);
  EXPECT_EQ(t20.clients(), 20);
  EXPECT_EQ(std::set<std::string>(t20.tags().begin(), t20.tags().end()).size(), 20u);
  EXPECT_EQ(audit::register_clients(2, 1).clients(), 2);
  auto t = audit::register_clients(3, 2);
  EXPECT_FALSE(t.register_client(t.tag(0)));
  EXPECT_EQ(t.clients(), 3);
  EXPECT_THROW(audit::register_clients(1, 1), Error);
  EXPECT_EQ(audit::register_clients(5, 3).tags(), audit::register_clients(5, 3).tags());
}

TEST(AuditTable, OneEntryPerClientRoundAndCsv) {
  auto t = audit::register_clients(2, 4);
  t.record({t.tag(0), 0, 1, {1, 2, 3, 4, 0.5}, 0.25, 0.0, 0.1, audit::VerdictKind::kDownWeight, 0.5});
  EXPECT_THROW(t.record({t.tag(0), 0, 1, {}, 0, 0, 0, audit::VerdictKind::kAccept, 1}), Error);
  std::ostringstream os;
  t.write_csv(os);
  const std::string csv = os.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "tag_id,client,round,l2,l1_over_l2,cosine,mean,zero_fraction,md,dmd,score,verdict,weight");
  EXPECT_NE(csv.find(t.tag(0) + ",0,1,1,2,3,4,0.5,0.25,0,0.1,"), std::string::npos) << csv;
}

std::vector<std::vector<double>> benign_round(Rng& rng, int clients, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> u(static_cast<size_t>(clients), std::vector<double>(static_cast<size_t>(dim)));
  for (auto& row : u) {
    for (int j = 0; j < dim; ++j) row[static_cast<size_t>(j)] = 0.1 + 0.05 * normal(rng);
  }
  return u;
}

TEST(Auditor, WarmupAcceptsEveryone) {
  audit::Auditor a(audit::AuditConfig{}, audit::register_clients(6, 1), 1);
  Rng rng(1);
  for (int t = 0; t < 3; ++t) {
    auto updates = benign_round(rng, 6, 32);
    updates[0] = std::vector<double>(32, 50.0);
    const auto r = a.audit_round(t, updates);
    EXPECT_TRUE(r.warmup);
    EXPECT_EQ(r.accepted, 6);
    EXPECT_TRUE(std::isinf(r.thresholds.t_md));
  }
  auto updates = benign_round(rng, 6, 32);
  updates[0] = std::vector<double>(32, 50.0);
  const auto r = a.audit_round(3, updates);
  EXPECT_FALSE(r.warmup);
  EXPECT_EQ(r.clients[0].verdict.kind, audit::VerdictKind::kReject);
  EXPECT_EQ(r.accepted + r.downweighted + r.rejected, 6);
  EXPECT_EQ(a.table().entries().size(), 24u);
}

TEST(Auditor, DeterministicPipeline) {
  auto run = [] {
    audit::Auditor a(audit::AuditConfig{}, audit::register_clients(8, 5), 5);
    Rng rng(5);
    std::vector<double> scores;
    for (int t = 0; t < 6; ++t) {
      const auto r = a.audit_round(t, benign_round(rng, 8, 16));
      for (const auto& c : r.clients) scores.push_back(c.md);
    }
    return scores;
  };
  EXPECT_EQ(run(), run());
}

TEST(Auditor, RejectsWrongUpdateCount) {
  audit::Auditor a(audit::AuditConfig{}, audit::register_clients(3, 1), 1);
  Rng rng(2);
  EXPECT_THROW(a.audit_round(0, benign_round(rng, 2, 4)), Error);
}

TEST(Auditor, SeparationPower) {
  const auto r = testing::run_separation_trials(2024, 20);
  EXPECT_GE(r.adversary_reject_rate(), 0.90);
  EXPECT_LE(r.benign_reject_rate(), 0.05);
  EXPECT_GE(r.pooled_auc, 0.95);
}

}  // namespace
}  // namespace fedaudit
