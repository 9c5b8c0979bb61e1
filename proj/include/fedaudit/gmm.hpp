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
// =============================================================================
//
// Full-covariance Gaussian mixtures: EM fitting with k-means++ seeding, BIC
// model selection, forgetting-factor blending and Mahalanobis scoring.

#ifndef FEDAUDIT_GMM_HPP_
#define FEDAUDIT_GMM_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "fedaudit/error.hpp"
#include "fedaudit/random.hpp"

namespace fedaudit::gmm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct GmmState {
  std::vector<double> weights;
  std::vector<VectorXd> means;
  std::vector<MatrixXd> covs;
  double log_likelihood = 0;  // of the data the state was fit on; 0 after blending

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }
};

struct FitOptions {
  int max_iters = 200;
  double tol = 1e-6;
  double eps_cov = 1e-6;
};

inline int bic_free_parameters(int g, int dim) { return g * (1 + dim + dim * (dim + 1) / 2) - 1; }

namespace detail {

struct ComponentCache {
  Eigen::LLT<MatrixXd> llt;
  double log_norm = 0;  // log weight - 0.5 * (d log 2pi + log det)
};

inline std::vector<ComponentCache> cache(const GmmState& s) {
  std::vector<ComponentCache> out(static_cast<size_t>(s.components()));
  const double d = s.dim();
  for (int g = 0; g < s.components(); ++g) {
    auto& c = out[static_cast<size_t>(g)];
    c.llt.compute(s.covs[static_cast<size_t>(g)]);
    if (c.llt.info() != Eigen::Success) throw Error(ErrorCode::kDegenerateData, "covariance is not positive definite");
    const double logdet = 2.0 * c.llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    c.log_norm = std::log(s.weights[static_cast<size_t>(g)]) - 0.5 * (d * std::log(2 * std::numbers::pi) + logdet);
  }
  return out;
}

inline double maha_sq(const ComponentCache& c, const VectorXd& mean, const VectorXd& x) {
  return c.llt.matrixL().solve(x - mean).squaredNorm();
}

inline double log_sum_exp(std::span<const double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

inline void regularize(MatrixXd& cov, double eps) {
  cov = 0.5 * (cov + cov.transpose());
  cov.diagonal().array() += eps;
}

inline std::vector<Eigen::Index> distinct_rows(const MatrixXd& x) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    bool seen = false;
    for (auto j : out) {
      if (x.row(i) == x.row(j)) {
        seen = true;
        break;
      }
    }
    if (!seen) out.push_back(i);
  }
  return out;
}

inline GmmState single_component(const MatrixXd& x, double eps_cov) {
  GmmState s;
  s.weights = {1.0};
  VectorXd mean = x.colwise().mean().transpose();
  MatrixXd centered = x.rowwise() - mean.transpose();
  MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows());
  regularize(cov, eps_cov);
  s.means = {mean};
  s.covs = {cov};
  return s;
}

}  // namespace detail

/// Per-row log-likelihood contributions summed.
inline double log_likelihood(const GmmState& s, const MatrixXd& x) {
  const auto cc = detail::cache(s);
  std::vector<double> lp(static_cast<size_t>(s.components()));
  double ll = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const VectorXd xi = x.row(i).transpose();
    for (int g = 0; g < s.components(); ++g) {
      lp[static_cast<size_t>(g)] = cc[static_cast<size_t>(g)].log_norm -
                                   0.5 * detail::maha_sq(cc[static_cast<size_t>(g)], s.means[static_cast<size_t>(g)], xi);
    }
    ll += detail::log_sum_exp(lp);
  }
  return ll;
}

/// EM fit. Rows that are all identical (or fewer distinct rows than G) fall
/// back to fewer components.
inline GmmState fit_gmm(const MatrixXd& x, int g_req, std::uint64_t seed, const FitOptions& opt = {}) {
  if (g_req < 1) throw Error(ErrorCode::kInvalidArgument, "GMM needs at least one component");
  if (x.rows() < g_req) throw Error(ErrorCode::kInvalidArgument, "GMM needs at least G rows");
  const auto n = x.rows();
  const auto d = x.cols();
  const auto distinct = detail::distinct_rows(x);
  const int g_count = std::min<int>(g_req, static_cast<int>(distinct.size()));
  if (g_count == 1) {
    GmmState s = detail::single_component(x, opt.eps_cov);
    s.log_likelihood = log_likelihood(s, x);
    return s;
  }

  // k-means++ seeding over distinct rows.
  Rng rng(seed);
  std::vector<Eigen::Index> centers{distinct[uniform_below(rng, distinct.size())]};
  std::vector<double> d2(static_cast<size_t>(n));
  while (static_cast<int>(centers.size()) < g_count) {
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (auto c : centers) best = std::min(best, (x.row(i) - x.row(c)).squaredNorm());
      d2[static_cast<size_t>(i)] = best;
      total += best;
    }
    double u = uniform01(rng) * total;
    Eigen::Index pick = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      u -= d2[static_cast<size_t>(i)];
      if (u < 0 && d2[static_cast<size_t>(i)] > 0) {
        pick = i;
        break;
      }
    }
    if (d2[static_cast<size_t>(pick)] == 0) {
      for (auto idx : distinct) {
        if (d2[static_cast<size_t>(idx)] > 0) pick = idx;
      }
    }
    centers.push_back(pick);
  }

  // Hard nearest-center responsibilities to start.
  MatrixXd resp = MatrixXd::Zero(n, g_count);
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int g = 0; g < g_count; ++g) {
      const double dd = (x.row(i) - x.row(centers[static_cast<size_t>(g)])).squaredNorm();
      if (dd < bd) {
        bd = dd;
        best = g;
      }
    }
    resp(i, best) = 1.0;
  }

  GmmState s;
  s.weights.assign(static_cast<size_t>(g_count), 1.0 / g_count);
  s.means.assign(static_cast<size_t>(g_count), VectorXd::Zero(d));
  s.covs.assign(static_cast<size_t>(g_count), MatrixXd::Identity(d, d));
  double prev_ll = -std::numeric_limits<double>::infinity();
  std::vector<double> lp(static_cast<size_t>(g_count));
  for (int iter = 0; iter < opt.max_iters; ++iter) {
    // M step.
    for (int g = 0; g < g_count; ++g) {
      const double nk = resp.col(g).sum();
      if (nk < 1e-10) continue;  // keep the previous parameters of an empty component
      const auto gi = static_cast<size_t>(g);
      s.weights[gi] = nk / static_cast<double>(n);
      s.means[gi] = (x.transpose() * resp.col(g)) / nk;
      MatrixXd centered = x.rowwise() - s.means[gi].transpose();
      s.covs[gi] = (centered.transpose() * resp.col(g).asDiagonal() * centered) / nk;
      detail::regularize(s.covs[gi], opt.eps_cov);
    }
    double wsum = 0;
    for (double& w : s.weights) wsum += (w = std::max(w, 1e-12));
    for (double& w : s.weights) w /= wsum;

    // E step.
    const auto cc = detail::cache(s);
    double ll = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const VectorXd xi = x.row(i).transpose();
      for (int g = 0; g < g_count; ++g) {
        lp[static_cast<size_t>(g)] = cc[static_cast<size_t>(g)].log_norm -
                                     0.5 * detail::maha_sq(cc[static_cast<size_t>(g)], s.means[static_cast<size_t>(g)], xi);
      }
      const double lse = detail::log_sum_exp(lp);
      ll += lse;
      for (int g = 0; g < g_count; ++g) resp(i, g) = std::exp(lp[static_cast<size_t>(g)] - lse);
    }
    s.log_likelihood = ll;
    if (ll - prev_ll < opt.tol) break;
    prev_ll = ll;
  }
  return s;
}

inline double bic(const GmmState& s, Eigen::Index rows) {
  return -2.0 * s.log_likelihood + bic_free_parameters(s.components(), s.dim()) * std::log(static_cast<double>(rows));
}

/// Candidate with the lowest BIC; ties go to the smaller G.
inline int select_g_bic(const MatrixXd& x, std::span<const int> candidates, std::uint64_t seed,
                        const FitOptions& opt = {}) {
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "select_g_bic needs candidates");
  std::vector<int> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  int best = sorted.front();
  double best_bic = std::numeric_limits<double>::infinity();
  for (int g : sorted) {
    if (g < 1 || g > x.rows()) throw Error(ErrorCode::kInvalidArgument, "GMM candidate exceeds row count");
    const GmmState s = fit_gmm(x, g, derive_seed(seed, {static_cast<std::uint64_t>(g)}), opt);
    if (s.components() < g) continue;  // collapsed to a smaller model already considered
    const double b = bic(s, x.rows());
    if (b < best_bic) {
      best_bic = b;
      best = g;
    }
  }
  return best;
}

struct BlendResult {
  GmmState state;
  bool reset = false;
};

/// theta = alpha * prev + (1 - alpha) * next with greedy nearest-mean
/// component pairing. A component-count mismatch adopts `next`.
inline BlendResult blend_gmm(const GmmState& prev, const GmmState& next, double alpha) {
  if (!(alpha >= 0 && alpha <= 1)) throw Error(ErrorCode::kInvalidArgument, "blend alpha must be in [0, 1]");
  if (prev.dim() != next.dim()) throw Error(ErrorCode::kDimensionMismatch, "blended GMMs differ in feature dimension");
  if (prev.components() != next.components()) return {next, true};
  const int g_count = prev.components();
  std::vector<int> match(static_cast<size_t>(g_count), -1);
  std::vector<bool> used(static_cast<size_t>(g_count), false);
  for (int round = 0; round < g_count; ++round) {
    double best = std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    for (int i = 0; i < g_count; ++i) {
      if (match[static_cast<size_t>(i)] >= 0) continue;
      for (int j = 0; j < g_count; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double dd = (prev.means[static_cast<size_t>(i)] - next.means[static_cast<size_t>(j)]).squaredNorm();
        if (dd < best) {
          best = dd;
          bi = i;
          bj = j;
        }
      }
    }
    match[static_cast<size_t>(bi)] = bj;
    used[static_cast<size_t>(bj)] = true;
  }
  GmmState out = prev;
  out.log_likelihood = 0;
  double wsum = 0;
  for (int i = 0; i < g_count; ++i) {
    const auto a = static_cast<size_t>(i);
    const auto b = static_cast<size_t>(match[a]);
    out.weights[a] = alpha * prev.weights[a] + (1 - alpha) * next.weights[b];
    out.means[a] = alpha * prev.means[a] + (1 - alpha) * next.means[b];
    out.covs[a] = alpha * prev.covs[a] + (1 - alpha) * next.covs[b];
    out.covs[a] = 0.5 * (out.covs[a] + out.covs[a].transpose());
    wsum += out.weights[a];
  }
  for (double& w : out.weights) w /= wsum;
  return {std::move(out), false};
}

struct MahalanobisResult {
  double md = 0;
  int component = 0;
};

/// Distance to the component with the largest posterior responsibility.
inline MahalanobisResult mahalanobis(const VectorXd& x, const GmmState& s) {
  if (x.size() != s.dim()) throw Error(ErrorCode::kDimensionMismatch, "feature length does not match GMM");
  const auto cc = detail::cache(s);
  MahalanobisResult best;
  double best_lp = -std::numeric_limits<double>::infinity();
  for (int g = 0; g < s.components(); ++g) {
    const double m2 = detail::maha_sq(cc[static_cast<size_t>(g)], s.means[static_cast<size_t>(g)], x);
    const double lp = cc[static_cast<size_t>(g)].log_norm - 0.5 * m2;
    if (lp > best_lp || g == 0) {
      best_lp = lp;
      best = {std::sqrt(m2), g};
    }
  }
  return best;
}

}  // namespace fedaudit::gmm

#endif  // FEDAUDIT_GMM_HPP_
