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
// Central auditor: client registration, per-update feature extraction, a
// blended GMM of reference behaviour, Mahalanobis distances and their
// round-to-round trajectory, and the three-threshold verdict rule.

#ifndef FEDAUDIT_AUDIT_HPP_
#define FEDAUDIT_AUDIT_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fedaudit/error.hpp"
#include "fedaudit/format.hpp"
#include "fedaudit/gmm.hpp"
#include "fedaudit/random.hpp"

namespace fedaudit::audit {

inline constexpr int kFeatureDim = 5;
using Features = std::array<double, kFeatureDim>;

inline const std::array<const char*, kFeatureDim>& feature_names() {
  static const std::array<const char*, kFeatureDim> names{"l2", "l1_over_l2", "cosine", "mean", "zero_fraction"};
  return names;
}

/// [L2 norm, L1/L2, cosine to direction, signed mean, zero fraction].
inline Features extract_features(std::span<const double> update, std::span<const double> direction = {}) {
  if (update.empty()) throw Error(ErrorCode::kInvalidArgument, "extract_features on empty update");
  if (!direction.empty() && direction.size() != update.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "direction length differs from update");
  }
  double l1 = 0, l2sq = 0, sum = 0, dot = 0, dsq = 0;
  size_t zeros = 0;
  for (size_t i = 0; i < update.size(); ++i) {
    const double v = update[i];
    l1 += std::fabs(v);
    l2sq += v * v;
    sum += v;
    if (v == 0.0) ++zeros;
    if (!direction.empty()) {
      dot += v * direction[i];
      dsq += direction[i] * direction[i];
    }
  }
  const double l2 = std::sqrt(l2sq);
  const double n = static_cast<double>(update.size());
  const double cosine = (l2 > 0 && dsq > 0) ? dot / (l2 * std::sqrt(dsq)) : 0.0;
  return {l2, l2 > 0 ? l1 / l2 : 0.0, cosine, sum / n, static_cast<double>(zeros) / n};
}

/// |MD(t) - MD(t-1)|, 0 with a single entry.
inline double trajectory_score(std::span<const double> history) {
  if (history.empty()) throw Error(ErrorCode::kInvalidArgument, "trajectory_score on empty history");
  if (history.size() < 2) return 0.0;
  return std::fabs(history[history.size() - 1] - history[history.size() - 2]);
}

struct Thresholds {
  double t_norm = std::numeric_limits<double>::infinity();
  double t_md = std::numeric_limits<double>::infinity();
  double t_traj = std::numeric_limits<double>::infinity();
  double k = 3.0;
  double down_weight = 0.5;
};

enum class VerdictKind { kAccept, kDownWeight, kReject };

inline const char* verdict_name(VerdictKind v) {
  switch (v) {
    case VerdictKind::kAccept: return "accept";
    case VerdictKind::kDownWeight: return "downweight";
    case VerdictKind::kReject: return "reject";
  }
  return "?";
}

struct Verdict {
  VerdictKind kind = VerdictKind::kAccept;
  double weight = 1.0;
};

inline Verdict decide(double md, double dmd, double norm, const Thresholds& th) {
  const int v = (md > th.t_md) + (dmd > th.t_traj) + (norm > th.t_norm);
  if (v == 0) return {VerdictKind::kAccept, 1.0};
  if (v == 1) return {VerdictKind::kDownWeight, th.down_weight};
  return {VerdictKind::kReject, 0.0};
}

// ---------------------------------------------------------------------------
// Robust statistics

inline double median(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorCode::kInvalidArgument, "median of empty set");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Median absolute deviation (unscaled).
inline double mad(const std::vector<double>& v) {
  const double m = median(v);
  std::vector<double> dev;
  dev.reserve(v.size());
  for (double x : v) dev.push_back(std::fabs(x - m));
  return median(std::move(dev));
}

/// Linear-interpolation quantile of the sample.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw Error(ErrorCode::kInvalidArgument, "quantile of empty set");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// Thresholds from the reference clients' statistics. With fewer than three
/// clients the previous thresholds are returned unchanged.
inline Thresholds update_thresholds(const std::vector<double>& md, const std::vector<double>& dmd,
                                    const std::vector<double>& norms, double k, double traj_quantile,
                                    double eps_thr, const Thresholds& previous, double mad_floor = 0.0) {
  if (md.size() != dmd.size() || md.size() != norms.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "threshold statistics differ in length");
  }
  if (md.size() < 3) return previous;
  Thresholds th = previous;
  th.k = k;
  th.t_md = std::max(k * sample_stddev(md), eps_thr);
  const double norm_median = median(norms);
  th.t_norm = std::max(norm_median + k * std::max(mad(norms), mad_floor * std::fabs(norm_median)), eps_thr);
  th.t_traj = std::max(quantile(dmd, traj_quantile), eps_thr);
  return th;
}

// ---------------------------------------------------------------------------
// Registration table

struct AuditEntry {
  std::string tag_id;
  int client = 0;
  int round = 0;
  Features features{};
  double md = 0;
  double dmd = 0;
  double score = 0;
  VerdictKind verdict = VerdictKind::kAccept;
  double weight = 1.0;
};

class AuditTable {
 public:
  /// Adds a client tag; a duplicate tag is refused and the table unchanged.
  bool register_client(const std::string& tag) {
    if (std::find(tags_.begin(), tags_.end(), tag) != tags_.end()) return false;
    tags_.push_back(tag);
    return true;
  }

  int clients() const { return static_cast<int>(tags_.size()); }
  const std::string& tag(int client) const { return tags_.at(static_cast<size_t>(client)); }
  const std::vector<std::string>& tags() const { return tags_; }

  void record(AuditEntry e) {
    for (const auto& x : entries_) {
      if (x.client == e.client && x.round == e.round) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate audit entry for client " + std::to_string(e.client) +
                                                     " round " + std::to_string(e.round));
      }
    }
    entries_.push_back(std::move(e));
  }
  const std::vector<AuditEntry>& entries() const { return entries_; }

  static std::string csv_header() {
    std::string h = "tag_id,client,round";
    for (const char* n : feature_names()) h += std::string(",") + n;
    return h + ",md,dmd,score,verdict,weight";
  }

  void write_csv(std::ostream& os) const {
    os << csv_header() << '\n';
    for (const auto& e : entries_) {
      os << e.tag_id << ',' << e.client << ',' << e.round;
      for (double f : e.features) os << ',' << format_double(f);
      os << ',' << format_double(e.md) << ',' << format_double(e.dmd) << ',' << format_double(e.score) << ','
         << verdict_name(e.verdict) << ',' << format_double(e.weight) << '\n';
    }
  }

 private:
  std::vector<std::string> tags_;
  std::vector<AuditEntry> entries_;
};

/// K clients with distinct random 64-bit hex tags.
inline AuditTable register_clients(int clients, std::uint64_t seed) {
  if (clients < 2) throw Error(ErrorCode::kInvalidArgument, "registration needs at least 2 clients");
  AuditTable table;
  Rng rng(derive_seed(seed, {stream::kRegistration}));
  while (table.clients() < clients) {
    std::ostringstream tag;
    tag << std::hex << std::setw(16) << std::setfill('0') << rng();
    table.register_client(tag.str());
  }
  return table;
}

// ---------------------------------------------------------------------------
// Auditor

struct AuditConfig {
  double blend_alpha = 0.5;
  double k = 5.0;
  double traj_quantile = 0.95;
  int warmup_rounds = 3;
  double down_weight = 0.5;
  double eps_thr = 1e-6;
  double eps_cov = 0.05;
  // Lower bound on each feature scale, as a fraction of its median magnitude.
  double scale_floor = 0.25;
  double prescreen_k = 3.0;
  std::vector<int> g_candidates{1, 2, 3};
  int em_max_iters = 200;
  double em_tol = 1e-6;

  void validate() const {
    if (!(blend_alpha >= 0 && blend_alpha <= 1)) throw Error(ErrorCode::kInvalidArgument, "audit.alpha must be in [0, 1]");
    if (!(k > 0)) throw Error(ErrorCode::kInvalidArgument, "audit.k must be positive");
    if (!(traj_quantile > 0 && traj_quantile <= 1)) throw Error(ErrorCode::kInvalidArgument, "audit.traj_quantile must be in (0, 1]");
    if (warmup_rounds < 0) throw Error(ErrorCode::kInvalidArgument, "audit.warmup_rounds must be non-negative");
    if (!(down_weight > 0 && down_weight < 1)) throw Error(ErrorCode::kInvalidArgument, "audit.down_weight must be in (0, 1)");
    if (!(eps_thr > 0) || !(eps_cov > 0)) throw Error(ErrorCode::kInvalidArgument, "audit epsilons must be positive");
    if (!(scale_floor >= 0)) throw Error(ErrorCode::kInvalidArgument, "audit.scale_floor must be non-negative");
    if (g_candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "audit.g_candidates must not be empty");
    for (int g : g_candidates) {
      if (g < 1) throw Error(ErrorCode::kInvalidArgument, "audit.g_candidates must be positive");
    }
  }
};

struct ClientAudit {
  Features features{};
  double md = 0;
  double dmd = 0;
  double norm = 0;
  double score = 0;
  Verdict verdict;
  bool reference = false;
};

struct RoundAudit {
  int round = 0;
  bool warmup = true;
  bool gmm_reset = false;
  Thresholds thresholds;  // thresholds the verdicts were taken against
  std::vector<ClientAudit> clients;
  int accepted = 0;
  int downweighted = 0;
  int rejected = 0;
};

/// Per-feature robust standardization (median, 1.4826 * MAD).
struct FeatureScaler {
  Features center{};
  Features scale{1, 1, 1, 1, 1};

  static FeatureScaler fit(const std::vector<Features>& rows, double scale_floor) {
    FeatureScaler s;
    for (int j = 0; j < kFeatureDim; ++j) {
      std::vector<double> col;
      for (const auto& r : rows) col.push_back(r[static_cast<size_t>(j)]);
      const double m = median(col);
      double sc = std::max(1.4826 * mad(col), scale_floor * std::fabs(m));
      if (!(sc > 1e-12)) sc = 1.0;
      s.center[static_cast<size_t>(j)] = m;
      s.scale[static_cast<size_t>(j)] = sc;
    }
    return s;
  }

  Eigen::VectorXd apply(const Features& f) const {
    Eigen::VectorXd v(kFeatureDim);
    for (int j = 0; j < kFeatureDim; ++j) {
      v(j) = (f[static_cast<size_t>(j)] - center[static_cast<size_t>(j)]) / scale[static_cast<size_t>(j)];
    }
    return v;
  }
};

class Auditor {
 public:
  Auditor(AuditConfig cfg, AuditTable table, std::uint64_t seed)
      : cfg_(std::move(cfg)), table_(std::move(table)), seed_(seed),
        history_(static_cast<size_t>(table_.clients())) {
    cfg_.validate();
    thresholds_.k = cfg_.k;
    thresholds_.down_weight = cfg_.down_weight;
  }

  const AuditConfig& config() const { return cfg_; }
  const AuditTable& table() const { return table_; }
  const Thresholds& thresholds() const { return thresholds_; }
  const std::optional<gmm::GmmState>& gmm_state() const { return gmm_; }
  int selected_components() const { return selected_g_; }
  const FeatureScaler& scaler() const { return scaler_; }

  /// Audits one round of decrypted client updates. `direction` is the last
  /// global model step (empty when unavailable); `expected_zero_fraction`
  /// is the sparsity the pruning schedule guarantees for compliant clients.
  RoundAudit audit_round(int round, std::span<const std::vector<double>> updates,
                         std::span<const double> direction = {}, double expected_zero_fraction = 0.0) {
    const int k_clients = table_.clients();
    if (static_cast<int>(updates.size()) != k_clients) {
      throw Error(ErrorCode::kDimensionMismatch, "audit_round expects one update per registered client");
    }
    RoundAudit out;
    out.round = round;
    out.clients.resize(updates.size());
    std::vector<Features> feats;
    for (size_t i = 0; i < updates.size(); ++i) {
      feats.push_back(extract_features(updates[i], direction));
      out.clients[i].features = feats.back();
      out.clients[i].norm = feats.back()[0];
    }

    // Standardize against this round's prescreened clients.
    const auto screened = prescreen(feats, expected_zero_fraction);
    {
      std::vector<Features> rows;
      for (size_t i : screened) rows.push_back(feats[i]);
      scaler_ = FeatureScaler::fit(rows, cfg_.scale_floor);
    }

    const bool have_direction = !direction.empty();
    bool fresh = false;
    if (!gmm_ || (init_without_direction_ && have_direction)) {
      initialize(feats, screened, have_direction, round);
      fresh = true;
    }

    // Distances against the round-start mixture.
    for (size_t i = 0; i < updates.size(); ++i) {
      auto& c = out.clients[i];
      c.md = gmm::mahalanobis(scaler_.apply(feats[i]), *gmm_).md;
      history_[i].push_back(c.md);
      c.dmd = trajectory_score(history_[i]);
    }

    // Thresholds from this round's screened clients.
    for (size_t i : screened) out.clients[i].reference = true;
    {
      std::vector<double> md, dmd, norms;
      for (size_t i : screened) {
        md.push_back(out.clients[i].md);
        dmd.push_back(out.clients[i].dmd);
        norms.push_back(out.clients[i].norm);
      }
      thresholds_ = update_thresholds(md, dmd, norms, cfg_.k, cfg_.traj_quantile, cfg_.eps_thr, thresholds_, cfg_.scale_floor);
      thresholds_.down_weight = cfg_.down_weight;
    }

    out.warmup = audited_rounds_ < cfg_.warmup_rounds;
    out.thresholds = out.warmup ? Thresholds{} : thresholds_;
    out.thresholds.k = cfg_.k;
    out.thresholds.down_weight = cfg_.down_weight;
    for (auto& c : out.clients) {
      if (out.warmup) {
        c.verdict = {VerdictKind::kAccept, 1.0};
        c.score = 0.0;
      } else {
        c.verdict = decide(c.md, c.dmd, c.norm, thresholds_);
        c.score = std::max({c.md / thresholds_.t_md, c.dmd / thresholds_.t_traj, c.norm / thresholds_.t_norm});
      }
      switch (c.verdict.kind) {
        case VerdictKind::kAccept: ++out.accepted; break;
        case VerdictKind::kDownWeight: ++out.downweighted; break;
        case VerdictKind::kReject: ++out.rejected; break;
      }
    }

    // Refit on the screened clients and blend into the running mixture.
    if (!fresh && static_cast<int>(screened.size()) >= std::max(selected_g_, 2)) {
      Eigen::MatrixXd x(static_cast<Eigen::Index>(screened.size()), kFeatureDim);
      for (size_t r = 0; r < screened.size(); ++r) {
        x.row(static_cast<Eigen::Index>(r)) = scaler_.apply(feats[screened[r]]).transpose();
      }
      const auto next = gmm::fit_gmm(x, selected_g_, derive_seed(seed_, {stream::kAudit, static_cast<std::uint64_t>(round)}),
                                     fit_options());
      auto blended = gmm::blend_gmm(*gmm_, next, cfg_.blend_alpha);
      out.gmm_reset = blended.reset;
      gmm_ = std::move(blended.state);
    }

    for (size_t i = 0; i < out.clients.size(); ++i) {
      const auto& c = out.clients[i];
      table_.record({table_.tag(static_cast<int>(i)), static_cast<int>(i), round, c.features, c.md, c.dmd, c.score,
                     c.verdict.kind, c.verdict.weight});
    }
    ++audited_rounds_;
    return out;
  }

 private:
  gmm::FitOptions fit_options() const { return {cfg_.em_max_iters, cfg_.em_tol, cfg_.eps_cov}; }

  /// Clients whose sparsity meets the schedule and whose update norm is
  /// within median + k * MAD of those clients; everyone when fewer than
  /// three pass a stage.
  std::vector<size_t> prescreen(const std::vector<Features>& feats, double expected_zero_fraction) const {
    std::vector<size_t> compliant;
    for (size_t i = 0; i < feats.size(); ++i) {
      if (feats[i][4] >= expected_zero_fraction) compliant.push_back(i);
    }
    if (compliant.size() < 3) {
      compliant.resize(feats.size());
      std::iota(compliant.begin(), compliant.end(), size_t{0});
    }
    std::vector<double> norms;
    for (size_t i : compliant) norms.push_back(feats[i][0]);
    const double m = median(norms);
    const double bound = m + cfg_.prescreen_k * std::max(mad(norms), cfg_.scale_floor * m);
    std::vector<size_t> ref;
    for (size_t i : compliant) {
      if (feats[i][0] <= bound) ref.push_back(i);
    }
    return ref.size() < 3 ? compliant : ref;
  }

  std::vector<int> candidates(Eigen::Index rows) const {
    std::vector<int> out;
    for (int g : cfg_.g_candidates) {
      if (g <= rows) out.push_back(g);
    }
    if (out.empty()) out.push_back(1);
    return out;
  }

  void initialize(const std::vector<Features>& feats, const std::vector<size_t>& ref, bool have_direction, int round) {
    std::vector<Features> rows;
    for (size_t i : ref) rows.push_back(feats[i]);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), kFeatureDim);
    for (size_t r = 0; r < rows.size(); ++r) x.row(static_cast<Eigen::Index>(r)) = scaler_.apply(rows[r]).transpose();
    const auto fit_seed = derive_seed(seed_, {stream::kAudit, static_cast<std::uint64_t>(round), 0xb1c});
    selected_g_ = gmm::select_g_bic(x, candidates(x.rows()), fit_seed, fit_options());
    gmm_ = gmm::fit_gmm(x, selected_g_, fit_seed, fit_options());
    selected_g_ = gmm_->components();
    init_without_direction_ = !have_direction;
    for (auto& h : history_) h.clear();
  }

  AuditConfig cfg_;
  AuditTable table_;
  std::uint64_t seed_;
  std::vector<std::vector<double>> history_;
  std::optional<gmm::GmmState> gmm_;
  FeatureScaler scaler_;
  Thresholds thresholds_;
  int selected_g_ = 1;
  int audited_rounds_ = 0;
  bool init_without_direction_ = false;
};

}  // namespace fedaudit::audit

#endif  // FEDAUDIT_AUDIT_HPP_
