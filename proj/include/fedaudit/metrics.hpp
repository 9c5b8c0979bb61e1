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

#ifndef FEDAUDIT_METRICS_HPP_
#define FEDAUDIT_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "fedaudit/error.hpp"

namespace fedaudit::metrics {

/// Square confusion matrix, rows = true class, columns = predicted class.
class Confusion {
 public:
  explicit Confusion(int classes = 2)
      : classes_(classes), counts_(static_cast<size_t>(classes) * classes, 0) {}

  Confusion(int classes, std::vector<std::int64_t> counts) : classes_(classes), counts_(std::move(counts)) {
    if (counts_.size() != static_cast<size_t>(classes) * classes) {
      throw Error(ErrorCode::kDimensionMismatch, "confusion counts must be classes^2");
    }
  }

  int classes() const { return classes_; }
  void add(int truth, int predicted) { ++counts_[index(truth, predicted)]; }
  std::int64_t at(int truth, int predicted) const { return counts_[index(truth, predicted)]; }

  std::int64_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0}); }
  std::int64_t row_total(int truth) const {
    std::int64_t s = 0;
    for (int c = 0; c < classes_; ++c) s += at(truth, c);
    return s;
  }
  std::int64_t col_total(int predicted) const {
    std::int64_t s = 0;
    for (int c = 0; c < classes_; ++c) s += at(c, predicted);
    return s;
  }

  double accuracy() const {
    const auto t = total();
    if (t == 0) return 0.0;
    std::int64_t diag = 0;
    for (int c = 0; c < classes_; ++c) diag += at(c, c);
    return static_cast<double>(diag) / static_cast<double>(t);
  }

  /// Accuracy restricted to rows whose true class is in `rows`.
  double accuracy_on(std::span<const int> rows) const {
    std::int64_t hit = 0, tot = 0;
    for (int r : rows) {
      hit += at(r, r);
      tot += row_total(r);
    }
    return tot == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(tot);
  }

  double f1(int c) const {
    const double tp = static_cast<double>(at(c, c));
    const double fp = static_cast<double>(col_total(c)) - tp;
    const double fn = static_cast<double>(row_total(c)) - tp;
    const double denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2 * tp / denom;
  }

  /// Unweighted mean of per-class F1 over classes present in truth or predictions.
  double macro_f1() const {
    double sum = 0;
    int used = 0;
    for (int c = 0; c < classes_; ++c) {
      if (row_total(c) == 0 && col_total(c) == 0) continue;
      sum += f1(c);
      ++used;
    }
    return used == 0 ? 0.0 : sum / used;
  }

  /// Fraction of true-`source` samples predicted as `target`.
  double flip_rate(int source, int target) const {
    const auto rt = row_total(source);
    return rt == 0 ? 0.0 : static_cast<double>(at(source, target)) / static_cast<double>(rt);
  }

  const std::vector<std::int64_t>& counts() const { return counts_; }

 private:
  size_t index(int truth, int predicted) const {
    if (truth < 0 || truth >= classes_ || predicted < 0 || predicted >= classes_) {
      throw Error(ErrorCode::kDimensionMismatch, "class index outside confusion matrix");
    }
    return static_cast<size_t>(truth) * classes_ + predicted;
  }

  int classes_;
  std::vector<std::int64_t> counts_;
};

struct RocPoint {
  double fpr = 0;
  double tpr = 0;
};

/// ROC curve from anomaly scores (higher = more suspicious) against ground
/// truth (true = adversary). Equal scores are swept together, so ties
/// contribute a diagonal segment. Empty when either class is missing.
inline std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw Error(ErrorCode::kDimensionMismatch, "roc_curve inputs differ in length");
  const auto pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const auto neg = static_cast<double>(positive.size()) - pos;
  if (pos == 0 || neg == 0) return {};
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> pts{{0.0, 0.0}};
  double tp = 0, fp = 0;
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (positive[order[j]]) tp += 1; else fp += 1;
      ++j;
    }
    pts.push_back({fp / neg, tp / pos});
    i = j;
  }
  return pts;
}

/// Trapezoidal area under a ROC curve; NaN for an empty curve.
inline double auc(std::span<const RocPoint> pts) {
  if (pts.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double a = 0;
  for (size_t i = 1; i < pts.size(); ++i) {
    a += (pts[i].fpr - pts[i - 1].fpr) * (pts[i].tpr + pts[i - 1].tpr) / 2;
  }
  return a;
}

}  // namespace fedaudit::metrics

#endif  // FEDAUDIT_METRICS_HPP_
