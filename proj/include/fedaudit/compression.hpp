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
// Client-side update conditioning: scheduled magnitude pruning, mean-based
// clipping and an unbiased K-level stochastic quantizer.

#ifndef FEDAUDIT_COMPRESSION_HPP_
#define FEDAUDIT_COMPRESSION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fedaudit/error.hpp"
#include "fedaudit/random.hpp"

namespace fedaudit::compression {

struct PruneSchedule {
  double p0 = 0.1;
  double p_target = 0.5;
  int t_eff = 0;
  int t_target = 30;

  void validate() const {
    if (!(t_eff < t_target)) throw Error(ErrorCode::kInvalidArgument, "prune schedule needs t_eff < t_target");
    if (!(0.0 <= p0 && p0 < p_target && p_target < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "prune schedule needs 0 <= p0 < p_target < 1");
    }
  }
};

/// Linear ramp from p0 at t_eff to p_target at t_target, flat outside.
inline double pruning_rate(const PruneSchedule& s, int t) {
  const double frac = std::max(0.0, static_cast<double>(t - s.t_eff) / (s.t_target - s.t_eff));
  return std::min(frac * (s.p_target - s.p0) + s.p0, s.p_target);
}

struct PruneResult {
  std::vector<double> values;
  std::vector<bool> mask;  // true = kept
};

/// Zeroes exactly floor(rate * d) smallest-magnitude entries; ties go to the
/// lower index.
inline PruneResult prune(std::span<const double> update, double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorCode::kInvalidArgument, "prune rate must be in [0, 1)");
  const size_t d = update.size();
  const auto count = static_cast<size_t>(std::floor(rate * static_cast<double>(d)));
  PruneResult out{std::vector<double>(update.begin(), update.end()), std::vector<bool>(d, true)};
  if (count == 0) return out;
  std::vector<size_t> order(d);
  std::iota(order.begin(), order.end(), size_t{0});
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count - 1), order.end(),
                   [&](size_t a, size_t b) {
                     const double fa = std::fabs(update[a]);
                     const double fb = std::fabs(update[b]);
                     return fa < fb || (fa == fb && a < b);
                   });
  for (size_t i = 0; i < count; ++i) {
    out.values[order[i]] = 0.0;
    out.mask[order[i]] = false;
  }
  return out;
}

struct ClipConfig {
  double alpha = 3.0;
};

struct ClipResult {
  std::vector<double> values;
  double mu = 0.0;
};

/// Clamps every entry to [-alpha * mu, alpha * mu] with mu = mean(|update|).
inline ClipResult clip_update(std::span<const double> update, const ClipConfig& cfg) {
  if (update.empty()) throw Error(ErrorCode::kInvalidArgument, "clip_update on empty update");
  if (!(cfg.alpha > 0.0)) throw Error(ErrorCode::kInvalidArgument, "clip alpha must be positive");
  double sum = 0.0;
  for (double v : update) sum += std::fabs(v);
  ClipResult out;
  out.mu = sum / static_cast<double>(update.size());
  const double bound = cfg.alpha * out.mu;
  out.values.reserve(update.size());
  for (double v : update) out.values.push_back(std::clamp(v, -bound, bound));
  return out;
}

struct QuantizerConfig {
  double r1 = -1.0;
  double r2 = 1.0;
  int levels = 255;

  double delta() const { return (r2 - r1) / (levels - 1); }

  void validate() const {
    if (levels < 2) throw Error(ErrorCode::kInvalidArgument, "quantizer needs at least 2 levels");
    if (!(r1 < r2) || !std::isfinite(r1) || !std::isfinite(r2)) {
      throw Error(ErrorCode::kInvalidArgument, "quantizer range needs finite r1 < r2");
    }
  }

  static QuantizerConfig symmetric(double half_width, int levels) {
    QuantizerConfig c{-half_width, half_width, levels};
    c.validate();
    return c;
  }
};

/// T(l). Written as an interpolation between r1 and r2 so the grid endpoints
/// and, for symmetric ranges with odd N, the midpoint 0 are exact.
inline double dequantize(int level, const QuantizerConfig& cfg) {
  if (level < 0 || level > cfg.levels - 1) {
    throw Error(ErrorCode::kLevelOutOfRange, "level " + std::to_string(level) + " outside [0, " +
                                                 std::to_string(cfg.levels - 1) + "]");
  }
  if (level == 0) return cfg.r1;
  if (level == cfg.levels - 1) return cfg.r2;
  const double n1 = cfg.levels - 1;
  return (cfg.r1 * (n1 - level) + cfg.r2 * level) / n1;
}

/// Stochastic rounding to the neighbouring grid points; unbiased.
inline int quantize(double x, const QuantizerConfig& cfg, Rng& rng) {
  if (!(x >= cfg.r1 && x <= cfg.r2)) {
    throw Error(ErrorCode::kValueOutOfRange, "value " + std::to_string(x) + " outside quantizer range");
  }
  int l = static_cast<int>(std::floor((x - cfg.r1) / cfg.delta()));
  l = std::clamp(l, 0, cfg.levels - 2);
  while (l > 0 && x < dequantize(l, cfg)) --l;
  while (l < cfg.levels - 2 && x > dequantize(l + 1, cfg)) ++l;
  const double lo = dequantize(l, cfg);
  const double hi = dequantize(l + 1, cfg);
  if (x == lo) return l;
  if (x == hi) return l + 1;
  const double p_up = (x - lo) / (hi - lo);
  return uniform01(rng) < p_up ? l + 1 : l;
}

/// Real-valued weighted sum recovered from a summed level vector entry:
/// weight_sum * r1 + delta * level_sum.
inline double dequantize_weighted_sum(std::int64_t level_sum, std::int64_t weight_sum,
                                      const QuantizerConfig& cfg) {
  if (weight_sum <= 0) throw Error(ErrorCode::kInvalidArgument, "weight_sum must be positive");
  return static_cast<double>(weight_sum) * cfg.r1 + cfg.delta() * static_cast<double>(level_sum);
}

struct ConditionedUpdate {
  std::vector<double> values;  // post-prune, post-clip, clamped to [r1, r2]
  std::vector<bool> mask;
  std::vector<int> levels;
  QuantizerConfig config;
  double mu = 0.0;  // mean |update| reported alongside the ciphertexts
};

/// prune -> clip -> clamp -> quantize. With skip_conditioning the prune and
/// clip steps are bypassed; clamping to the shared grid is still required for
/// the update to be encodable.
inline ConditionedUpdate condition_update(std::span<const double> update, double prune_rate,
                                          const ClipConfig& clip, const QuantizerConfig& qcfg,
                                          Rng& rng, bool skip_conditioning = false) {
  qcfg.validate();
  ConditionedUpdate out;
  out.config = qcfg;
  if (skip_conditioning) {
    out.values.assign(update.begin(), update.end());
    out.mask.assign(update.size(), true);
    double sum = 0.0;
    for (double v : update) sum += std::fabs(v);
    out.mu = update.empty() ? 0.0 : sum / static_cast<double>(update.size());
  } else {
    PruneResult pruned = prune(update, prune_rate);
    ClipResult clipped = clip_update(pruned.values, clip);
    out.values = std::move(clipped.values);
    out.mask = std::move(pruned.mask);
    out.mu = clipped.mu;
  }
  out.levels.reserve(out.values.size());
  for (double& v : out.values) {
    v = std::clamp(v, qcfg.r1, qcfg.r2);
    out.levels.push_back(quantize(v, qcfg, rng));
  }
  return out;
}

inline std::vector<double> dequantize_all(std::span<const int> levels, const QuantizerConfig& cfg) {
  std::vector<double> out;
  out.reserve(levels.size());
  for (int l : levels) out.push_back(dequantize(l, cfg));
  return out;
}

}  // namespace fedaudit::compression

#endif  // FEDAUDIT_COMPRESSION_HPP_
