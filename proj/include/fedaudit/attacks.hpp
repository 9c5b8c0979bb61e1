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

#ifndef FEDAUDIT_ATTACKS_HPP_
#define FEDAUDIT_ATTACKS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedaudit/data.hpp"
#include "fedaudit/error.hpp"
#include "fedaudit/random.hpp"

namespace fedaudit::attacks {

enum class AttackKind { kNone, kFlipBenign, kFlipAttack, kFlipBoth, kModelScaling, kSameModel, kGradientDrift };

inline const char* attack_name(AttackKind k) {
  switch (k) {
    case AttackKind::kNone: return "none";
    case AttackKind::kFlipBenign: return "flip-benign";
    case AttackKind::kFlipAttack: return "flip-attack";
    case AttackKind::kFlipBoth: return "flip-both";
    case AttackKind::kModelScaling: return "model-scaling";
    case AttackKind::kSameModel: return "same-model";
    case AttackKind::kGradientDrift: return "gradient-drift";
  }
  return "?";
}

inline AttackKind parse_attack_kind(const std::string& s) {
  for (auto k : {AttackKind::kNone, AttackKind::kFlipBenign, AttackKind::kFlipAttack, AttackKind::kFlipBoth,
                 AttackKind::kModelScaling, AttackKind::kSameModel, AttackKind::kGradientDrift}) {
    if (s == attack_name(k)) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown attack kind '" + s + "'");
}

inline bool is_label_flip(AttackKind k) {
  return k == AttackKind::kFlipBenign || k == AttackKind::kFlipAttack || k == AttackKind::kFlipBoth;
}

struct AttackConfig {
  AttackKind kind = AttackKind::kNone;
  double ratio = 0.0;
  double scale_factor = -10.0;
  double drift_eps = 10.0;
  // Targeted flips on data with more than two classes. On binary data these
  // default to attack -> benign.
  int source_class = 1;
  int target_class = 0;
  // Unset means: true for update-space attacks, false for label flips.
  std::optional<bool> skip_conditioning;

  bool adversary_skips_conditioning() const {
    if (skip_conditioning) return *skip_conditioning;
    return kind == AttackKind::kModelScaling || kind == AttackKind::kSameModel ||
           kind == AttackKind::kGradientDrift;
  }

  void validate() const {
    if (!(ratio >= 0.0 && ratio <= 0.5)) throw Error(ErrorCode::kInvalidArgument, "attack ratio must be in [0, 0.5]");
    if (scale_factor == 0.0 || !std::isfinite(scale_factor)) {
      throw Error(ErrorCode::kInvalidArgument, "scale factor must be finite and nonzero");
    }
    if (!std::isfinite(drift_eps)) throw Error(ErrorCode::kInvalidArgument, "drift epsilon must be finite");
    if (source_class < 0 || target_class < 0) throw Error(ErrorCode::kInvalidArgument, "flip classes must be non-negative");
  }
};

/// floor(ratio * K) distinct client indices, sorted.
inline std::vector<int> select_adversaries(int clients, double ratio, std::uint64_t seed) {
  const auto count = static_cast<int>(std::floor(ratio * clients + 1e-9));
  std::vector<int> all(static_cast<size_t>(clients));
  std::iota(all.begin(), all.end(), 0);
  Rng rng(derive_seed(seed, {stream::kAdversaries}));
  std::shuffle(all.begin(), all.end(), rng);
  std::vector<int> out(all.begin(), all.begin() + std::clamp(count, 0, clients));
  std::sort(out.begin(), out.end());
  return out;
}

/// Relabels a shard. Binary data: benign <-> the single attack class per
/// mode. More than two classes: source_class -> target_class only.
inline data::Dataset flip_labels(const data::Dataset& shard, AttackKind mode, int source_class, int target_class) {
  data::Dataset out = shard;
  if (!is_label_flip(mode)) return out;
  const int classes = shard.num_classes();
  if (classes > 2) {
    if (source_class >= classes || target_class >= classes) {
      throw Error(ErrorCode::kInvalidArgument, "flip classes outside label range");
    }
    for (int& y : out.labels) {
      if (y == source_class) y = target_class;
    }
    return out;
  }
  const int benign = shard.benign_class;
  const int attack = 1 - benign;
  for (int& y : out.labels) {
    if (y == benign && (mode == AttackKind::kFlipBenign || mode == AttackKind::kFlipBoth)) {
      y = attack;
    } else if (y == attack && (mode == AttackKind::kFlipAttack || mode == AttackKind::kFlipBoth)) {
      y = benign;
    }
  }
  return out;
}

inline std::vector<double> scale_update(std::span<const double> update, double factor) {
  std::vector<double> out(update.begin(), update.end());
  for (double& v : out) v *= factor;
  return out;
}

/// -eps * (w_t - w_prev)
inline std::vector<double> gradient_drift(std::span<const double> w_t, std::span<const double> w_prev, double eps) {
  if (w_t.size() != w_prev.size()) throw Error(ErrorCode::kDimensionMismatch, "gradient_drift snapshots differ in size");
  std::vector<double> out(w_t.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = -eps * (w_t[i] - w_prev[i]);
  return out;
}

/// Copies the leader's poisoned update to every adversary. Returns one entry
/// per adversary; empty for no adversaries.
inline std::vector<std::vector<double>> same_model_updates(std::span<const double> leader_update, size_t adversaries) {
  return std::vector<std::vector<double>>(adversaries, std::vector<double>(leader_update.begin(), leader_update.end()));
}

}  // namespace fedaudit::attacks

#endif  // FEDAUDIT_ATTACKS_HPP_
