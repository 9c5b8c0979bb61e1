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

#ifndef FEDAUDIT_DATA_HPP_
#define FEDAUDIT_DATA_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fedaudit/error.hpp"
#include "fedaudit/random.hpp"

namespace fedaudit::data {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  int benign_class = 0;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }

  std::vector<std::int64_t> class_counts() const {
    std::vector<std::int64_t> counts(class_names.size(), 0);
    for (int y : labels) ++counts[static_cast<size_t>(y)];
    return counts;
  }

  Dataset subset(const std::vector<Eigen::Index>& idx) const {
    Dataset out;
    out.class_names = class_names;
    out.benign_class = benign_class;
    out.features.resize(static_cast<Eigen::Index>(idx.size()), dim());
    out.labels.reserve(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
      out.features.row(static_cast<Eigen::Index>(i)) = features.row(idx[i]);
      out.labels.push_back(labels[static_cast<size_t>(idx[i])]);
    }
    return out;
  }

  void validate() const {
    if (static_cast<size_t>(features.rows()) != labels.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "feature rows and labels differ");
    }
    for (int y : labels) {
      if (y < 0 || y >= num_classes()) throw Error(ErrorCode::kUnknownLabel, "label index out of range");
    }
    if (!features.allFinite()) throw Error(ErrorCode::kParseError, "non-finite feature value");
  }
};

/// Per-column z-score. Columns with zero spread are centered to 0.
inline void zscore_normalize(Dataset& ds) {
  for (Eigen::Index c = 0; c < ds.dim(); ++c) {
    auto col = ds.features.col(c);
    const double mean = col.mean();
    col.array() -= mean;
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, ds.rows())));
    if (sd > 0) col /= sd;
  }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline bool parse_double(const std::string& s, double& v) {
  size_t b = s.find_first_not_of(" \t");
  size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return false;
  const char* first = s.data() + b;
  const char* last = s.data() + e + 1;
  auto [ptr, ec] = std::from_chars(first, last, v);
  return ec == std::errc() && ptr == last;
}

inline bool is_integer_label(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace detail

/// Parses a header-first CSV. Every column except `label_column` must be
/// numeric. Class indices follow sorted label order (numeric order when all
/// labels are non-negative integers).
inline Dataset parse_csv(std::istream& in, const std::string& label_column, bool normalize,
                         const std::string& benign_label = "benign",
                         const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, source + ": missing header row");
  const auto header = detail::split_csv_line(line);
  const auto it = std::find(header.begin(), header.end(), label_column);
  if (it == header.end()) {
    throw Error(ErrorCode::kUnknownLabel, source + ": label column '" + label_column + "' not in header");
  }
  const size_t label_idx = static_cast<size_t>(it - header.begin());
  const size_t ncols = header.size();

  std::vector<double> values;
  std::vector<std::string> raw_labels;
  size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != ncols) {
      throw Error(ErrorCode::kParseError, source + ": row " + std::to_string(row) + " has " +
                                              std::to_string(cells.size()) + " columns, expected " +
                                              std::to_string(ncols));
    }
    for (size_t c = 0; c < ncols; ++c) {
      if (c == label_idx) {
        raw_labels.push_back(cells[c]);
        continue;
      }
      double v = 0;
      if (!detail::parse_double(cells[c], v) || !std::isfinite(v)) {
        throw Error(ErrorCode::kParseError, source + ": row " + std::to_string(row) + ", column " +
                                                std::to_string(c + 1) + " ('" + header[c] +
                                                "'): not a finite number: '" + cells[c] + "'");
      }
      values.push_back(v);
    }
  }

  Dataset ds;
  const auto nrows = static_cast<Eigen::Index>(raw_labels.size());
  const auto nfeat = static_cast<Eigen::Index>(ncols - 1);
  ds.features = Eigen::Map<Matrix>(values.data(), nrows, nfeat);

  std::vector<std::string> names = raw_labels;
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  if (std::all_of(names.begin(), names.end(), detail::is_integer_label)) {
    std::sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
      return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
  }
  std::map<std::string, int> index;
  for (size_t i = 0; i < names.size(); ++i) index[names[i]] = static_cast<int>(i);
  ds.labels.reserve(raw_labels.size());
  for (const auto& l : raw_labels) ds.labels.push_back(index.at(l));
  ds.class_names = std::move(names);
  const auto b = index.find(benign_label);
  ds.benign_class = b == index.end() ? 0 : b->second;
  if (normalize) zscore_normalize(ds);
  ds.validate();
  return ds;
}

inline Dataset load_csv(const std::string& path, const std::string& label_column, bool normalize,
                        const std::string& benign_label = "benign") {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return parse_csv(in, label_column, normalize, benign_label, path);
}

/// Gaussian class clusters. Class means are separation / sqrt(2) times
/// orthonormal random directions, so every pair of means is `separation`
/// apart; noise is unit isotropic. Class 0 is named "benign".
inline Dataset synth_generate(const std::vector<int>& class_counts, int d, double separation,
                              std::uint64_t seed) {
  if (d < 2) throw Error(ErrorCode::kInvalidArgument, "synthetic data needs d >= 2");
  if (class_counts.empty()) throw Error(ErrorCode::kInvalidArgument, "synthetic data needs at least one class");
  for (int c : class_counts) {
    if (c <= 0) throw Error(ErrorCode::kInvalidArgument, "class counts must be positive");
  }
  Rng rng(derive_seed(seed, {stream::kSynth}));
  std::normal_distribution<double> normal(0.0, 1.0);
  const int classes = static_cast<int>(class_counts.size());

  Eigen::MatrixXd dirs(d, classes);
  for (int c = 0; c < classes; ++c) {
    for (int j = 0; j < d; ++j) dirs(j, c) = normal(rng);
  }
  // Gram-Schmidt while there is room; beyond d classes directions stay random unit vectors.
  for (int c = 0; c < classes; ++c) {
    if (c < d) {
      for (int k = 0; k < c; ++k) dirs.col(c) -= dirs.col(k).dot(dirs.col(c)) * dirs.col(k);
    }
    dirs.col(c).normalize();
  }
  const double scale = separation / std::sqrt(2.0);

  Dataset ds;
  const int total = std::accumulate(class_counts.begin(), class_counts.end(), 0);
  ds.features.resize(total, d);
  ds.labels.reserve(static_cast<size_t>(total));
  int row = 0;
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < class_counts[static_cast<size_t>(c)]; ++i, ++row) {
      for (int j = 0; j < d; ++j) ds.features(row, j) = scale * dirs(j, c) + normal(rng);
      ds.labels.push_back(c);
    }
    ds.class_names.push_back(c == 0 ? "benign" : "attack" + std::to_string(c));
  }
  if (classes == 2) ds.class_names[1] = "attack";
  ds.benign_class = 0;
  return ds;
}

struct Split {
  Dataset train;
  Dataset test;
};

/// Stratified split; each class contributes round(train_fraction * count)
/// rows to train.
inline Split train_test_split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0 && train_fraction < 1)) {
    throw Error(ErrorCode::kInvalidArgument, "train fraction must be in (0, 1)");
  }
  Rng rng(derive_seed(seed, {stream::kSplit}));
  std::vector<std::vector<Eigen::Index>> by_class(static_cast<size_t>(ds.num_classes()));
  for (Eigen::Index i = 0; i < ds.rows(); ++i) by_class[static_cast<size_t>(ds.labels[static_cast<size_t>(i)])].push_back(i);
  std::vector<Eigen::Index> train, test;
  for (auto& idx : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto ntrain = static_cast<size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
    train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(ntrain));
    test.insert(test.end(), idx.begin() + static_cast<std::ptrdiff_t>(ntrain), idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {ds.subset(train), ds.subset(test)};
}

enum class Scenario { kIid, kDirichletNonIid, kBenignAttackSplit };

inline const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kIid: return "iid";
    case Scenario::kDirichletNonIid: return "dirichlet";
    case Scenario::kBenignAttackSplit: return "benign-attack-split";
  }
  return "?";
}

struct PartitionPlan {
  Scenario scenario = Scenario::kIid;
  int clients = 20;
  double eta = 0.1;
  int samples_per_client = 1000;
  int benign_only_samples = 500;
  int attack_only_samples = 1000;
  std::uint64_t seed = 0;

  void validate() const {
    if (clients < 2) throw Error(ErrorCode::kInvalidArgument, "partition needs at least 2 clients");
    if (scenario == Scenario::kDirichletNonIid && !(eta > 0)) {
      throw Error(ErrorCode::kInvalidArgument, "Dirichlet concentration must be positive");
    }
    if (samples_per_client <= 0 || benign_only_samples <= 0 || attack_only_samples <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "per-client sample counts must be positive");
    }
  }
};

/// Symmetric Dirichlet(eta) draw over k categories.
inline std::vector<double> dirichlet(double eta, int k, Rng& rng) {
  std::gamma_distribution<double> gamma(eta, 1.0);
  std::vector<double> p(static_cast<size_t>(k));
  double sum = 0;
  for (auto& v : p) sum += (v = gamma(rng));
  if (sum <= 0 || !std::isfinite(sum)) {
    // Every draw underflowed; the limit of tiny eta is a one-hot vector.
    std::fill(p.begin(), p.end(), 0.0);
    p[uniform_below(rng, static_cast<std::uint64_t>(k))] = 1.0;
    return p;
  }
  for (auto& v : p) v /= sum;
  return p;
}

/// Integer counts summing to `total` proportional to `weights`
/// (largest-remainder rounding, ties to the lower index).
inline std::vector<int> apportion(const std::vector<double>& weights, int total) {
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int> out(weights.size(), 0);
  std::vector<std::pair<double, size_t>> rem;
  int used = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    const double exact = wsum > 0 ? total * weights[i] / wsum : 0.0;
    out[i] = static_cast<int>(std::floor(exact));
    used += out[i];
    rem.emplace_back(exact - out[i], i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t j = 0; used < total && j < rem.size(); ++j, ++used) ++out[rem[j].second];
  return out;
}

/// Splits `ds` into client shards without replacement.
inline std::vector<Dataset> partition(const Dataset& ds, const PartitionPlan& plan) {
  plan.validate();
  Rng rng(derive_seed(plan.seed, {stream::kPartition}));
  const int classes = ds.num_classes();
  std::vector<std::vector<Eigen::Index>> pools(static_cast<size_t>(classes));
  for (Eigen::Index i = 0; i < ds.rows(); ++i) pools[static_cast<size_t>(ds.labels[static_cast<size_t>(i)])].push_back(i);
  for (auto& p : pools) std::shuffle(p.begin(), p.end(), rng);
  std::vector<size_t> cursor(static_cast<size_t>(classes), 0);

  auto take = [&](int c, int count, std::vector<Eigen::Index>& into) {
    auto& pool = pools[static_cast<size_t>(c)];
    auto& cur = cursor[static_cast<size_t>(c)];
    if (cur + static_cast<size_t>(count) > pool.size()) {
      throw Error(ErrorCode::kInsufficientSamples,
                  "class '" + ds.class_names[static_cast<size_t>(c)] + "' has " +
                      std::to_string(pool.size() - cur) + " rows left, " + std::to_string(count) + " requested");
    }
    into.insert(into.end(), pool.begin() + static_cast<std::ptrdiff_t>(cur),
                pool.begin() + static_cast<std::ptrdiff_t>(cur + static_cast<size_t>(count)));
    cur += static_cast<size_t>(count);
  };

  std::vector<Dataset> shards;
  shards.reserve(static_cast<size_t>(plan.clients));
  const auto counts = ds.class_counts();

  switch (plan.scenario) {
    case Scenario::kIid: {
      std::vector<double> ratio(counts.begin(), counts.end());
      const auto quota = apportion(ratio, plan.samples_per_client);
      for (int k = 0; k < plan.clients; ++k) {
        std::vector<Eigen::Index> idx;
        for (int c = 0; c < classes; ++c) take(c, quota[static_cast<size_t>(c)], idx);
        std::shuffle(idx.begin(), idx.end(), rng);
        shards.push_back(ds.subset(idx));
      }
      break;
    }
    case Scenario::kDirichletNonIid: {
      for (int k = 0; k < plan.clients; ++k) {
        const auto quota = apportion(dirichlet(plan.eta, classes, rng), plan.samples_per_client);
        std::vector<Eigen::Index> idx;
        for (int c = 0; c < classes; ++c) take(c, quota[static_cast<size_t>(c)], idx);
        std::shuffle(idx.begin(), idx.end(), rng);
        shards.push_back(ds.subset(idx));
      }
      break;
    }
    case Scenario::kBenignAttackSplit: {
      // Attack rows from every non-benign class share one shuffled pool.
      std::vector<Eigen::Index> attack_pool;
      for (int c = 0; c < classes; ++c) {
        if (c != ds.benign_class) attack_pool.insert(attack_pool.end(), pools[static_cast<size_t>(c)].begin(), pools[static_cast<size_t>(c)].end());
      }
      std::shuffle(attack_pool.begin(), attack_pool.end(), rng);
      size_t attack_cursor = 0;
      const int benign_clients = (plan.clients + 1) / 2;
      for (int k = 0; k < plan.clients; ++k) {
        std::vector<Eigen::Index> idx;
        if (k < benign_clients) {
          take(ds.benign_class, plan.benign_only_samples, idx);
        } else {
          const auto need = static_cast<size_t>(plan.attack_only_samples);
          if (attack_cursor + need > attack_pool.size()) {
            throw Error(ErrorCode::kInsufficientSamples,
                        "attack pool has " + std::to_string(attack_pool.size() - attack_cursor) +
                            " rows left, " + std::to_string(need) + " requested");
          }
          idx.assign(attack_pool.begin() + static_cast<std::ptrdiff_t>(attack_cursor),
                     attack_pool.begin() + static_cast<std::ptrdiff_t>(attack_cursor + need));
          attack_cursor += need;
        }
        shards.push_back(ds.subset(idx));
      }
      break;
    }
  }
  return shards;
}

namespace presets {

struct ClassCount {
  const char* name;
  int samples;
};

/// Class totals of the mini-N-BaIoT extract (benign plus ten Mirai/BASHLITE
/// attack types); used to size synthetic stand-ins and to sanity-check
/// user-supplied CSVs.
inline std::vector<ClassCount> mini_nbaiot() {
  return {{"benign", 90000},         {"mirai_scan", 7000},     {"mirai_udp", 7000},
          {"mirai_udpplain", 7000},  {"mirai_syn", 7000},      {"mirai_ack", 7000},
          {"bashlite_scan", 9000},   {"bashlite_junk", 9000},  {"bashlite_udp", 9000},
          {"bashlite_tcp", 9000},    {"bashlite_combo", 9000}};
}

/// TON_IoT train-split class totals.
inline std::vector<ClassCount> ton_iot_train() {
  return {{"normal", 245000},  {"scanning", 20000},  {"dos", 20000},      {"ddos", 20000},
          {"ransomware", 16030}, {"backdoor", 20000}, {"injection", 20000}, {"xss", 13844},
          {"password", 20000},  {"mitm", 593}};
}

}  // namespace presets

}  // namespace fedaudit::data

#endif  // FEDAUDIT_DATA_HPP_
