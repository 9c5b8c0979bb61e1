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
// Round orchestration: local training, attack transforms, update
// conditioning, optional encryption, auditing, weighted aggregation and the
// global step, plus per-round metrics and artifact writers.

#ifndef FEDAUDIT_FEDERATION_HPP_
#define FEDAUDIT_FEDERATION_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fedaudit/attacks.hpp"
#include "fedaudit/audit.hpp"
#include "fedaudit/compression.hpp"
#include "fedaudit/config.hpp"
#include "fedaudit/crypto.hpp"
#include "fedaudit/data.hpp"
#include "fedaudit/error.hpp"
#include "fedaudit/metrics.hpp"
#include "fedaudit/model.hpp"
#include "fedaudit/random.hpp"

namespace fedaudit::federation {

using config::ExperimentConfig;

/// Calls fn(i) for i in [0, n) on up to `threads` threads. The first
/// exception thrown by any worker is rethrown.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min(threads, n);
  std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[static_cast<size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct RoundMetrics {
  int round = -1;  // -1 for the evaluation before any training
  double overall_acc = 0;
  double attack_class_acc = 0;
  double benign_class_acc = 0;
  double f1 = 0;
  double asr = 0;
  std::vector<metrics::RocPoint> auditor_roc;
  double auditor_auc = std::numeric_limits<double>::quiet_NaN();
  int accepted = 0;
  int downweighted = 0;
  int rejected = 0;
  std::int64_t weight_sum = 0;
  bool all_rejected = false;
  double prune_rate = 0;
  double quant_range = 0;
  double wall_time = 0;  // seconds
};

/// Ground truth and scoring context for compute_metrics.
struct MetricContext {
  int benign_class = 0;
  std::vector<bool> is_adversary;
  std::vector<double> auditor_scores;  // empty when the round was not scored
  attacks::AttackConfig attack;
  std::optional<double> clean_acc;
};

/// Targeted (source, target) pair of a label-flip style attack on data with
/// `classes` classes, or nothing for untargeted attacks.
inline std::optional<std::pair<int, int>> targeted_pair(const attacks::AttackConfig& a, int classes, int benign) {
  using attacks::AttackKind;
  if (classes > 2 && (attacks::is_label_flip(a.kind) || a.kind == AttackKind::kSameModel)) {
    return std::pair{a.source_class, a.target_class};
  }
  const int attack = 1 - benign;
  switch (a.kind) {
    case AttackKind::kFlipBenign: return std::pair{benign, attack};
    case AttackKind::kFlipAttack: return std::pair{attack, benign};
    case AttackKind::kFlipBoth:
    case AttackKind::kSameModel: return std::pair{a.source_class, a.target_class};
    default: return std::nullopt;
  }
}

inline RoundMetrics compute_metrics(const metrics::Confusion& conf, const MetricContext& ctx) {
  RoundMetrics m;
  m.overall_acc = conf.accuracy();
  m.f1 = conf.macro_f1();
  const int benign = ctx.benign_class;
  std::vector<int> attack_rows;
  for (int c = 0; c < conf.classes(); ++c) {
    if (c != benign) attack_rows.push_back(c);
  }
  const int benign_rows[] = {benign};
  m.benign_class_acc = conf.accuracy_on(benign_rows);
  m.attack_class_acc = conf.accuracy_on(attack_rows);
  if (ctx.attack.kind == attacks::AttackKind::kNone) {
    m.asr = 0.0;
  } else if (auto pair = targeted_pair(ctx.attack, conf.classes(), benign)) {
    m.asr = conf.flip_rate(pair->first, pair->second);
  } else if (ctx.clean_acc && *ctx.clean_acc > 0) {
    m.asr = std::max(0.0, (*ctx.clean_acc - m.overall_acc) / *ctx.clean_acc);
  } else {
    m.asr = std::numeric_limits<double>::quiet_NaN();
  }
  if (!ctx.auditor_scores.empty()) {
    const size_t n = ctx.is_adversary.size();
    std::unique_ptr<bool[]> truth(new bool[n]);
    std::copy(ctx.is_adversary.begin(), ctx.is_adversary.end(), truth.get());
    m.auditor_roc = metrics::roc_curve(ctx.auditor_scores, std::span<const bool>(truth.get(), n));
    m.auditor_auc = metrics::auc(m.auditor_roc);
  }
  return m;
}

struct ClientState {
  data::Dataset shard;
  std::vector<double> head_pers;
  std::int64_t size_weight = 1;
  bool adversary = false;
};

struct FederationState {
  ExperimentConfig cfg;
  data::Dataset test;
  int classes = 2;
  int benign_class = 0;
  model::ModelParams global;
  std::optional<std::vector<double>> prev_global;  // global vector before the last step
  std::vector<double> direction;                   // last nonzero global step
  std::vector<ClientState> clients;
  std::vector<int> adversaries;
  int round = 0;
  double quant_range = 0;
  std::optional<crypto::KeyMaterial> keys;
  std::shared_ptr<const crypto::Encryptor> encryptor;
  std::optional<audit::Auditor> auditor;
  std::optional<std::vector<double>> clean_accuracy;  // per round, for untargeted ASR
};

inline data::Dataset load_dataset(const config::DataConfig& d, std::uint64_t seed) {
  if (d.source == "csv") return data::load_csv(d.csv_path, d.label_column, d.normalize, d.benign_label);
  std::vector<int> counts(static_cast<size_t>(d.synth_classes), d.synth_per_class);
  auto ds = data::synth_generate(counts, d.synth_dim, d.synth_separation, seed);
  if (d.normalize) data::zscore_normalize(ds);
  return ds;
}

/// Builds the initial state: data, partition, adversaries, model, keys and
/// auditor registration.
inline FederationState init_federation(const ExperimentConfig& cfg, const data::Dataset* dataset = nullptr) {
  config::validate(cfg);
  FederationState st;
  st.cfg = cfg;
  const data::Dataset loaded = dataset ? data::Dataset{} : load_dataset(cfg.data, cfg.seed);
  const data::Dataset& ds = dataset ? *dataset : loaded;
  ds.validate();
  auto split = data::train_test_split(ds, cfg.data.train_fraction, cfg.seed);
  st.test = std::move(split.test);
  st.classes = ds.num_classes();
  st.benign_class = ds.benign_class;

  data::PartitionPlan plan = cfg.partition;
  plan.seed = cfg.seed;
  auto shards = data::partition(split.train, plan);
  std::int64_t min_size = std::numeric_limits<std::int64_t>::max();
  for (const auto& s : shards) min_size = std::min<std::int64_t>(min_size, s.rows());

  model::Dims dims{static_cast<int>(ds.dim()), cfg.hidden, st.classes};
  st.global = model::init_params(dims, cfg.seed);
  st.adversaries = attacks::select_adversaries(cfg.partition.clients, cfg.attack.kind == attacks::AttackKind::kNone
                                                                          ? 0.0
                                                                          : cfg.attack.ratio,
                                               cfg.seed);
  for (auto& s : shards) {
    ClientState c;
    c.size_weight = cfg.partition.scenario == data::Scenario::kBenignAttackSplit
                        ? std::max<std::int64_t>(1, std::llround(static_cast<double>(s.rows()) / min_size))
                        : 1;
    c.shard = std::move(s);
    c.head_pers = st.global.head_pers;
    st.clients.push_back(std::move(c));
  }
  for (int a : st.adversaries) st.clients[static_cast<size_t>(a)].adversary = true;

  st.quant_range = cfg.initial_range;
  if (cfg.encrypt) {
    st.keys = crypto::keygen(config::security_params(cfg), cfg.seed);
    st.encryptor = std::make_shared<const crypto::Encryptor>(st.keys->pub);
  }
  if (cfg.audit_enabled) {
    st.auditor.emplace(cfg.audit, audit::register_clients(cfg.partition.clients, cfg.seed), cfg.seed);
  }
  return st;
}

namespace detail {

struct ClientSubmission {
  compression::ConditionedUpdate conditioned;
  std::vector<crypto::Ciphertext> ciphertexts;
  std::vector<double> head_pers;
};

inline ClientSubmission prepare_submission(const FederationState& st, int i, const std::vector<double>& raw_update,
                                           bool skip_conditioning, double prune_rate,
                                           const compression::QuantizerConfig& qcfg) {
  const auto& cfg = st.cfg;
  ClientSubmission sub;
  Rng qrng(derive_seed(cfg.seed, {stream::kQuantize, static_cast<std::uint64_t>(st.round), static_cast<std::uint64_t>(i)}));
  sub.conditioned = compression::condition_update(raw_update, prune_rate, cfg.clip, qcfg, qrng, skip_conditioning);
  if (st.encryptor) {
    Rng erng(derive_seed(cfg.seed, {stream::kEncrypt, static_cast<std::uint64_t>(st.round), static_cast<std::uint64_t>(i)}));
    sub.ciphertexts.reserve(sub.conditioned.levels.size());
    for (int l : sub.conditioned.levels) sub.ciphertexts.push_back(st.encryptor->encrypt(crypto::BigInt(l), erng));
  }
  return sub;
}

}  // namespace detail

/// Executes one federated round and returns its metrics.
inline RoundMetrics run_round(FederationState& st) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& cfg = st.cfg;
  const int k_clients = static_cast<int>(st.clients.size());
  const auto t = static_cast<std::uint64_t>(st.round);
  const double prune_rate = compression::pruning_rate(cfg.prune, st.round);
  const auto qcfg = compression::QuantizerConfig::symmetric(st.quant_range, cfg.levels);
  const std::vector<double> global_vec = model::global_vector(st.global);
  const size_t dim = global_vec.size();
  const auto& atk = cfg.attack;
  using attacks::AttackKind;

  // Local training and attack transforms.
  std::vector<std::vector<double>> raw(static_cast<size_t>(k_clients));
  std::vector<std::vector<double>> heads(static_cast<size_t>(k_clients));
  const int leader = st.adversaries.empty() ? -1 : st.adversaries.front();
  auto train_client = [&](int i, const data::Dataset& shard) {
    model::ModelParams local = st.global;
    local.head_pers = st.clients[static_cast<size_t>(i)].head_pers;
    auto res = model::local_train(local, shard, cfg.train,
                                  derive_seed(cfg.seed, {stream::kLocalTrain, t, static_cast<std::uint64_t>(i)}));
    heads[static_cast<size_t>(i)] = std::move(res.params.head_pers);
    return std::move(res.update);
  };
  parallel_for(k_clients, cfg.threads, [&](int i) {
    const auto& c = st.clients[static_cast<size_t>(i)];
    if (!c.adversary || atk.kind == AttackKind::kNone) {
      raw[static_cast<size_t>(i)] = train_client(i, c.shard);
      return;
    }
    switch (atk.kind) {
      case AttackKind::kFlipBenign:
      case AttackKind::kFlipAttack:
      case AttackKind::kFlipBoth:
        raw[static_cast<size_t>(i)] =
            train_client(i, attacks::flip_labels(c.shard, atk.kind, atk.source_class, atk.target_class));
        break;
      case AttackKind::kModelScaling:
        raw[static_cast<size_t>(i)] = attacks::scale_update(train_client(i, c.shard), atk.scale_factor);
        break;
      case AttackKind::kSameModel:
        if (i == leader) {
          raw[static_cast<size_t>(i)] =
              train_client(i, attacks::flip_labels(c.shard, AttackKind::kFlipBoth, atk.source_class, atk.target_class));
        }
        break;
      case AttackKind::kGradientDrift:
        if (st.prev_global) {
          raw[static_cast<size_t>(i)] = attacks::gradient_drift(global_vec, *st.prev_global, atk.drift_eps);
        } else {
          raw[static_cast<size_t>(i)] = attacks::scale_update(train_client(i, c.shard), atk.scale_factor);
        }
        break;
      case AttackKind::kNone: break;
    }
  });
  if (atk.kind == AttackKind::kSameModel && leader >= 0) {
    const auto copies = attacks::same_model_updates(raw[static_cast<size_t>(leader)], st.adversaries.size());
    for (size_t a = 0; a < st.adversaries.size(); ++a) raw[static_cast<size_t>(st.adversaries[a])] = copies[a];
  }

  // Conditioning, quantization and encryption.
  std::vector<detail::ClientSubmission> subs(static_cast<size_t>(k_clients));
  parallel_for(k_clients, cfg.threads, [&](int i) {
    const bool skip = st.clients[static_cast<size_t>(i)].adversary && atk.adversary_skips_conditioning();
    subs[static_cast<size_t>(i)] = detail::prepare_submission(st, i, raw[static_cast<size_t>(i)], skip, prune_rate, qcfg);
  });

  // Auditing on decrypted individual updates.
  std::vector<std::int64_t> verdict_weight(static_cast<size_t>(k_clients), 1);
  std::optional<audit::RoundAudit> audit_out;
  if (st.auditor) {
    std::vector<std::vector<double>> seen(static_cast<size_t>(k_clients));
    parallel_for(k_clients, cfg.threads, [&](int i) {
      const auto& sub = subs[static_cast<size_t>(i)];
      auto& v = seen[static_cast<size_t>(i)];
      v.reserve(dim);
      if (st.keys) {
        for (const auto& c : sub.ciphertexts) {
          v.push_back(compression::dequantize(static_cast<int>(crypto::decrypt(*st.keys, c).get_si()), qcfg));
        }
      } else {
        for (int l : sub.conditioned.levels) v.push_back(compression::dequantize(l, qcfg));
      }
    });
    const double expected_zero =
        std::floor(prune_rate * static_cast<double>(dim)) / static_cast<double>(dim);
    audit_out = st.auditor->audit_round(st.round, seen, st.direction, expected_zero);
    for (int i = 0; i < k_clients; ++i) {
      switch (audit_out->clients[static_cast<size_t>(i)].verdict.kind) {
        case audit::VerdictKind::kAccept: verdict_weight[static_cast<size_t>(i)] = 2; break;
        case audit::VerdictKind::kDownWeight: verdict_weight[static_cast<size_t>(i)] = 1; break;
        case audit::VerdictKind::kReject: verdict_weight[static_cast<size_t>(i)] = 0; break;
      }
    }
  }

  // Weighted aggregation over the integer level domain.
  std::vector<std::int64_t> weights(static_cast<size_t>(k_clients));
  std::int64_t weight_sum = 0;
  for (int i = 0; i < k_clients; ++i) {
    weights[static_cast<size_t>(i)] = verdict_weight[static_cast<size_t>(i)] * st.clients[static_cast<size_t>(i)].size_weight;
    weight_sum += weights[static_cast<size_t>(i)];
  }
  std::vector<std::int64_t> level_sum(dim, 0);
  if (weight_sum > 0) {
    if (st.keys) {
      const auto& pub = st.keys->pub;
      Rng arng(derive_seed(cfg.seed, {stream::kAggregate, t}));
      for (size_t j = 0; j < dim; ++j) {
        std::optional<crypto::Ciphertext> acc;
        for (int i = 0; i < k_clients; ++i) {
          const auto w = weights[static_cast<size_t>(i)];
          if (w == 0) continue;
          auto term = crypto::scalar_mul(pub, subs[static_cast<size_t>(i)].ciphertexts[j], static_cast<std::uint64_t>(w), arng);
          acc = acc ? crypto::hom_add(pub, *acc, term) : std::move(term);
        }
        level_sum[j] = crypto::decrypt(*st.keys, *acc).get_si();
      }
    } else {
      for (int i = 0; i < k_clients; ++i) {
        const auto w = weights[static_cast<size_t>(i)];
        if (w == 0) continue;
        const auto& lv = subs[static_cast<size_t>(i)].conditioned.levels;
        for (size_t j = 0; j < dim; ++j) level_sum[j] += w * lv[j];
      }
    }
  }

  // Global step M <- M + server_lr * weighted mean update.
  RoundMetrics out;
  out.round = st.round;
  out.prune_rate = prune_rate;
  out.quant_range = st.quant_range;
  out.weight_sum = weight_sum;
  out.all_rejected = weight_sum == 0;
  std::vector<double> next = global_vec;
  if (weight_sum > 0) {
    for (size_t j = 0; j < dim; ++j) {
      next[j] += cfg.server_lr * compression::dequantize_weighted_sum(level_sum[j], weight_sum, qcfg) /
                 static_cast<double>(weight_sum);
    }
  }
  for (double v : next) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteLoss, "global parameters became non-finite");
  }
  if (weight_sum > 0) {
    st.direction.resize(dim);
    for (size_t j = 0; j < dim; ++j) st.direction[j] = next[j] - global_vec[j];
  }
  st.prev_global = global_vec;
  model::set_global(st.global, next);
  for (int i = 0; i < k_clients; ++i) {
    if (!heads[static_cast<size_t>(i)].empty()) st.clients[static_cast<size_t>(i)].head_pers = std::move(heads[static_cast<size_t>(i)]);
  }

  // Next round's shared quantizer range from non-rejected clients' reported mu.
  double mu_sum = 0;
  int mu_count = 0;
  for (int i = 0; i < k_clients; ++i) {
    if (verdict_weight[static_cast<size_t>(i)] == 0) continue;
    mu_sum += subs[static_cast<size_t>(i)].conditioned.mu;
    ++mu_count;
  }
  if (mu_count > 0 && mu_sum > 0) st.quant_range = cfg.clip.alpha * mu_sum / mu_count;

  // Metrics.
  MetricContext ctx;
  ctx.benign_class = st.benign_class;
  ctx.attack = atk;
  for (const auto& c : st.clients) ctx.is_adversary.push_back(c.adversary);
  if (st.clean_accuracy && static_cast<size_t>(st.round) < st.clean_accuracy->size()) {
    ctx.clean_acc = (*st.clean_accuracy)[static_cast<size_t>(st.round)];
  }
  if (audit_out) {
    out.accepted = audit_out->accepted;
    out.downweighted = audit_out->downweighted;
    out.rejected = audit_out->rejected;
    if (!audit_out->warmup) {
      for (const auto& c : audit_out->clients) ctx.auditor_scores.push_back(c.score);
    }
  } else {
    out.accepted = k_clients;
  }
  const auto conf = model::evaluate(st.global, st.test, false);
  const auto m = compute_metrics(conf, ctx);
  out.overall_acc = m.overall_acc;
  out.attack_class_acc = m.attack_class_acc;
  out.benign_class_acc = m.benign_class_acc;
  out.f1 = m.f1;
  out.asr = m.asr;
  out.auditor_roc = m.auditor_roc;
  out.auditor_auc = m.auditor_auc;
  ++st.round;
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

/// Evaluation of the untrained global model.
inline RoundMetrics initial_metrics(const FederationState& st) {
  MetricContext ctx;
  ctx.benign_class = st.benign_class;
  ctx.attack = st.cfg.attack;
  ctx.attack.kind = attacks::AttackKind::kNone;
  auto m = compute_metrics(model::evaluate(st.global, st.test, false), ctx);
  m.round = -1;
  m.quant_range = st.quant_range;
  return m;
}

struct ExperimentResult {
  RoundMetrics initial;
  std::vector<RoundMetrics> rounds;
  std::vector<int> adversaries;
  std::optional<audit::AuditTable> audit_table;
  std::vector<double> final_global;
  unsigned elgamal_bits = 0;
  int selected_components = 0;
  double total_seconds = 0;
};

/// The full experiment. Untargeted attacks first run the same seed without
/// adversaries to obtain the clean accuracy that ASR is measured against.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const data::Dataset* dataset = nullptr,
                                       const std::function<void(const RoundMetrics&)>& on_round = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  config::validate(cfg);
  std::optional<std::vector<double>> clean;
  if (cfg.rounds > 0 && cfg.attack.kind != attacks::AttackKind::kNone &&
      !targeted_pair(cfg.attack, 2, 0).has_value()) {
    ExperimentConfig clean_cfg = cfg;
    clean_cfg.attack.kind = attacks::AttackKind::kNone;
    auto st = init_federation(clean_cfg, dataset);
    clean.emplace();
    for (int r = 0; r < cfg.rounds; ++r) clean->push_back(run_round(st).overall_acc);
  }
  auto st = init_federation(cfg, dataset);
  st.clean_accuracy = std::move(clean);
  ExperimentResult res;
  res.initial = initial_metrics(st);
  res.adversaries = st.adversaries;
  if (st.keys) res.elgamal_bits = crypto::bit_length(st.keys->pub.p);
  for (int r = 0; r < cfg.rounds; ++r) {
    res.rounds.push_back(run_round(st));
    if (on_round) on_round(res.rounds.back());
  }
  if (st.auditor) {
    res.audit_table = st.auditor->table();
    res.selected_components = st.auditor->selected_components();
  }
  res.final_global = model::global_vector(st.global);
  res.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// ---------------------------------------------------------------------------
// Artifacts

inline void write_provenance(std::ostream& os, const ExperimentConfig& cfg) {
  std::istringstream lines(config::to_text(cfg));
  std::string line;
  while (std::getline(lines, line)) os << "# " << line << '\n';
}

inline std::string metrics_csv_header() {
  return "round,overall_acc,attack_class_acc,benign_class_acc,f1,asr,auditor_auc,accepted,downweighted,rejected,"
         "weight_sum,all_rejected,prune_rate,quant_range";
}

inline void write_metrics_row(std::ostream& os, const RoundMetrics& m) {
  auto num = [&](double v) {
    if (std::isnan(v)) {
      os << "nan";
    } else {
      os << v;
    }
  };
  const auto old = os.precision(10);
  os << m.round << ',';
  num(m.overall_acc);
  os << ',';
  num(m.attack_class_acc);
  os << ',';
  num(m.benign_class_acc);
  os << ',';
  num(m.f1);
  os << ',';
  num(m.asr);
  os << ',';
  num(m.auditor_auc);
  os << ',' << m.accepted << ',' << m.downweighted << ',' << m.rejected << ',' << m.weight_sum << ','
     << (m.all_rejected ? 1 : 0) << ',';
  num(m.prune_rate);
  os << ',';
  num(m.quant_range);
  os << '\n';
  os.precision(old);
}

/// Per-round metrics; `#` lines carry the resolved configuration.
inline void write_metrics_csv(std::ostream& os, const ExperimentConfig& cfg, const ExperimentResult& res) {
  write_provenance(os, cfg);
  os << metrics_csv_header() << '\n';
  for (const auto& m : res.rounds) write_metrics_row(os, m);
}

inline void write_audit_csv(std::ostream& os, const ExperimentConfig& cfg, const ExperimentResult& res) {
  write_provenance(os, cfg);
  if (res.audit_table) {
    res.audit_table->write_csv(os);
  } else {
    os << audit::AuditTable::csv_header() << '\n';
  }
}

inline void write_summary(std::ostream& os, const ExperimentConfig& cfg, const ExperimentResult& res) {
  write_provenance(os, cfg);
  os << std::setprecision(6);
  os << "seed: " << cfg.seed << '\n';
  os << "rounds: " << res.rounds.size() << '\n';
  os << "clients: " << cfg.partition.clients << '\n';
  os << "adversaries: [";
  for (size_t i = 0; i < res.adversaries.size(); ++i) os << (i ? ", " : "") << res.adversaries[i];
  os << "]\n";
  os << "elgamal_prime_bits: " << res.elgamal_bits << '\n';
  os << "gmm_components: " << res.selected_components << '\n';
  os << "initial_accuracy: " << res.initial.overall_acc << '\n';
  if (!res.rounds.empty()) {
    const auto& f = res.rounds.back();
    os << "final_accuracy: " << f.overall_acc << '\n';
    os << "final_attack_class_accuracy: " << f.attack_class_acc << '\n';
    os << "final_benign_class_accuracy: " << f.benign_class_acc << '\n';
    os << "final_f1: " << f.f1 << '\n';
    os << "final_asr: " << f.asr << '\n';
    double auc_sum = 0;
    int auc_n = 0;
    int rejected = 0;
    double round_time = 0;
    for (const auto& m : res.rounds) {
      if (!std::isnan(m.auditor_auc)) {
        auc_sum += m.auditor_auc;
        ++auc_n;
      }
      rejected += m.rejected;
      round_time += m.wall_time;
    }
    os << "mean_auditor_auc: ";
    if (auc_n) {
      os << auc_sum / auc_n << '\n';
    } else {
      os << "nan\n";
    }
    os << "total_rejections: " << rejected << '\n';
    os << "mean_round_seconds: " << round_time / static_cast<double>(res.rounds.size()) << '\n';
  }
  os << "total_seconds: " << res.total_seconds << '\n';
}

/// Writes metrics.csv, audit.csv and summary.txt into `dir`.
inline void write_artifacts(const std::string& dir, const ExperimentConfig& cfg, const ExperimentResult& res) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir + ": " + ec.message());
  auto open = [&](const std::string& name) {
    std::ofstream f(std::filesystem::path(dir) / name);
    if (!f) throw Error(ErrorCode::kIoError, "cannot write " + (std::filesystem::path(dir) / name).string());
    return f;
  };
  {
    auto f = open("metrics.csv");
    write_metrics_csv(f, cfg, res);
  }
  {
    auto f = open("audit.csv");
    write_audit_csv(f, cfg, res);
  }
  {
    auto f = open("summary.txt");
    write_summary(f, cfg, res);
  }
}

}  // namespace fedaudit::federation

#endif  // FEDAUDIT_FEDERATION_HPP_
