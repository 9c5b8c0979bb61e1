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
// Experiment configuration: a flat `section.key = value` text format,
// defaults, validation and round-tripping to text.

#ifndef FEDAUDIT_CONFIG_HPP_
#define FEDAUDIT_CONFIG_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fedaudit/attacks.hpp"
#include "fedaudit/audit.hpp"
#include "fedaudit/compression.hpp"
#include "fedaudit/crypto.hpp"
#include "fedaudit/data.hpp"
#include "fedaudit/error.hpp"
#include "fedaudit/format.hpp"
#include "fedaudit/model.hpp"

namespace fedaudit::config {

struct DataConfig {
  std::string source = "synthetic";  // synthetic | csv
  std::string csv_path;
  std::string label_column = "label";
  std::string benign_label = "benign";
  bool normalize = true;
  int synth_classes = 2;
  int synth_per_class = 30000;
  int synth_dim = 20;
  double synth_separation = 6.0;
  double train_fraction = 0.7;
};

struct ExperimentConfig {
  DataConfig data;
  data::PartitionPlan partition;
  std::vector<int> hidden{64, 32};
  model::TrainHyper train;
  bool eval_personalized = false;
  compression::PruneSchedule prune;
  compression::ClipConfig clip;
  int levels = 255;
  double initial_range = 0.05;
  unsigned plaintext_prime_bits = 8;
  unsigned elgamal_prime_bits = 0;
  attacks::AttackConfig attack;
  audit::AuditConfig audit;
  bool audit_enabled = true;
  bool encrypt = true;
  int rounds = 50;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  double server_lr = 1.0;
  int threads = 1;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] inline void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw Error(ErrorCode::kConfigError, key + ": invalid value '" + value + "' (expected " + expected + ")");
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = first + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) bad_value(key, value, "a number");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) bad_value(key, value, "a finite number");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "true or false");
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_number<int>(key, item));
  }
  return out;
}

inline std::string join(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

inline std::string fmt(double v) { return format_double(v); }

inline data::Scenario parse_scenario(const std::string& key, const std::string& v) {
  for (auto s : {data::Scenario::kIid, data::Scenario::kDirichletNonIid, data::Scenario::kBenignAttackSplit}) {
    if (v == data::scenario_name(s)) return s;
  }
  bad_value(key, v, "iid, dirichlet or benign-attack-split");
}

struct KeySpec {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define FEDAUDIT_NUM(KEY, FIELD, T)                                                               \
  KeySpec {                                                                                      \
    KEY, [](const ExperimentConfig& c) { return fmt_value(c.FIELD); },                           \
        [](ExperimentConfig& c, const std::string& v) { c.FIELD = parse_number<T>(KEY, v); }     \
  }
#define FEDAUDIT_BOOL(KEY, FIELD)                                                                 \
  KeySpec {                                                                                      \
    KEY, [](const ExperimentConfig& c) { return std::string(c.FIELD ? "true" : "false"); },      \
        [](ExperimentConfig& c, const std::string& v) { c.FIELD = parse_bool(KEY, v); }          \
  }
#define FEDAUDIT_STR(KEY, FIELD)                                                                  \
  KeySpec {                                                                                      \
    KEY, [](const ExperimentConfig& c) { return c.FIELD; },                                      \
        [](ExperimentConfig& c, const std::string& v) { c.FIELD = v; }                           \
  }

inline std::string fmt_value(double v) { return fmt(v); }
inline std::string fmt_value(int v) { return std::to_string(v); }
inline std::string fmt_value(unsigned v) { return std::to_string(v); }
inline std::string fmt_value(std::uint64_t v) { return std::to_string(v); }

inline const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table{
      FEDAUDIT_STR("data.source", data.source),
      FEDAUDIT_STR("data.csv_path", data.csv_path),
      FEDAUDIT_STR("data.label_column", data.label_column),
      FEDAUDIT_STR("data.benign_label", data.benign_label),
      FEDAUDIT_BOOL("data.normalize", data.normalize),
      FEDAUDIT_NUM("data.synthetic.classes", data.synth_classes, int),
      FEDAUDIT_NUM("data.synthetic.per_class", data.synth_per_class, int),
      FEDAUDIT_NUM("data.synthetic.dim", data.synth_dim, int),
      FEDAUDIT_NUM("data.synthetic.separation", data.synth_separation, double),
      FEDAUDIT_NUM("data.train_fraction", data.train_fraction, double),
      KeySpec{"partition.scenario", [](const ExperimentConfig& c) { return std::string(data::scenario_name(c.partition.scenario)); },
              [](ExperimentConfig& c, const std::string& v) { c.partition.scenario = parse_scenario("partition.scenario", v); }},
      FEDAUDIT_NUM("partition.clients", partition.clients, int),
      FEDAUDIT_NUM("partition.eta", partition.eta, double),
      FEDAUDIT_NUM("partition.samples_per_client", partition.samples_per_client, int),
      FEDAUDIT_NUM("partition.benign_only_samples", partition.benign_only_samples, int),
      FEDAUDIT_NUM("partition.attack_only_samples", partition.attack_only_samples, int),
      KeySpec{"model.hidden", [](const ExperimentConfig& c) { return join(c.hidden); },
              [](ExperimentConfig& c, const std::string& v) { c.hidden = parse_int_list("model.hidden", v); }},
      FEDAUDIT_NUM("train.lr", train.lr, double),
      FEDAUDIT_NUM("train.momentum", train.momentum, double),
      FEDAUDIT_NUM("train.lambda", train.lambda_weight, double),
      FEDAUDIT_NUM("train.tau", train.tau, double),
      FEDAUDIT_NUM("train.batch_size", train.batch_size, int),
      FEDAUDIT_NUM("train.local_epochs", train.local_epochs, int),
      KeySpec{"eval.head", [](const ExperimentConfig& c) { return std::string(c.eval_personalized ? "personalized" : "global"); },
              [](ExperimentConfig& c, const std::string& v) {
                if (v != "global" && v != "personalized") bad_value("eval.head", v, "global or personalized");
                c.eval_personalized = v == "personalized";
              }},
      FEDAUDIT_NUM("prune.p0", prune.p0, double),
      FEDAUDIT_NUM("prune.p_target", prune.p_target, double),
      FEDAUDIT_NUM("prune.t_eff", prune.t_eff, int),
      FEDAUDIT_NUM("prune.t_target", prune.t_target, int),
      FEDAUDIT_NUM("clip.alpha", clip.alpha, double),
      FEDAUDIT_NUM("quant.levels", levels, int),
      FEDAUDIT_NUM("quant.initial_range", initial_range, double),
      FEDAUDIT_NUM("crypto.plaintext_prime_bits", plaintext_prime_bits, unsigned),
      FEDAUDIT_NUM("crypto.elgamal_prime_bits", elgamal_prime_bits, unsigned),
      KeySpec{"attack.kind", [](const ExperimentConfig& c) { return std::string(attacks::attack_name(c.attack.kind)); },
              [](ExperimentConfig& c, const std::string& v) {
                try {
                  c.attack.kind = attacks::parse_attack_kind(v);
                } catch (const Error&) {
                  bad_value("attack.kind", v,
                            "none, flip-benign, flip-attack, flip-both, model-scaling, same-model or gradient-drift");
                }
              }},
      FEDAUDIT_NUM("attack.ratio", attack.ratio, double),
      FEDAUDIT_NUM("attack.scale_factor", attack.scale_factor, double),
      FEDAUDIT_NUM("attack.drift_eps", attack.drift_eps, double),
      FEDAUDIT_NUM("attack.source_class", attack.source_class, int),
      FEDAUDIT_NUM("attack.target_class", attack.target_class, int),
      KeySpec{"attack.skip_conditioning",
              [](const ExperimentConfig& c) {
                return std::string(!c.attack.skip_conditioning ? "auto" : (*c.attack.skip_conditioning ? "true" : "false"));
              },
              [](ExperimentConfig& c, const std::string& v) {
                if (v == "auto") {
                  c.attack.skip_conditioning.reset();
                } else {
                  c.attack.skip_conditioning = parse_bool("attack.skip_conditioning", v);
                }
              }},
      FEDAUDIT_BOOL("audit.enabled", audit_enabled),
      FEDAUDIT_NUM("audit.alpha", audit.blend_alpha, double),
      FEDAUDIT_NUM("audit.k", audit.k, double),
      FEDAUDIT_NUM("audit.traj_quantile", audit.traj_quantile, double),
      FEDAUDIT_NUM("audit.warmup_rounds", audit.warmup_rounds, int),
      FEDAUDIT_NUM("audit.down_weight", audit.down_weight, double),
      FEDAUDIT_NUM("audit.eps_thr", audit.eps_thr, double),
      FEDAUDIT_NUM("audit.eps_cov", audit.eps_cov, double),
      FEDAUDIT_NUM("audit.scale_floor", audit.scale_floor, double),
      FEDAUDIT_NUM("audit.prescreen_k", audit.prescreen_k, double),
      KeySpec{"audit.g_candidates", [](const ExperimentConfig& c) { return join(c.audit.g_candidates); },
              [](ExperimentConfig& c, const std::string& v) { c.audit.g_candidates = parse_int_list("audit.g_candidates", v); }},
      FEDAUDIT_NUM("run.rounds", rounds, int),
      FEDAUDIT_NUM("run.seed", seed, std::uint64_t),
      FEDAUDIT_STR("run.out_dir", out_dir),
      FEDAUDIT_BOOL("run.encrypt", encrypt),
      FEDAUDIT_NUM("run.server_lr", server_lr, double),
      FEDAUDIT_NUM("run.threads", threads, int),
  };
  return table;
}

#undef FEDAUDIT_NUM
#undef FEDAUDIT_BOOL
#undef FEDAUDIT_STR

}  // namespace detail

/// Sets one dotted key; unknown keys and malformed values raise config-error.
inline void set_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& spec : detail::key_table()) {
    if (key == spec.key) {
      spec.set(cfg, value);
      return;
    }
  }
  throw Error(ErrorCode::kConfigError, "unknown key '" + key + "'");
}

inline std::string get_value(const ExperimentConfig& cfg, const std::string& key) {
  for (const auto& spec : detail::key_table()) {
    if (key == spec.key) return spec.get(cfg);
  }
  throw Error(ErrorCode::kConfigError, "unknown key '" + key + "'");
}

inline std::vector<std::string> keys() {
  std::vector<std::string> out;
  for (const auto& spec : detail::key_table()) out.emplace_back(spec.key);
  return out;
}

/// Every key with its effective value, one `key = value` per line.
inline std::string to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& spec : detail::key_table()) out += std::string(spec.key) + " = " + spec.get(cfg) + "\n";
  return out;
}

struct ParseResult {
  ExperimentConfig config;
  std::vector<std::string> warnings;
};

/// Applies `key = value` lines on top of `base`. Blank lines and lines
/// starting with '#' are ignored; `[section]` headers prefix later keys.
inline ParseResult parse_config_text(const std::string& text, const std::string& source = "<config>",
                                     ExperimentConfig base = {}) {
  ParseResult r{std::move(base), {}};
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0, settings = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = detail::trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kConfigError, source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = detail::trim(t.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    try {
      set_value(r.config, key, detail::trim(t.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfigError, source + ":" + std::to_string(lineno) + ": " +
                                               std::string(e.what()).substr(std::string("config-error: ").size()));
    }
    ++settings;
  }
  if (settings == 0) r.warnings.push_back(source + ": no settings found; using defaults");
  return r;
}

inline ParseResult load_config_file(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path, std::move(base));
}

/// Largest integer aggregation weight a single client can receive.
inline int max_client_weight(const ExperimentConfig& cfg) {
  const int verdict = cfg.audit_enabled ? 2 : 1;
  int size = 1;
  if (cfg.partition.scenario == data::Scenario::kBenignAttackSplit) {
    const int lo = std::min(cfg.partition.benign_only_samples, cfg.partition.attack_only_samples);
    const int hi = std::max(cfg.partition.benign_only_samples, cfg.partition.attack_only_samples);
    size = static_cast<int>(std::lround(static_cast<double>(hi) / lo));
  }
  return verdict * size;
}

/// Lower bound on n for primes of the configured size (top two bits set).
inline std::uint64_t min_plaintext_modulus(unsigned plaintext_prime_bits) {
  const std::uint64_t prime_min = 3ULL << (plaintext_prime_bits - 2);
  return prime_min * prime_min;
}

inline crypto::SecurityParams security_params(const ExperimentConfig& cfg) {
  return {cfg.plaintext_prime_bits, cfg.elgamal_prime_bits,
          static_cast<unsigned>(cfg.partition.clients * max_client_weight(cfg))};
}

/// Cross-field validation; messages name the offending key.
inline void validate(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& key, const std::string& what) {
    throw Error(ErrorCode::kConfigError, key + ": " + what);
  };
  auto wrap = [&](const std::string& key, const auto& fn) {
    try {
      fn();
    } catch (const Error& e) {
      fail(key, e.what());
    }
  };
  if (cfg.data.source != "synthetic" && cfg.data.source != "csv") fail("data.source", "must be synthetic or csv");
  if (cfg.data.source == "csv" && cfg.data.csv_path.empty()) fail("data.csv_path", "required when data.source = csv");
  if (cfg.data.synth_classes < 2) fail("data.synthetic.classes", "must be >= 2");
  if (cfg.data.synth_per_class < 1) fail("data.synthetic.per_class", "must be positive");
  if (cfg.data.synth_dim < 2) fail("data.synthetic.dim", "must be >= 2");
  if (!(cfg.data.synth_separation >= 0)) fail("data.synthetic.separation", "must be non-negative");
  if (!(cfg.data.train_fraction > 0 && cfg.data.train_fraction < 1)) fail("data.train_fraction", "must be in (0, 1)");
  wrap("partition", [&] { cfg.partition.validate(); });
  for (int h : cfg.hidden) {
    if (h < 1) fail("model.hidden", "widths must be positive");
  }
  wrap("train", [&] { cfg.train.validate(); });
  wrap("prune", [&] { cfg.prune.validate(); });
  if (!(cfg.clip.alpha > 0)) fail("clip.alpha", "must be positive");
  if (cfg.levels < 2) fail("quant.levels", "must be >= 2");
  if (!(cfg.initial_range > 0)) fail("quant.initial_range", "must be positive");
  if (cfg.plaintext_prime_bits < 8 || cfg.plaintext_prime_bits > 31) {
    fail("crypto.plaintext_prime_bits", "must be in [8, 31]");
  }
  wrap("attack", [&] { cfg.attack.validate(); });
  wrap("audit", [&] { cfg.audit.validate(); });
  if (cfg.rounds < 0) fail("run.rounds", "must be non-negative");
  if (!(cfg.server_lr > 0)) fail("run.server_lr", "must be positive");
  if (cfg.threads < 1) fail("run.threads", "must be >= 1");

  const std::uint64_t k = static_cast<std::uint64_t>(cfg.partition.clients);
  const std::uint64_t w = static_cast<std::uint64_t>(max_client_weight(cfg));
  const std::uint64_t need = k * static_cast<std::uint64_t>(cfg.levels - 1) * w;
  const std::uint64_t n_min = min_plaintext_modulus(cfg.plaintext_prime_bits);
  if (!(need < n_min)) {
    fail("quant.levels", "plaintext space too small: K*(N-1)*" + std::to_string(w) + " < n violated (" +
                             std::to_string(k) + "*" + std::to_string(cfg.levels - 1) + "*" + std::to_string(w) +
                             " = " + std::to_string(need) + ", n >= " + std::to_string(n_min) +
                             " with crypto.plaintext_prime_bits = " + std::to_string(cfg.plaintext_prime_bits) + ")");
  }
  wrap("crypto.elgamal_prime_bits", [&] { crypto::validate(security_params(cfg)); });
}

}  // namespace fedaudit::config

#endif  // FEDAUDIT_CONFIG_HPP_
