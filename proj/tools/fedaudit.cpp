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
// fedaudit command-line front end.

#include <CLI11.hpp>

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fedaudit/bench.hpp"
#include "fedaudit/config.hpp"
#include "fedaudit/data.hpp"
#include "fedaudit/federation.hpp"
#include "fedaudit/selftest.hpp"

namespace {

using fedaudit::config::ExperimentConfig;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> rounds;
  std::optional<std::string> attack;
  std::optional<double> attack_ratio;
  bool no_encrypt = false;
  bool no_audit = false;
  std::optional<std::string> out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config_path, "Experiment config file (key = value lines)");
  app->add_option("--seed", f.seed, "Master seed");
  app->add_option("--rounds", f.rounds, "Number of federated rounds");
  app->add_option("--attack", f.attack,
                  "none | flip-benign | flip-attack | flip-both | model-scaling | same-model | gradient-drift");
  app->add_option("--attack-ratio", f.attack_ratio, "Fraction of adversarial clients in [0, 0.5]");
  app->add_flag("--no-encrypt", f.no_encrypt, "Aggregate plaintext levels instead of ciphertexts");
  app->add_flag("--no-audit", f.no_audit, "Disable the auditor (plain weighted averaging)");
  app->add_option("--out", f.out, "Output directory for metrics.csv, audit.csv, summary.txt");
  app->add_option("--set", f.sets, "Override any config key: --set section.key=value (repeatable)");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig cfg;
  if (!f.config_path.empty()) {
    auto parsed = fedaudit::config::load_config_file(f.config_path);
    for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << '\n';
    cfg = parsed.config;
  }
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw fedaudit::Error(fedaudit::ErrorCode::kConfigError, "--set expects key=value, got '" + s + "'");
    }
    fedaudit::config::set_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.rounds) fedaudit::config::set_value(cfg, "run.rounds", std::to_string(*f.rounds));
  if (f.attack) fedaudit::config::set_value(cfg, "attack.kind", *f.attack);
  if (f.attack_ratio) cfg.attack.ratio = *f.attack_ratio;
  if (f.no_encrypt) cfg.encrypt = false;
  if (f.no_audit) cfg.audit_enabled = false;
  if (f.out) cfg.out_dir = *f.out;
  fedaudit::config::validate(cfg);
  return cfg;
}

int cmd_run(const CommonFlags& f, bool quiet) {
  const auto cfg = resolve(f);
  if (!quiet) {
    std::cerr << "running " << cfg.rounds << " rounds, " << cfg.partition.clients << " clients, attack "
              << fedaudit::attacks::attack_name(cfg.attack.kind) << " @ " << cfg.attack.ratio
              << (cfg.encrypt ? ", encrypted" : ", plaintext") << (cfg.audit_enabled ? ", audited" : "") << '\n';
  }
  auto progress = [&](const fedaudit::federation::RoundMetrics& m) {
    if (quiet) return;
    std::cerr << "round " << std::setw(3) << m.round << "  acc " << std::fixed << std::setprecision(4) << m.overall_acc
              << "  asr " << m.asr << "  accepted/down/rejected " << m.accepted << '/' << m.downweighted << '/'
              << m.rejected << "  " << std::setprecision(2) << m.wall_time << "s\n"
              << std::defaultfloat;
  };
  const auto res = fedaudit::federation::run_experiment(cfg, nullptr, progress);
  fedaudit::federation::write_artifacts(cfg.out_dir, cfg, res);
  std::cout << "wrote " << cfg.out_dir << "/metrics.csv, audit.csv, summary.txt\n";
  if (!res.rounds.empty()) {
    std::cout << "final accuracy " << res.rounds.back().overall_acc << ", asr " << res.rounds.back().asr << '\n';
  }
  return 0;
}

int cmd_bench(const std::vector<unsigned>& sizes, std::uint64_t seed, double min_seconds) {
  const auto rows = fedaudit::bench::keygen_bench(sizes, seed, min_seconds);
  std::cout << std::left << std::setw(8) << "bits" << std::setw(14) << "keygen_s" << std::setw(16) << "encrypt_ops/s"
            << std::setw(16) << "decrypt_ops/s" << "add_ops/s\n";
  for (const auto& r : rows) {
    std::cout << std::left << std::setw(8) << r.bits << std::setw(14) << std::setprecision(4) << r.keygen_seconds
              << std::setw(16) << std::setprecision(6) << r.encrypt_ops_per_sec << std::setw(16)
              << r.decrypt_ops_per_sec << r.add_ops_per_sec << '\n';
  }
  if (!fedaudit::bench::encryption_strictly_decreasing(rows)) {
    std::cerr << "error: encryption throughput is not strictly decreasing with key size\n";
    return 1;
  }
  std::cout << "encryption throughput strictly decreases with key size\n";
  return 0;
}

int cmd_selftest() {
  const auto rep = fedaudit::selftest::run_crypto_selftest();
  if (!rep.ok()) {
    for (const auto& f : rep.failures) std::cerr << "FAILED: " << f << '\n';
    std::cerr << rep.failures.size() << " of " << rep.checks << " checks failed\n";
    return 1;
  }
  std::cout << "all " << rep.checks << " checks passed\n";
  return 0;
}

int cmd_partition_preview(const CommonFlags& f) {
  const auto cfg = resolve(f);
  const auto ds = fedaudit::federation::load_dataset(cfg.data, cfg.seed);
  const auto split = fedaudit::data::train_test_split(ds, cfg.data.train_fraction, cfg.seed);
  auto plan = cfg.partition;
  plan.seed = cfg.seed;
  const auto shards = fedaudit::data::partition(split.train, plan);
  const auto adversaries = fedaudit::attacks::select_adversaries(
      cfg.partition.clients, cfg.attack.kind == fedaudit::attacks::AttackKind::kNone ? 0.0 : cfg.attack.ratio, cfg.seed);
  std::cout << "scenario " << fedaudit::data::scenario_name(plan.scenario) << ", " << shards.size() << " clients\n";
  std::cout << std::left << std::setw(8) << "client" << std::setw(8) << "rows";
  for (const auto& name : ds.class_names) std::cout << std::setw(12) << name;
  std::cout << "adversary\n";
  for (size_t i = 0; i < shards.size(); ++i) {
    std::cout << std::setw(8) << i << std::setw(8) << shards[i].rows();
    for (auto c : shards[i].class_counts()) std::cout << std::setw(12) << c;
    const bool adv = std::find(adversaries.begin(), adversaries.end(), static_cast<int>(i)) != adversaries.end();
    std::cout << (adv ? "yes" : "no") << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fedaudit: audited, encrypted federated intrusion-detection simulator"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run a federated experiment and write metrics, audit and summary files");
  add_common(run, run_flags);
  run->add_flag("-q,--quiet", quiet, "Suppress per-round progress");

  std::vector<unsigned> sizes{128, 256, 512, 1024, 2048};
  std::uint64_t bench_seed = 1;
  double min_seconds = 0.25;
  auto* bench = app.add_subcommand("keygen-bench", "Time ElGamal operations across modulus sizes");
  bench->add_option("--bits", sizes, "Modulus sizes in bits")->delimiter(',');
  bench->add_option("--seed", bench_seed, "Key generation seed");
  bench->add_option("--min-seconds", min_seconds, "Minimum timing window per operation");

  auto* selftest = app.add_subcommand("crypto-selftest", "Exhaustive small-prime check of the cryptosystem");

  CommonFlags preview_flags;
  auto* preview = app.add_subcommand("partition-preview", "Print per-client class histograms");
  add_common(preview, preview_flags);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_flags, quiet);
    if (*bench) return cmd_bench(sizes, bench_seed, min_seconds);
    if (*selftest) return cmd_selftest();
    if (*preview) return cmd_partition_preview(preview_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
