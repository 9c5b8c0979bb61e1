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

#include <set>
#include <string>

#include "fedaudit/config.hpp"

namespace fedaudit::config {
namespace {

std::string error_text(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigError) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "expected a config error";
  return "";
}

TEST(Config, DefaultsValidate) {
  const ExperimentConfig cfg;
  EXPECT_NO_THROW(validate(cfg));
  EXPECT_EQ(cfg.partition.clients, 20);
  EXPECT_EQ(cfg.levels, 255);
  EXPECT_EQ(cfg.train.batch_size, 64);
  EXPECT_EQ(cfg.train.local_epochs, 4);
  EXPECT_EQ(cfg.hidden, (std::vector<int>{64, 32}));
}

TEST(Config, ParseTextWithSectionsAndComments) {
  const auto r = parse_config_text(
      "# experiment\n"
      "run.rounds = 7\n"
      "[attack]\n"
      "kind = same-model\n"
      "ratio = 0.5\n"
      "\n"
      "[model]\n"
      "hidden = 8, 4\n"
      "[audit]\n"
      "enabled = false\n");
  EXPECT_TRUE(r.warnings.empty());
  EXPECT_EQ(r.config.rounds, 7);
  EXPECT_EQ(r.config.attack.kind, attacks::AttackKind::kSameModel);
  EXPECT_EQ(r.config.attack.ratio, 0.5);
  EXPECT_EQ(r.config.hidden, (std::vector<int>{8, 4}));
  EXPECT_FALSE(r.config.audit_enabled);
}

TEST(Config, EmptyFileWarns) {
  const auto r = parse_config_text("# nothing\n\n", "empty.cfg");
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("empty.cfg"), std::string::npos);
}

TEST(Config, ErrorsNameTheLocationAndKey) {
  EXPECT_NE(error_text([] { parse_config_text("a = 1\n", "x.cfg"); }).find("x.cfg:1: unknown key 'a'"), std::string::npos);
  EXPECT_NE(error_text([] { parse_config_text("\nrun.rounds = many\n", "x.cfg"); }).find("x.cfg:2: run.rounds"),
            std::string::npos);
  EXPECT_NE(error_text([] { parse_config_text("just words\n"); }).find("expected 'key = value'"), std::string::npos);
  ExperimentConfig cfg;
  error_text([&] { set_value(cfg, "attack.kind", "bogus"); });
  error_text([&] { set_value(cfg, "run.encrypt", "maybe"); });
  error_text([&] { set_value(cfg, "train.lr", "inf"); });
  error_text([&] { set_value(cfg, "eval.head", "both"); });
}

TEST(Config, TextRoundTrip) {
  ExperimentConfig cfg;
  set_value(cfg, "train.lr", "0.0125");
  set_value(cfg, "partition.scenario", "dirichlet");
  set_value(cfg, "attack.skip_conditioning", "false");
  set_value(cfg, "run.seed", "18446744073709551615");
  const auto back = parse_config_text(to_text(cfg)).config;
  EXPECT_EQ(to_text(back), to_text(cfg));
  EXPECT_EQ(back.train.lr, 0.0125);
  EXPECT_EQ(back.partition.scenario, data::Scenario::kDirichletNonIid);
  ASSERT_TRUE(back.attack.skip_conditioning.has_value());
  EXPECT_FALSE(*back.attack.skip_conditioning);
  EXPECT_EQ(back.seed, 18446744073709551615ULL);
  const auto all = keys();
  EXPECT_EQ(std::set<std::string>(all.begin(), all.end()).size(), all.size());
  for (const auto& k : all) EXPECT_NO_THROW(get_value(cfg, k)) << k;
}

TEST(Config, CrossFieldValidation) {
  ExperimentConfig cfg;
  cfg.levels = 4000;
  const auto msg = error_text([&] { validate(cfg); });
  EXPECT_NE(msg.find("quant.levels"), std::string::npos) << msg;
  cfg.plaintext_prime_bits = 16;
  EXPECT_NO_THROW(validate(cfg));

  ExperimentConfig bad_ratio;
  bad_ratio.attack.ratio = 0.7;
  EXPECT_NE(error_text([&] { validate(bad_ratio); }).find("attack"), std::string::npos);

  ExperimentConfig small_prime;
  small_prime.elgamal_prime_bits = 64;
  EXPECT_NE(error_text([&] { validate(small_prime); }).find("crypto.elgamal_prime_bits"), std::string::npos);

  ExperimentConfig csv;
  csv.data.source = "csv";
  EXPECT_NE(error_text([&] { validate(csv); }).find("data.csv_path"), std::string::npos);
}

TEST(Config, AggregationTermBound) {
  ExperimentConfig cfg;
  EXPECT_EQ(max_client_weight(cfg), 2);
  cfg.audit_enabled = false;
  EXPECT_EQ(max_client_weight(cfg), 1);
  cfg.partition.scenario = data::Scenario::kBenignAttackSplit;
  EXPECT_EQ(max_client_weight(cfg), 2);
  cfg.audit_enabled = true;
  EXPECT_EQ(max_client_weight(cfg), 4);
  EXPECT_EQ(security_params(cfg).max_aggregation_terms, 80u);
  EXPECT_EQ(min_plaintext_modulus(8), 192u * 192u);
}

TEST(Config, MissingFile) {
  try {
    load_config_file("/nonexistent/fedaudit.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
}

}  // namespace
}  // namespace fedaudit::config
