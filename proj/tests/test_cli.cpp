//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <string>

#include "mgm/cli/config.hpp"
#include "mgm/core/error.hpp"

using mgm::DataError;
using mgm::cli::RunConfig;

TEST_CASE("defaults carry the documented values") {
  const RunConfig cfg = RunConfig::defaults();
  CHECK(cfg.get("train.mask_ratio") == "0.35");
  CHECK(cfg.get("tokenizer.kind") == "sgt");
  CHECK(cfg.get("model.encoder") == "gts_small");
  CHECK(cfg.get_u64("run.seed") == 7);
}

TEST_CASE("sectioned key = value text overrides defaults") {
  const std::string text =
      "# comment\n"
      "[train]\n"
      "epochs = 17\n"
      "lr = 2e-4\n"
      "\n"
      "[model]\n"
      "dim = 8\n";
  const RunConfig cfg = RunConfig::from_text(text, "<mem>");
  CHECK(cfg.get_int("train.epochs") == 17);
  CHECK(cfg.get_double("train.lr") == doctest::Approx(2e-4));
  CHECK(cfg.get_int("model.dim") == 8);
  CHECK(cfg.get("model.decoder") == "gts_tiny");  // untouched default
}

TEST_CASE("unknown keys are rejected") {
  CHECK_THROWS_WITH_AS(RunConfig::from_text("[train]\nepocs = 5\n", "<mem>"),
                       doctest::Contains("unknown config key"), DataError);
  RunConfig cfg = RunConfig::defaults();
  CHECK_THROWS_AS(cfg.set("no.such_key", "1"), DataError);
}

TEST_CASE("resolved text replays byte-exactly") {
  RunConfig a = RunConfig::defaults();
  a.set("train.epochs", "42");
  a.set("run.seed", "99");
  const std::string text = a.resolved_text();
  const RunConfig b = RunConfig::from_text(text, "<echo>");
  CHECK(b.resolved_text() == text);
  CHECK(b.fingerprint() == a.fingerprint());
  // Any value change moves the fingerprint.
  RunConfig c = b;
  c.set("train.epochs", "43");
  CHECK(c.fingerprint() != b.fingerprint());
}

TEST_CASE("train config mapping") {
  RunConfig cfg = RunConfig::defaults();
  cfg.set("tokenizer.kind", "node");
  cfg.set("tokenizer.sgt_operator", "gcn");
  cfg.set("model.remask", "v1");
  cfg.set("model.edge_features", "off");
  cfg.set("train.pool", "sum");
  const auto tc = cfg.to_train_config();
  CHECK(tc.tokenizer == "node");
  CHECK(tc.sgt_cfg.op.family == mgm::sgt::OperatorFamily::gcn);
  CHECK(tc.model.remask == mgm::nets::RemaskMode::v1);
  CHECK_FALSE(tc.model.edge_features);
  CHECK(tc.pool == mgm::tensorcore::PoolMode::sum);
  CHECK(tc.config_fingerprint == cfg.fingerprint());

  cfg.set("train.pool", "bogus");
  CHECK_THROWS_AS(cfg.to_train_config(), DataError);
}

TEST_CASE("malformed config lines carry their location") {
  CHECK_THROWS_WITH_AS(RunConfig::from_text("[train]\nepochs 5\n", "<mem>"),
                       doctest::Contains("<mem>:2"), DataError);
  CHECK_THROWS_AS(RunConfig::from_text("[]\n", "<mem>"), DataError);
}
