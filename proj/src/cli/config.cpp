//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/cli/config.hpp"

#include <algorithm>
#include <sstream>

#include "mgm/core/error.hpp"
#include "mgm/molgraph/graph_io.hpp"

namespace mgm::cli {

namespace {

std::string trim(const std::string &s) {
  const std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return "";
  }
  const std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::map<std::string, std::string> &known_keys() {
  // key -> default value
  static const std::map<std::string, std::string> defaults = {
      {"run.seed", "7"},
      {"run.threads", "1"},
      {"data.corpus", ""},
      {"tokenizer.kind", "sgt"},
      {"tokenizer.sgt_operator", "gin"},
      {"tokenizer.sgt_eps", "0.5"},
      {"tokenizer.sgt_layers", "1"},
      {"tokenizer.bn_epsilon", "1e-12"},
      {"tokenizer.motif_recipe", "preset:mgssl"},
      {"tokenizer.motif_threshold", "5"},
      {"tokenizer.frozen_weights", ""},
      {"model.dim", "16"},
      {"model.encoder", "gts_small"},
      {"model.decoder", "gts_tiny"},
      {"model.remask", "v2"},
      {"model.edge_features", "on"},
      {"model.gin_eps", "0"},
      {"train.epochs", "200"},
      {"train.batch_size", "16"},
      {"train.lr", "1e-3"},
      {"train.mask_ratio", "0.35"},
      {"train.checkpoint_every", "0"},
      {"train.pool", "mean"},
      {"probe.epochs", "1000"},
      {"probe.lr", "0.5"},
      {"probe.train_fraction", "0.9"},
      {"probe.mask_ratio", "0.35"},
  };
  return defaults;
}

}  // namespace

void RunConfig::check_known(const std::string &dotted_key,
                            const std::string &origin) const {
  if (known_keys().count(dotted_key) == 0) {
    throw DataError(origin + ": unknown config key '" + dotted_key + "'");
  }
}

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.values_ = known_keys();
  return c;
}

RunConfig RunConfig::from_text(const std::string &text,
                               const std::string &origin) {
  RunConfig c = defaults();
  std::istringstream is(text);
  std::string line;
  std::string section;
  std::size_t ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') {
      continue;
    }
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) {
        throw DataError(origin + ":" + std::to_string(ln) + ": empty section");
      }
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw DataError(origin + ":" + std::to_string(ln) +
                      ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw DataError(origin + ":" + std::to_string(ln) + ": empty key");
    }
    const std::string dotted = section.empty() ? key : section + "." + key;
    c.check_known(dotted, origin + ":" + std::to_string(ln));
    c.values_[dotted] = value;
  }
  return c;
}

RunConfig RunConfig::from_file(const std::string &path) {
  return from_text(molgraph::read_file(path), path);
}

void RunConfig::set(const std::string &dotted_key, const std::string &value) {
  check_known(dotted_key, "override");
  values_[dotted_key] = value;
}

const std::string &RunConfig::get(const std::string &dotted_key) const {
  const auto it = values_.find(dotted_key);
  if (it == values_.end()) {
    throw DataError("unknown config key '" + dotted_key + "'");
  }
  return it->second;
}

double RunConfig::get_double(const std::string &k) const {
  try {
    return std::stod(get(k));
  } catch (const std::exception &) {
    throw DataError("config key '" + k + "' is not a number: " + get(k));
  }
}

std::int64_t RunConfig::get_int(const std::string &k) const {
  try {
    return std::stoll(get(k));
  } catch (const std::exception &) {
    throw DataError("config key '" + k + "' is not an integer: " + get(k));
  }
}

std::uint64_t RunConfig::get_u64(const std::string &k) const {
  try {
    return std::stoull(get(k));
  } catch (const std::exception &) {
    throw DataError("config key '" + k + "' is not an integer: " + get(k));
  }
}

bool RunConfig::get_bool(const std::string &k) const {
  const std::string &v = get(k);
  if (v == "on" || v == "true" || v == "1") {
    return true;
  }
  if (v == "off" || v == "false" || v == "0") {
    return false;
  }
  throw DataError("config key '" + k + "' is not a boolean: " + v);
}

std::string RunConfig::resolved_text() const {
  // values_ is already sorted by dotted key; emit section headers on change.
  std::ostringstream os;
  std::string section;
  for (const auto &[dotted, value]: values_) {
    const std::size_t dot = dotted.find('.');
    const std::string sec = dotted.substr(0, dot);
    const std::string key = dotted.substr(dot + 1);
    if (sec != section) {
      if (!section.empty()) {
        os << '\n';
      }
      os << '[' << sec << "]\n";
      section = sec;
    }
    os << key << " = " << value << '\n';
  }
  return os.str();
}

std::uint64_t RunConfig::fingerprint() const {
  return fnv1a(resolved_text());
}

pretrain::TrainConfig RunConfig::to_train_config() const {
  pretrain::TrainConfig t;
  t.tokenizer = get("tokenizer.kind");
  const std::string op = get("tokenizer.sgt_operator");
  if (op == "gin") {
    t.sgt_cfg.op.family = sgt::OperatorFamily::gin;
  } else if (op == "gcn") {
    t.sgt_cfg.op.family = sgt::OperatorFamily::gcn;
  } else if (op == "sage") {
    t.sgt_cfg.op.family = sgt::OperatorFamily::sage;
  } else {
    throw DataError("unknown tokenizer.sgt_operator: " + op);
  }
  t.sgt_cfg.op.eps = get_double("tokenizer.sgt_eps");
  t.sgt_cfg.layers = static_cast<int>(get_int("tokenizer.sgt_layers"));
  t.sgt_cfg.bn_epsilon = get_double("tokenizer.bn_epsilon");
  t.motif_recipe = get("tokenizer.motif_recipe");
  t.motif_threshold = get_int("tokenizer.motif_threshold");
  t.frozen_weights = get("tokenizer.frozen_weights");

  t.mask_ratio = get_double("train.mask_ratio");
  t.epochs = static_cast<int>(get_int("train.epochs"));
  t.batch_size = static_cast<int>(get_int("train.batch_size"));
  t.lr = get_double("train.lr");
  t.seed = get_u64("run.seed");
  t.checkpoint_every = static_cast<int>(get_int("train.checkpoint_every"));
  const std::string pool = get("train.pool");
  if (pool == "mean") {
    t.pool = tensorcore::PoolMode::mean;
  } else if (pool == "sum") {
    t.pool = tensorcore::PoolMode::sum;
  } else if (pool == "max") {
    t.pool = tensorcore::PoolMode::max;
  } else {
    throw DataError("unknown train.pool: " + pool);
  }

  t.model.dim = static_cast<int>(get_int("model.dim"));
  t.model.encoder = nets::preset_from(get("model.encoder"));
  t.model.decoder = nets::preset_from(get("model.decoder"));
  t.model.remask = nets::remask_mode_from(get("model.remask"));
  t.model.edge_features = get_bool("model.edge_features");
  t.model.gin_eps = get_double("model.gin_eps");
  t.sgt_cfg.dim = t.model.dim;
  t.config_fingerprint = fingerprint();
  return t;
}

}  // namespace mgm::cli
