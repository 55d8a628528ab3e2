//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_CLI_CONFIG_HPP_
#define MGM_CLI_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mgm/pretrain/pretrain.hpp"

namespace mgm::cli {

/// Flat `key = value` config with [section] headers; keys are addressed as
/// "section.key". Unknown keys are rejected. The resolved form (defaults
/// merged with file and command-line overrides) is echoed verbatim into the
/// run's output directory so any run can be replayed byte-exactly.
class RunConfig {
 public:
  static RunConfig defaults();
  static RunConfig from_file(const std::string &path);
  static RunConfig from_text(const std::string &text, const std::string &origin);

  /// "section.key=value" override (command line or MGMLAB_SEED).
  void set(const std::string &dotted_key, const std::string &value);

  const std::string &get(const std::string &dotted_key) const;
  double get_double(const std::string &dotted_key) const;
  std::int64_t get_int(const std::string &dotted_key) const;
  std::uint64_t get_u64(const std::string &dotted_key) const;
  bool get_bool(const std::string &dotted_key) const;

  /// Canonical text form: sorted sections, sorted keys.
  std::string resolved_text() const;
  std::uint64_t fingerprint() const;

  pretrain::TrainConfig to_train_config() const;

 private:
  std::map<std::string, std::string> values_;

  void check_known(const std::string &dotted_key, const std::string &origin) const;
};

}  // namespace mgm::cli

#endif  // MGM_CLI_CONFIG_HPP_
