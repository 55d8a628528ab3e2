//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_GRADCHECK_GRADCHECK_HPP_
#define MGM_GRADCHECK_GRADCHECK_HPP_

#include <functional>
#include <string>
#include <vector>

#include "mgm/tensorcore/tape.hpp"

namespace mgm::gradcheck {

/// Central finite differences against the tape's analytic gradients. The
/// builder must construct the loss from the store's current parameter values
/// on a fresh tape every call (define-by-run contract).
using LossBuilder = std::function<tensorcore::Var(tensorcore::Tape &)>;

struct CheckOutcome {
  std::string name;
  double max_rel_error = 0.0;
  bool ok = false;
};

/// Max over all parameter entries of |analytic - numeric| / max(1, |a|, |n|),
/// with step h (central differences).
double max_rel_error(tensorcore::ParamStore &store, const LossBuilder &build,
                     double h = 1e-6);

/// The full finite-difference suite: every tensor op plus the complete
/// encode (remask v1/v2) -> decode -> loss pipeline on a small molecule.
/// Tolerances: 1e-4 for ops, 1e-3 for the pipeline.
std::vector<CheckOutcome> run_suite(std::uint64_t seed);

/// True when every outcome passed.
bool all_ok(const std::vector<CheckOutcome> &outcomes);

}  // namespace mgm::gradcheck

#endif  // MGM_GRADCHECK_GRADCHECK_HPP_
