//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_PRETRAIN_CHECKPOINT_HPP_
#define MGM_PRETRAIN_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mgm/tensorcore/tape.hpp"
#include "mgm/tensorcore/tensor.hpp"

namespace mgm::pretrain {

/// Versioned binary container: named arrays with shapes and little-endian
/// 64-bit values, plus config fingerprint, epoch and RNG state. Reload
/// reproduces forward passes bit-exactly.
struct CheckpointMeta {
  std::uint64_t config_fingerprint = 0;
  std::int64_t epoch = 0;
  std::vector<std::uint64_t> rng_state;
};

struct Checkpoint {
  CheckpointMeta meta;
  std::vector<std::pair<std::string, tensorcore::Tensor>> arrays;

  const tensorcore::Tensor *find(const std::string &name) const;
};

void save_checkpoint(const std::string &path,
                     const tensorcore::ParamStore &store,
                     const CheckpointMeta &meta);
Checkpoint load_checkpoint(const std::string &path);

/// Recreates every checkpointed array as a parameter, in checkpoint order.
/// The store must be empty.
void restore_into_store(const Checkpoint &ckpt, tensorcore::ParamStore &store);

}  // namespace mgm::pretrain

#endif  // MGM_PRETRAIN_CHECKPOINT_HPP_
