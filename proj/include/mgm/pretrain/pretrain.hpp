//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_PRETRAIN_PRETRAIN_HPP_
#define MGM_PRETRAIN_PRETRAIN_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mgm/core/rng.hpp"
#include "mgm/molgraph/molgraph.hpp"
#include "mgm/nets/nets.hpp"
#include "mgm/pretrain/checkpoint.hpp"
#include "mgm/sgt/sgt.hpp"
#include "mgm/tensorcore/tape.hpp"
#include "mgm/tokenize/tokenize.hpp"

namespace mgm::pretrain {

using molgraph::Batched;
using tensorcore::Parameter;
using tensorcore::ParamStore;
using tensorcore::Tape;
using tensorcore::Tensor;
using tensorcore::Var;

/// The masked node set of one batch: per batched graph exactly
/// max(1, round(ratio * n_g)) distinct nodes, never empty.
struct MaskPlan {
  std::vector<int> masked;  // sorted global node indices
  double ratio = 0.0;
  std::uint64_t seed = 0;
};

MaskPlan mask_nodes(const Batched &batch, double ratio, std::uint64_t seed);

/// Replaces masked positions with the reserved m0 embedding id. Unmasked
/// entries are returned untouched.
std::vector<int> apply_mask_ids(const std::vector<int> &clean_ids,
                                const MaskPlan &plan, int m0_id);

/// Reconstruction targets of one clean batch, produced outside any tape.
struct TokenSet {
  enum class Kind { continuous_nodes, discrete_nodes, discrete_fragments };
  Kind kind = Kind::continuous_nodes;
  Tensor values;                              // continuous: n x d
  std::vector<int> ids;                       // discrete targets
  std::vector<fragment::Fragment> fragments;  // aligned with ids
  int class_count = 0;

  int target_dim() const;
};

struct TokenizerSpec {
  enum class Kind { node, motif, sgt, frozen_gnn };
  Kind kind = Kind::sgt;
  sgt::SgtConfig sgt_cfg;
  const fragment::Recipe *recipe = nullptr;              // motif
  const tokenize::MotifVocabulary *motif_vocab = nullptr;  // motif
  const tokenize::FrozenGnnTokenizer *frozen = nullptr;    // frozen_gnn

  static Kind kind_from(const std::string &name);
  /// Decoder output width needed for this tokenizer.
  int out_dim(const tokenize::AtomVocabulary &vocab) const;
};

/// For SGT the embedding snapshot is the encoder's current table (detached);
/// other tokenizers ignore it.
TokenSet compute_targets(const Batched &batch,
                         const tokenize::AtomVocabulary &vocab,
                         const TokenizerSpec &spec,
                         const Tensor &embed_snapshot);

/// Reconstruction loss over masked information only: node tokenizers average
/// l(z_i, y_i) over V_m; fragment tokenizers average over the fragments that
/// intersect V_m, with pooled predictions. Positions outside the contributing
/// set receive exactly zero gradient.
Var reconstruction_loss(Tape &tape, Var z, const TokenSet &targets,
                        const MaskPlan &plan, tensorcore::PoolMode pool);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<Tensor> m;  // aligned with the store's parameter order
  std::vector<Tensor> v;

  void init(const ParamStore &store);
};

/// Standard Adam with bias correction. Throws NumericalError naming the
/// parameter if a gradient is non-finite; parameters stay untouched then.
void adam_step(ParamStore &store, AdamState &state, double lr);

struct TrainConfig {
  std::string tokenizer = "sgt";  // node | motif | sgt | frozen_gnn
  sgt::SgtConfig sgt_cfg;
  std::string motif_recipe = "preset:mgssl";
  std::int64_t motif_threshold = 5;
  std::string frozen_weights;  // checkpoint path for frozen_gnn

  double mask_ratio = 0.35;
  int epochs = 200;
  int batch_size = 16;
  double lr = 1e-3;
  std::uint64_t seed = 7;
  int checkpoint_every = 0;  // 0 = final checkpoint only
  tensorcore::PoolMode pool = tensorcore::PoolMode::mean;

  nets::ModelConfig model;  // out_dim is derived from the tokenizer
  std::uint64_t config_fingerprint = 0;
};

struct EpochMetrics {
  int epoch = 0;
  double mean_loss = 0.0;
  double token_accuracy = -1.0;  // -1 when not defined for the tokenizer
  double wall_ms = 0.0;
};

/// CSV form of the metric stream. Wall time is real elapsed time and is the
/// one non-reproducible column; pass with_wall=false when comparing runs.
std::string format_metrics_csv(std::span<const EpochMetrics> metrics,
                               bool with_wall = true);

struct TrainResult {
  std::vector<EpochMetrics> metrics;
  tokenize::AtomVocabulary vocab;
  std::optional<tokenize::MotifVocabulary> motif_vocab;
  nets::ModelConfig model_cfg;  // with the derived out_dim
};

/// Full MGM loop: seeded shuffling, masking, target computation outside the
/// tape, encode -> remask -> decode -> loss -> Adam. Parameters are created
/// in `store`; checkpoints land in out_dir when non-empty. Deterministic for
/// a fixed seed.
TrainResult train(std::span<const molgraph::MolGraph> corpus,
                  const TrainConfig &cfg, ParamStore &store,
                  const std::string &out_dir);

/// Unique continuous token vectors of a batch, collapsed by exact vector
/// equality (lowest index wins). For one-layer tokenizers this coincides
/// with enumerating per one-hop subtree identity.
struct TokenVocab {
  std::vector<std::vector<double>> vectors;

  /// Index of the unique vector bit-equal to `vec`; -1 if absent.
  int index_of(std::span<const double> vec) const;
  /// Nearest vector by Euclidean distance, ties to the lowest index.
  int nearest(std::span<const double> vec) const;
};

TokenVocab build_token_vocab(const Batched &batch, const Tensor &node_tokens);

/// Fraction of rows whose nearest vocabulary vector is their own token.
double token_prediction_accuracy(const Tensor &preds,
                                 const std::vector<int> &true_index,
                                 const TokenVocab &vocab);

}  // namespace mgm::pretrain

#endif  // MGM_PRETRAIN_PRETRAIN_HPP_
