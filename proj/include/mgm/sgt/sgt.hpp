//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_SGT_SGT_HPP_
#define MGM_SGT_SGT_HPP_

#include <span>
#include <string>
#include <vector>

#include "mgm/molgraph/molgraph.hpp"
#include "mgm/tensorcore/tensor.hpp"

namespace mgm::sgt {

enum class OperatorFamily { gin, gcn, sage };

/// The linear aggregation operator of a GNN family:
///   gin:  A + (1+eps) I          (eps 0.5 by default)
///   gcn:  D~^{-1/2} A~ D~^{-1/2}
///   sage: D~^{-1} A~
struct GraphOperatorKind {
  OperatorFamily family = OperatorFamily::gin;
  double eps = 0.5;
};

struct SgtConfig {
  GraphOperatorKind op;
  int layers = 1;
  int dim = 0;  // embedding width; 0 = infer from the table
  double bn_epsilon = 1e-12;
  /// Diagnostic switch: without the normalization the token columns keep
  /// whatever spread the propagation produced (the loss-vanishing setup).
  bool use_batch_norm = true;
};

/// Byte-stable textual form (the SGT has no weights to serialize).
std::string to_string(const SgtConfig &cfg);

/// Dense omega(A) for the given family.
tensorcore::Tensor build_operator(const molgraph::AdjacencyView &adj,
                                  GraphOperatorKind kind);

/// Parameter-free batch normalization: each column standardized by its batch
/// population mean and std with an epsilon guard. Constant columns map to 0.
tensorcore::Tensor batch_normalize(const tensorcore::Tensor &m,
                                   double bn_epsilon);

/// Tokens of a k-layer SGT on one batch: n x (k*d), per-layer slices
/// column-contiguous, H0 excluded from the concatenation.
struct SgtTokens {
  tensorcore::Tensor mat;
  int layers = 0;
  int dim = 0;

  /// Columns [l*d, (l+1)*d) for layer l (0-based).
  tensorcore::Tensor layer_slice(int l) const;
};

/// Runs the SGT on the clean (unmasked) batch with the encoder's embedding
/// table snapshot, entirely outside any gradient tape. The layer-1 neighbor
/// aggregation sums embedding rows in vocab-id order, so nodes with equal
/// one-hop rooted subtrees produce bit-identical layer-1 tokens within a
/// batch.
SgtTokens sgt_tokenize(const molgraph::MolGraph &batch,
                       const tensorcore::Tensor &embedding,
                       std::span<const int> vocab_ids, const SgtConfig &cfg);

}  // namespace mgm::sgt

#endif  // MGM_SGT_SGT_HPP_
