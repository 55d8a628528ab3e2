//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_ANALYZE_PROBE_HPP_
#define MGM_ANALYZE_PROBE_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mgm/fragment/pattern.hpp"
#include "mgm/molgraph/molgraph.hpp"
#include "mgm/nets/nets.hpp"
#include "mgm/tokenize/tokenize.hpp"

namespace mgm::analyze {

struct ProbeConfig {
  double mask_ratio = 0.35;
  std::uint64_t seed = 7;
  int epochs = 1000;
  double lr = 0.5;
  double train_fraction = 0.9;
  int batch_size = 16;
  /// Independent mask draws per corpus pass when collecting masked-node
  /// representations (more draws, more probe examples).
  int mask_rounds = 8;
};

struct ProbeReport {
  std::string task;
  std::string metric_name;  // "accuracy" or "roc_auc"
  double metric = 0.0;
  std::vector<std::pair<std::string, double>> per_class;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> notes;

  std::string to_text() const;
};

/// Masked-atom-type probe: freezes the encoder, extracts masked-node hidden
/// representations with remask disabled, trains a linear softmax classifier
/// by plain gradient descent and reports test accuracy. Encoder parameters
/// are treated read-only throughout.
ProbeReport probe_masked_atoms(const nets::AutoencoderParams &model,
                               const tokenize::AtomVocabulary &vocab,
                               std::span<const molgraph::MolGraph> corpus,
                               const ProbeConfig &cfg);

/// FG-presence probe: labels molecules by pattern matching, trains one
/// linear classifier per pattern on mean-pooled frozen representations of
/// unmasked molecules, reports macro ROC-AUC (rank-sum, ties half). Patterns
/// without both classes in the corpus are excluded with a warning note.
ProbeReport probe_fg(const nets::AutoencoderParams &model,
                     const tokenize::AtomVocabulary &vocab,
                     std::span<const molgraph::MolGraph> corpus,
                     const std::vector<fragment::Pattern> &patterns,
                     const ProbeConfig &cfg);

/// The probes' linear classifier: plain full-batch gradient descent on
/// softmax cross-entropy, weights living in their own parameter store.
struct LinearProbe {
  tensorcore::Tensor w;  // d x classes
  tensorcore::Tensor b;  // 1 x classes

  tensorcore::Tensor logits(const tensorcore::Tensor &x) const;
  int predict_row(const tensorcore::Tensor &x, std::size_t row) const;
};

LinearProbe fit_linear_probe(const tensorcore::Tensor &x,
                             const std::vector<int> &labels, int classes,
                             int epochs, double lr);

/// Rank-sum ROC-AUC; tied scores contribute half. Needs both classes.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Fraction held by the most common label.
double majority_baseline(std::span<const int> labels);

}  // namespace mgm::analyze

#endif  // MGM_ANALYZE_PROBE_HPP_
