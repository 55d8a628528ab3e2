//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_TOKENIZE_TOKENIZE_HPP_
#define MGM_TOKENIZE_TOKENIZE_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mgm/core/rng.hpp"
#include "mgm/fragment/fragmentation.hpp"
#include "mgm/molgraph/molgraph.hpp"
#include "mgm/tensorcore/tensor.hpp"

namespace mgm::tokenize {

/// Either a discrete vocabulary id or a continuous vector, with the node or
/// fragment it tokenizes.
struct Token {
  enum class Kind { discrete, continuous } kind = Kind::discrete;
  int id = -1;                  // discrete
  std::vector<double> vec;      // continuous
  fragment::Fragment fragment;  // what this token covers
};

/// Corpus-derived atom vocabulary: distinct atomic numbers sorted ascending,
/// plus a reserved UNK id at the end. The masked-input id m0 sits one slot
/// past UNK in the embedding table (outside this vocabulary).
class AtomVocabulary {
 public:
  static AtomVocabulary build(std::span<const molgraph::MolGraph> corpus);

  int id_of(int atomic_number) const;  // UNK id for unseen elements
  int unk_id() const { return static_cast<int>(zs_.size()); }
  int size() const { return static_cast<int>(zs_.size()) + 1; }  // incl. UNK
  int m0_id() const { return size(); }
  /// Rows an embedding table must have (vocabulary + UNK + m0).
  int embedding_rows() const { return size() + 1; }
  const std::vector<int> &atomic_numbers() const { return zs_; }

  std::vector<int> ids_for(const molgraph::MolGraph &g) const;

 private:
  std::vector<int> zs_;
  std::map<int, int> index_;
};

/// One discrete token per node: the atom-vocabulary id.
std::vector<Token> tok_node(const molgraph::MolGraph &g,
                            const AtomVocabulary &vocab);

/// One discrete token per edge over the 4 bond types.
std::vector<Token> tok_edge(const molgraph::MolGraph &g);

/// Node-relabeling-invariant key of a fragment's subgraph (atom labels,
/// aromatic flags and typed bonds). Exhaustive over permutations for <= 8
/// nodes; label/degree-refined branch and bound up to 12; larger fragments
/// are an error suggesting a higher vocabulary threshold.
std::string canonical_key(const fragment::Fragment &frag,
                          const molgraph::MolGraph &g);

/// Motif vocabulary: canonical keys that met the frequency threshold,
/// ordered by (count desc, key asc), with a reserved UNK at index K.
class MotifVocabulary {
 public:
  struct Entry {
    std::string key;
    std::int64_t count;
  };

  static MotifVocabulary build(std::span<const molgraph::MolGraph> corpus,
                               const fragment::Recipe &recipe,
                               std::int64_t threshold);

  int id_of(const std::string &key) const;  // UNK for missing keys
  int unk_id() const { return static_cast<int>(entries_.size()); }
  int size() const { return static_cast<int>(entries_.size()) + 1; }
  const std::vector<Entry> &entries() const { return entries_; }
  std::uint64_t recipe_fingerprint() const { return recipe_fingerprint_; }
  std::int64_t threshold() const { return threshold_; }

  /// Text form: header with recipe fingerprint + threshold, then
  /// index<TAB>count<TAB>key lines. Byte-stable for a fixed corpus.
  std::string to_text() const;
  static MotifVocabulary from_text(const std::string &text,
                                   const std::string &origin);
  void save(const std::string &path) const;
  static MotifVocabulary load(const std::string &path);

 private:
  std::vector<Entry> entries_;
  std::map<std::string, int> index_;
  std::uint64_t recipe_fingerprint_ = 0;
  std::int64_t threshold_ = 0;
};

/// One discrete token per fragment of recipe(g); unseen keys map to UNK.
/// The recipe fingerprint must match the vocabulary's.
std::vector<Token> tok_motif(const molgraph::MolGraph &g,
                             const fragment::Recipe &recipe,
                             const MotifVocabulary &vocab);

/// Frozen k-layer GIN tokenizer: atomic-number features only, no edge
/// features, relu between layers, stop-gradient by construction (plain
/// tensors, never on a tape).
struct FrozenGnnTokenizer {
  int layers = 1;
  int dim = 0;
  double eps = 0.0;                       // GIN epsilon
  tensorcore::Tensor embed;               // vocab.size() x dim
  std::vector<tensorcore::Tensor> combine_w;  // dim x dim per layer

  void validate(const AtomVocabulary &vocab) const;
  static FrozenGnnTokenizer random(const AtomVocabulary &vocab, int layers,
                                   int dim, RngStream &init);
};

/// One continuous token per node: the final-layer hidden state.
std::vector<Token> frozen_gnn_tokenize(const molgraph::MolGraph &g,
                                       const AtomVocabulary &vocab,
                                       const FrozenGnnTokenizer &tok);

}  // namespace mgm::tokenize

#endif  // MGM_TOKENIZE_TOKENIZE_HPP_
