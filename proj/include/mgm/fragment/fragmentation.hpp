//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_FRAGMENT_FRAGMENTATION_HPP_
#define MGM_FRAGMENT_FRAGMENTATION_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mgm/fragment/fragment.hpp"
#include "mgm/fragment/pattern.hpp"
#include "mgm/molgraph/molgraph.hpp"

namespace mgm::fragment {

/// Minimum cycle basis (smallest-set-of-smallest-rings semantics):
/// |E| - |V| + c simple cycles, kind = cycle, in fragment_order. Candidates
/// are BFS shortest cycles per edge, selected greedily by (length, lexico-
/// graphically smallest node set) under GF(2) independence.
std::vector<Fragment> extract_cycles(const molgraph::MolGraph &g);

/// Unions any pair sharing more than 2 nodes until fixpoint. Inputs must be
/// cycle or merged_cycle fragments. Non-participating cycles pass through.
std::vector<Fragment> merge_cycles(const std::vector<Fragment> &cycles);

/// Every node of g not contained in any covered fragment becomes a
/// singleton fragment.
std::vector<Fragment> remaining_nodes(const molgraph::MolGraph &g,
                                      const std::vector<Fragment> &covered);

/// Every edge of g not contained in any covered fragment becomes a 2-node
/// fragment. With cc_single_only, only single bonds between two non-aromatic
/// carbons are emitted (the RelMole rule; aromatic bonds are a separate bond
/// type here and never count as single).
std::vector<Fragment> remaining_edges(const molgraph::MolGraph &g,
                                      const std::vector<Fragment> &covered,
                                      bool cc_single_only);

/// The two MGSSL refinement rules: single atoms attached to a cycle are
/// separated into singletons, and connected non-cycle parts of >= 3 atoms
/// become their own fragments. Fragments without cycles pass through.
std::vector<Fragment> mgssl_refine(const molgraph::MolGraph &g,
                                   const std::vector<Fragment> &fragments);

/// A fragmentation pipeline parsed from a textual spec. Steps separated by
/// ';'. Sources: cycles | fg | brics | union(src, src, ...). Transforms:
/// merge_cycles | remaining_nodes | remaining_edges | remaining_cc_edges |
/// mgssl_refine. Presets: "preset:mgssl" = "brics ; mgssl_refine",
/// "preset:relmole" = "union(cycles, fg) ; remaining_cc_edges ;
/// remaining_nodes".
class Recipe {
 public:
  /// Throws DataError on a malformed or empty spec.
  static Recipe parse(const std::string &spec);
  static Recipe parse(const std::string &spec,
                      const std::vector<Pattern> &fg_patterns,
                      const CleavageTable &cleavage);

  const std::string &canonical_text() const { return canonical_; }
  std::uint64_t fingerprint() const;

  std::vector<Fragment> apply(const molgraph::MolGraph &g) const;

 private:
  enum class StepKind {
    cycles,
    fg,
    brics,
    union_group,
    merge_cycles,
    remaining_nodes,
    remaining_edges,
    remaining_cc_edges,
    mgssl_refine,
  };
  struct Step {
    StepKind kind;
    std::vector<Step> children;  // for union_group
  };

  std::string canonical_;
  std::vector<Step> steps_;
  std::vector<Pattern> fg_patterns_;
  CleavageTable cleavage_;

  std::vector<Fragment> run_source(const molgraph::MolGraph &g,
                                   const Step &s) const;
};

/// compose(g, recipe): deterministic fragment sequence in fragment_order.
std::vector<Fragment> compose(const molgraph::MolGraph &g, const Recipe &recipe);

}  // namespace mgm::fragment

#endif  // MGM_FRAGMENT_FRAGMENTATION_HPP_
