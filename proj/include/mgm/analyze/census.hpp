//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_ANALYZE_CENSUS_HPP_
#define MGM_ANALYZE_CENSUS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mgm/molgraph/molgraph.hpp"

namespace mgm::analyze {

/// "CENTER:NEIGHBORS" one-hop rooted-subtree key: center symbol, a colon,
/// then the neighbor symbols sorted ascending. Aromatic atoms are lowercase
/// (benzene carbons yield "c:cc").
std::string subtree_key(const molgraph::MolGraph &g, int node);

struct CensusEntry {
  std::string key;
  std::int64_t count = 0;
};

struct CensusResult {
  std::vector<CensusEntry> subtrees;  // sorted by (count desc, key asc)
  std::vector<CensusEntry> atoms;     // element symbols, same order rule
  std::int64_t total_nodes = 0;

  std::size_t subtree_type_count() const { return subtrees.size(); }
  std::size_t atom_type_count() const { return atoms.size(); }

  /// Comma-separated (key, count, fraction) per distribution plus summary
  /// lines with the total type counts.
  std::string to_csv() const;
};

/// Counts every node's one-hop subtree key and element across the corpus.
/// With threads > 1 the corpus is mapped in parallel and merged
/// deterministically.
CensusResult subtree_census(std::span<const molgraph::MolGraph> corpus,
                            int threads = 1);

}  // namespace mgm::analyze

#endif  // MGM_ANALYZE_CENSUS_HPP_
