//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_FRAGMENT_FRAGMENT_HPP_
#define MGM_FRAGMENT_FRAGMENT_HPP_

#include <vector>

namespace mgm::fragment {

enum class FragmentKind {
  fg,
  cycle,
  merged_cycle,
  brics_piece,
  singleton_node,
  single_edge,
  refined,
};

/// A subgraph of a parent MolGraph: node indices plus the selected edge
/// indices (every edge endpoint must be inside node_ids). Both lists are
/// kept sorted ascending.
struct Fragment {
  std::vector<int> node_ids;
  std::vector<int> edge_ids;
  FragmentKind kind = FragmentKind::fg;

  bool contains_node(int v) const;
  std::size_t size() const { return node_ids.size(); }

  /// Sorts both index lists; call after building one by hand.
  void normalize();
};

/// Stable ordering used everywhere fragments are emitted:
/// (min node id, node count, node ids lexicographic).
bool fragment_order(const Fragment &a, const Fragment &b);

}  // namespace mgm::fragment

#endif  // MGM_FRAGMENT_FRAGMENT_HPP_
