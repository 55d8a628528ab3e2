//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/fragment/fragment.hpp"

#include <algorithm>

namespace mgm::fragment {

bool Fragment::contains_node(int v) const {
  return std::binary_search(node_ids.begin(), node_ids.end(), v);
}

void Fragment::normalize() {
  std::sort(node_ids.begin(), node_ids.end());
  node_ids.erase(std::unique(node_ids.begin(), node_ids.end()), node_ids.end());
  std::sort(edge_ids.begin(), edge_ids.end());
  edge_ids.erase(std::unique(edge_ids.begin(), edge_ids.end()), edge_ids.end());
}

bool fragment_order(const Fragment &a, const Fragment &b) {
  const int ma = a.node_ids.empty() ? -1 : a.node_ids.front();
  const int mb = b.node_ids.empty() ? -1 : b.node_ids.front();
  if (ma != mb) {
    return ma < mb;
  }
  if (a.node_ids.size() != b.node_ids.size()) {
    return a.node_ids.size() < b.node_ids.size();
  }
  return a.node_ids < b.node_ids;
}

}  // namespace mgm::fragment
