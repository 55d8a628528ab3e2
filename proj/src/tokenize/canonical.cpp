//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "mgm/core/error.hpp"
#include "mgm/tokenize/tokenize.hpp"

namespace mgm::tokenize {

using fragment::Fragment;
using molgraph::MolGraph;

namespace {

constexpr std::size_t kBruteForceLimit = 8;
constexpr std::size_t kCanonicalLimit = 12;

struct SubgraphView {
  std::vector<std::string> label;          // per local node, aromatic lowercase
  std::vector<std::vector<int>> bond;      // k x k codes, 0 = none
  std::size_t size() const { return label.size(); }
};

int bond_code(molgraph::BondType t) {
  switch (t) {
  case molgraph::BondType::single: return 1;
  case molgraph::BondType::double_bond: return 2;
  case molgraph::BondType::triple: return 3;
  case molgraph::BondType::aromatic: return 4;
  }
  return 0;
}

SubgraphView view_of(const Fragment &frag, const MolGraph &g) {
  SubgraphView v;
  std::map<int, int> local;
  for (int node: frag.node_ids) {
    local[node] = static_cast<int>(v.label.size());
    const auto &attr = g.node(node);
    std::string sym = molgraph::element_symbol(attr.atomic_number);
    if (attr.is_aromatic) {
      sym[0] = static_cast<char>(
          std::tolower(static_cast<unsigned char>(sym[0])));
    }
    v.label.push_back(std::move(sym));
  }
  v.bond.assign(v.size(), std::vector<int>(v.size(), 0));
  for (int e: frag.edge_ids) {
    const molgraph::Edge &ed = g.edge(e);
    const int a = local.at(ed.i);
    const int b = local.at(ed.j);
    v.bond[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
        bond_code(ed.attr.bond_type);
    v.bond[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] =
        bond_code(ed.attr.bond_type);
  }
  return v;
}

/// Serialization under an ordering: per position q, the node label, a comma,
/// the bond codes toward positions 0..q-1, and ';'. Both search strategies
/// and the test oracle minimize this same string.
std::string serialize(const SubgraphView &v, const std::vector<int> &order) {
  std::string s;
  for (std::size_t q = 0; q < order.size(); ++q) {
    s += v.label[static_cast<std::size_t>(order[q])];
    s.push_back(',');
    for (std::size_t p = 0; p < q; ++p) {
      s.push_back(static_cast<char>(
          '0' + v.bond[static_cast<std::size_t>(order[q])]
                      [static_cast<std::size_t>(order[p])]));
    }
    s.push_back(';');
  }
  return s;
}

std::string brute_force_key(const SubgraphView &v) {
  std::vector<int> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::string best = serialize(v, order);
  while (std::next_permutation(order.begin(), order.end())) {
    std::string s = serialize(v, order);
    if (s < best) {
      best = std::move(s);
    }
  }
  return best;
}

/// 1-WL style color refinement; colors only guide candidate ordering.
std::vector<int> refined_colors(const SubgraphView &v) {
  const std::size_t k = v.size();
  std::vector<std::string> color(k);
  for (std::size_t i = 0; i < k; ++i) {
    int degree = 0;
    for (std::size_t j = 0; j < k; ++j) {
      degree += v.bond[i][j] != 0 ? 1 : 0;
    }
    color[i] = v.label[i] + "/" + std::to_string(degree);
  }
  for (std::size_t round = 0; round < k; ++round) {
    std::vector<std::string> next(k);
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<std::string> nb;
      for (std::size_t j = 0; j < k; ++j) {
        if (v.bond[i][j] != 0) {
          nb.push_back(std::to_string(v.bond[i][j]) + ":" + color[j]);
        }
      }
      std::sort(nb.begin(), nb.end());
      next[i] = color[i];
      for (const std::string &s: nb) {
        next[i] += "|" + s;
      }
    }
    if (next == color) {
      break;
    }
    color = std::move(next);
  }
  std::vector<std::string> sorted = color;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<int> rank(k);
  for (std::size_t i = 0; i < k; ++i) {
    rank[i] = static_cast<int>(
        std::lower_bound(sorted.begin(), sorted.end(), color[i]) -
        sorted.begin());
  }
  return rank;
}

struct BranchAndBound {
  const SubgraphView &v;
  std::vector<int> candidates;  // nodes ordered by (color, id)
  std::string best;
  std::vector<int> order;
  std::vector<char> used;

  explicit BranchAndBound(const SubgraphView &view) : v(view) {
    const std::vector<int> color = refined_colors(view);
    candidates.resize(view.size());
    std::iota(candidates.begin(), candidates.end(), 0);
    std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
      if (color[static_cast<std::size_t>(a)] != color[static_cast<std::size_t>(b)]) {
        return color[static_cast<std::size_t>(a)] < color[static_cast<std::size_t>(b)];
      }
      return a < b;
    });
    used.assign(view.size(), 0);
  }

  std::string segment(int node, std::size_t position) const {
    std::string s = v.label[static_cast<std::size_t>(node)];
    s.push_back(',');
    for (std::size_t p = 0; p < position; ++p) {
      s.push_back(static_cast<char>(
          '0' + v.bond[static_cast<std::size_t>(node)]
                      [static_cast<std::size_t>(order[p])]));
    }
    s.push_back(';');
    return s;
  }

  void search(std::string prefix) {
    const std::size_t pos = order.size();
    if (pos == v.size()) {
      if (best.empty() || prefix < best) {
        best = std::move(prefix);
      }
      return;
    }
    for (int node: candidates) {
      if (used[static_cast<std::size_t>(node)]) {
        continue;
      }
      std::string next = prefix + segment(node, pos);
      // Prune branches that already compare greater than the incumbent.
      if (!best.empty() &&
          best.compare(0, next.size(), next) < 0) {
        continue;
      }
      used[static_cast<std::size_t>(node)] = 1;
      order.push_back(node);
      search(std::move(next));
      order.pop_back();
      used[static_cast<std::size_t>(node)] = 0;
    }
  }
};

}  // namespace

std::string canonical_key(const Fragment &frag, const MolGraph &g) {
  if (frag.node_ids.empty()) {
    throw DataError("canonical_key: empty fragment");
  }
  if (frag.node_ids.size() > kCanonicalLimit) {
    throw DataError(
        "canonical_key: fragment exceeds 12 nodes; raise the motif "
        "vocabulary frequency threshold to drop rare large motifs");
  }
  const SubgraphView v = view_of(frag, g);
  if (v.size() <= kBruteForceLimit) {
    return brute_force_key(v);
  }
  BranchAndBound bb(v);
  bb.search("");
  return bb.best;
}

}  // namespace mgm::tokenize
