//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

// Independent brute-force oracles used by the unit and acceptance suites.
// These deliberately share no code with the library paths they check.

#ifndef MGM_TESTS_ORACLES_HPP_
#define MGM_TESTS_ORACLES_HPP_

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "mgm/core/rng.hpp"
#include "mgm/fragment/pattern.hpp"
#include "mgm/molgraph/molgraph.hpp"

namespace mgm_oracles {

using mgm::RngStream;
using mgm::fragment::Pattern;
using mgm::molgraph::BondType;
using mgm::molgraph::Edge;
using mgm::molgraph::MolGraph;
using mgm::molgraph::NodeAttr;

/// All node sets matched by the pattern: every injective assignment of
/// pattern atoms to graph nodes is enumerated and filtered.
inline std::set<std::vector<int>> oracle_match_node_sets(const MolGraph &g,
                                                         const Pattern &p) {
  std::set<std::vector<int>> result;
  const std::size_t k = p.size();
  const int n = g.node_count();
  if (k == 0 || static_cast<int>(k) > n) {
    return result;
  }
  std::vector<int> assign(k, -1);
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  auto atom_ok = [&](std::size_t atom, int v) {
    const auto &pa = p.atoms[atom];
    const auto &na = g.node(v);
    if (pa.halogen_class) {
      const int z = na.atomic_number;
      if (z != 9 && z != 17 && z != 35 && z != 53) {
        return false;
      }
    } else if (pa.atomic_number && *pa.atomic_number != na.atomic_number) {
      return false;
    }
    if (pa.aromatic && *pa.aromatic != na.is_aromatic) {
      return false;
    }
    return true;
  };
  auto bonds_ok = [&]() {
    for (const auto &pb: p.bonds) {
      const int e = g.find_edge(assign[static_cast<std::size_t>(pb.a)],
                                assign[static_cast<std::size_t>(pb.b)]);
      if (e < 0) {
        return false;
      }
      if (pb.type && *pb.type != g.edge(e).attr.bond_type) {
        return false;
      }
    }
    return true;
  };
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Plain positional backtracking over all injections.
  auto rec = [&](auto &&self, std::size_t depth) -> void {
    if (depth == k) {
      if (bonds_ok()) {
        std::vector<int> nodes(assign.begin(), assign.end());
        std::sort(nodes.begin(), nodes.end());
        result.insert(std::move(nodes));
      }
      return;
    }
    for (int v = 0; v < n; ++v) {
      if (used[static_cast<std::size_t>(v)] || !atom_ok(depth, v)) {
        continue;
      }
      used[static_cast<std::size_t>(v)] = 1;
      assign[depth] = v;
      self(self, depth + 1);
      assign[depth] = -1;
      used[static_cast<std::size_t>(v)] = 0;
    }
  };
  rec(rec, 0);
  return result;
}

/// All simple cycles of a small graph, as sorted node sets.
inline std::set<std::vector<int>> oracle_all_simple_cycles(const MolGraph &g) {
  std::set<std::vector<int>> cycles;
  const int n = g.node_count();
  std::vector<int> path;
  std::vector<char> on_path(static_cast<std::size_t>(n), 0);
  auto rec = [&](auto &&self, int start, int v) -> void {
    for (int u: g.neighbors(v)) {
      if (u == start && path.size() >= 3) {
        std::vector<int> c = path;
        std::sort(c.begin(), c.end());
        cycles.insert(std::move(c));
      } else if (u > start && !on_path[static_cast<std::size_t>(u)]) {
        on_path[static_cast<std::size_t>(u)] = 1;
        path.push_back(u);
        self(self, start, u);
        path.pop_back();
        on_path[static_cast<std::size_t>(u)] = 0;
      }
    }
  };
  for (int s = 0; s < n; ++s) {
    path.assign(1, s);
    std::fill(on_path.begin(), on_path.end(), 0);
    on_path[static_cast<std::size_t>(s)] = 1;
    rec(rec, s, s);
  }
  return cycles;
}

/// Random connected molecule-like graph with up to max_nodes nodes.
inline MolGraph random_molgraph(RngStream &rng, int max_nodes) {
  const int n = 1 + static_cast<int>(rng.uniform_below(
                        static_cast<std::uint64_t>(max_nodes)));
  const int zs[] = {6, 7, 8, 16, 9};
  std::vector<NodeAttr> nodes;
  for (int v = 0; v < n; ++v) {
    NodeAttr a;
    a.atomic_number = zs[rng.uniform_below(5)];
    a.is_aromatic = rng.uniform() < 0.25;
    nodes.push_back(a);
  }
  const BondType types[] = {BondType::single, BondType::double_bond,
                            BondType::triple, BondType::aromatic};
  std::vector<Edge> edges;
  std::set<std::pair<int, int>> seen;
  for (int v = 1; v < n; ++v) {  // random spanning tree
    const int u = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(v)));
    edges.push_back(Edge{u, v, {types[rng.uniform_below(4)]}});
    seen.insert({u, v});
  }
  const int extra = static_cast<int>(rng.uniform_below(3));
  for (int t = 0; t < extra && n > 2; ++t) {
    const int u = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n)));
    const int v = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(n)));
    const auto key = std::make_pair(std::min(u, v), std::max(u, v));
    if (u != v && seen.insert(key).second) {
      edges.push_back(Edge{u, v, {types[rng.uniform_below(4)]}});
    }
  }
  return MolGraph::create(std::move(nodes), std::move(edges));
}

/// Random connected pattern of up to max_atoms atoms, occasionally using
/// element/aromatic/bond wildcards.
inline Pattern random_pattern(RngStream &rng, int max_atoms) {
  const int k = 1 + static_cast<int>(rng.uniform_below(
                        static_cast<std::uint64_t>(max_atoms)));
  std::string body;
  const char *uppers[] = {"C", "N", "O", "S"};
  const char *lowers[] = {"c", "n", "o", "s"};
  auto atom = [&]() -> std::string {
    const double roll = rng.uniform();
    if (roll < 0.15) {
      return "*";
    }
    if (roll < 0.55) {
      return uppers[rng.uniform_below(4)];
    }
    return lowers[rng.uniform_below(4)];
  };
  auto bond = [&]() -> std::string {
    const double roll = rng.uniform();
    if (roll < 0.35) {
      return "";  // implicit
    }
    if (roll < 0.5) {
      return "~";
    }
    if (roll < 0.7) {
      return "-";
    }
    if (roll < 0.85) {
      return "=";
    }
    return ":";
  };
  body += atom();
  for (int i = 1; i < k; ++i) {
    body += bond();
    body += atom();
  }
  return mgm::fragment::parse_pattern("random", body);
}

}  // namespace mgm_oracles

#endif  // MGM_TESTS_ORACLES_HPP_
