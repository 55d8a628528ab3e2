//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/molgraph/molgraph.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

#include "mgm/core/error.hpp"

namespace mgm::molgraph {

MolGraph MolGraph::create(std::vector<NodeAttr> nodes, std::vector<Edge> edges) {
  const int n = static_cast<int>(nodes.size());
  if (n < 1) {
    throw DataError("MolGraph: node count must be >= 1");
  }
  if (n > kMaxNodes) {
    throw DataError("MolGraph: node count exceeds the " +
                    std::to_string(kMaxNodes) + "-node cap");
  }
  std::set<std::pair<int, int>> seen;
  for (const Edge &e: edges) {
    if (e.i < 0 || e.i >= n || e.j < 0 || e.j >= n) {
      throw DataError("MolGraph: edge endpoint out of range");
    }
    if (e.i == e.j) {
      throw DataError("MolGraph: self-loop rejected");
    }
    if (!seen.insert({std::min(e.i, e.j), std::max(e.i, e.j)}).second) {
      throw DataError("MolGraph: duplicate edge rejected");
    }
  }
  for (const NodeAttr &a: nodes) {
    if (a.atomic_number < 1 || a.atomic_number > 118) {
      throw DataError("MolGraph: atomic number out of 1-118");
    }
  }
  MolGraph g;
  g.nodes_ = std::move(nodes);
  g.edges_ = std::move(edges);
  g.adj_.assign(static_cast<std::size_t>(n), {});
  g.incident_.assign(static_cast<std::size_t>(n), {});
  for (int e = 0; e < static_cast<int>(g.edges_.size()); ++e) {
    const Edge &ed = g.edges_[static_cast<std::size_t>(e)];
    g.adj_[static_cast<std::size_t>(ed.i)].push_back(ed.j);
    g.adj_[static_cast<std::size_t>(ed.j)].push_back(ed.i);
    g.incident_[static_cast<std::size_t>(ed.i)].push_back(e);
    g.incident_[static_cast<std::size_t>(ed.j)].push_back(e);
  }
  for (int v = 0; v < n; ++v) {
    auto &nb = g.adj_[static_cast<std::size_t>(v)];
    auto &ie = g.incident_[static_cast<std::size_t>(v)];
    std::vector<std::pair<int, int>> order(nb.size());
    for (std::size_t k = 0; k < nb.size(); ++k) {
      order[k] = {nb[k], ie[k]};
    }
    std::sort(order.begin(), order.end());
    for (std::size_t k = 0; k < nb.size(); ++k) {
      nb[k] = order[k].first;
      ie[k] = order[k].second;
    }
  }
  return g;
}

int MolGraph::find_edge(int u, int v) const {
  const auto &nb = adj_[static_cast<std::size_t>(u)];
  const auto it = std::lower_bound(nb.begin(), nb.end(), v);
  if (it == nb.end() || *it != v) {
    return -1;
  }
  return incident_[static_cast<std::size_t>(u)]
                  [static_cast<std::size_t>(it - nb.begin())];
}

std::pair<std::vector<int>, int> MolGraph::components() const {
  const int n = node_count();
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  int count = 0;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0) {
      continue;
    }
    stack.push_back(s);
    comp[static_cast<std::size_t>(s)] = count;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int u: neighbors(v)) {
        if (comp[static_cast<std::size_t>(u)] < 0) {
          comp[static_cast<std::size_t>(u)] = count;
          stack.push_back(u);
        }
      }
    }
    ++count;
  }
  return {std::move(comp), count};
}

AdjacencyView adjacency(const MolGraph &g) {
  const std::size_t n = static_cast<std::size_t>(g.node_count());
  AdjacencyView view;
  view.a = tensorcore::Tensor(n, n);
  view.a_tilde = tensorcore::Tensor(n, n);
  view.degree_tilde.assign(n, 1.0);  // self loop
  for (const Edge &e: g.edges()) {
    view.a.at(static_cast<std::size_t>(e.i), static_cast<std::size_t>(e.j)) = 1.0;
    view.a.at(static_cast<std::size_t>(e.j), static_cast<std::size_t>(e.i)) = 1.0;
    view.degree_tilde[static_cast<std::size_t>(e.i)] += 1.0;
    view.degree_tilde[static_cast<std::size_t>(e.j)] += 1.0;
  }
  view.a_tilde = view.a;
  for (std::size_t v = 0; v < n; ++v) {
    view.a_tilde.at(v, v) = 1.0;
  }
  return view;
}

fragment::Fragment induced_subgraph(const MolGraph &g, std::span<const int> nodes) {
  if (nodes.empty()) {
    throw DataError("induced_subgraph: empty node set");
  }
  std::set<int> node_set;
  for (int v: nodes) {
    if (v < 0 || v >= g.node_count()) {
      throw DataError("induced_subgraph: node index out of range");
    }
    node_set.insert(v);
  }
  fragment::Fragment f;
  f.node_ids.assign(node_set.begin(), node_set.end());
  for (int e = 0; e < g.edge_count(); ++e) {
    const Edge &ed = g.edge(e);
    if (node_set.count(ed.i) != 0 && node_set.count(ed.j) != 0) {
      f.edge_ids.push_back(e);
    }
  }
  return f;
}

std::pair<int, int> Batched::node_range(int k) const {
  const int begin = offsets[static_cast<std::size_t>(k)];
  const int end = k + 1 < graph_count()
                      ? offsets[static_cast<std::size_t>(k) + 1]
                      : graph.node_count();
  return {begin, end};
}

Batched batch_graphs(std::span<const MolGraph> graphs) {
  if (graphs.empty()) {
    throw DataError("batch_graphs: empty input");
  }
  std::vector<NodeAttr> nodes;
  std::vector<Edge> edges;
  std::vector<int> offsets;
  int offset = 0;
  for (const MolGraph &g: graphs) {
    offsets.push_back(offset);
    nodes.insert(nodes.end(), g.nodes().begin(), g.nodes().end());
    for (const Edge &e: g.edges()) {
      edges.push_back(Edge{e.i + offset, e.j + offset, e.attr});
    }
    offset += g.node_count();
  }
  return Batched{MolGraph::create(std::move(nodes), std::move(edges)),
                 std::move(offsets)};
}

namespace {

constexpr std::array<const char *, 119> kSymbols = {
    "?",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na",
    "Mg", "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",
    "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br",
    "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag",
    "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu",
    "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi",
    "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am",
    "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh",
    "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og"};

const std::map<std::string, int> &symbol_index() {
  static const std::map<std::string, int> index = [] {
    std::map<std::string, int> m;
    for (int z = 1; z <= 118; ++z) {
      m[kSymbols[static_cast<std::size_t>(z)]] = z;
    }
    return m;
  }();
  return index;
}

}  // namespace

const std::string &element_symbol(int atomic_number) {
  static const std::array<std::string, 119> symbols = [] {
    std::array<std::string, 119> s;
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = kSymbols[i];
    }
    return s;
  }();
  if (atomic_number < 1 || atomic_number > 118) {
    throw DataError("element_symbol: atomic number out of 1-118");
  }
  return symbols[static_cast<std::size_t>(atomic_number)];
}

int atomic_number_of(const std::string &symbol) {
  const auto &index = symbol_index();
  const auto it = index.find(symbol);
  return it == index.end() ? -1 : it->second;
}

}  // namespace mgm::molgraph
