//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/fragment/fragmentation.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <functional>
#include <map>
#include <set>

#include "mgm/core/error.hpp"
#include "mgm/core/rng.hpp"

namespace mgm::fragment {

using molgraph::MolGraph;

namespace {

struct CandidateCycle {
  std::vector<int> nodes;  // sorted
  std::vector<int> edges;  // sorted
};

/// Shortest path u -> v avoiding edge `skip`; neighbors visited ascending.
std::vector<int> bfs_path(const MolGraph &g, int u, int v, int skip) {
  std::vector<int> parent(static_cast<std::size_t>(g.node_count()), -2);
  parent[static_cast<std::size_t>(u)] = -1;
  std::deque<int> queue{u};
  while (!queue.empty()) {
    const int x = queue.front();
    queue.pop_front();
    if (x == v) {
      break;
    }
    const auto &nb = g.neighbors(x);
    const auto &ie = g.incident_edges(x);
    for (std::size_t k = 0; k < nb.size(); ++k) {
      if (ie[k] == skip || parent[static_cast<std::size_t>(nb[k])] != -2) {
        continue;
      }
      parent[static_cast<std::size_t>(nb[k])] = x;
      queue.push_back(nb[k]);
    }
  }
  if (parent[static_cast<std::size_t>(v)] == -2) {
    return {};
  }
  std::vector<int> path;
  for (int x = v; x != -1; x = parent[static_cast<std::size_t>(x)]) {
    path.push_back(x);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

CandidateCycle cycle_from_path(const MolGraph &g, const std::vector<int> &path,
                               int closing_edge) {
  CandidateCycle c;
  c.nodes = path;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    c.edges.push_back(g.find_edge(path[k], path[k + 1]));
  }
  c.edges.push_back(closing_edge);
  std::sort(c.nodes.begin(), c.nodes.end());
  std::sort(c.edges.begin(), c.edges.end());
  return c;
}

/// GF(2) edge-incidence vector as packed words.
std::vector<std::uint64_t> incidence(const std::vector<int> &edges,
                                     int edge_count) {
  std::vector<std::uint64_t> bits(
      static_cast<std::size_t>((edge_count + 63) / 64), 0);
  for (int e: edges) {
    bits[static_cast<std::size_t>(e) / 64] |=
        std::uint64_t(1) << (static_cast<std::size_t>(e) % 64);
  }
  return bits;
}

/// Gaussian elimination insert; returns false if dependent.
bool add_to_basis(std::vector<std::vector<std::uint64_t>> &basis,
                  std::vector<int> &pivots, std::vector<std::uint64_t> vec) {
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const int p = pivots[k];
    if (vec[static_cast<std::size_t>(p) / 64] &
        (std::uint64_t(1) << (static_cast<std::size_t>(p) % 64))) {
      for (std::size_t w = 0; w < vec.size(); ++w) {
        vec[w] ^= basis[k][w];
      }
    }
  }
  int pivot = -1;
  for (std::size_t w = 0; w < vec.size() && pivot < 0; ++w) {
    if (vec[w] != 0) {
      for (int b = 0; b < 64; ++b) {
        if (vec[w] & (std::uint64_t(1) << b)) {
          pivot = static_cast<int>(w) * 64 + b;
          break;
        }
      }
    }
  }
  if (pivot < 0) {
    return false;
  }
  basis.push_back(std::move(vec));
  pivots.push_back(pivot);
  return true;
}

}  // namespace

std::vector<Fragment> extract_cycles(const MolGraph &g) {
  const int dim = g.edge_count() - g.node_count() + g.components().second;
  if (dim <= 0) {
    return {};
  }
  std::vector<CandidateCycle> candidates;
  std::set<std::vector<int>> seen_edge_sets;
  for (int e = 0; e < g.edge_count(); ++e) {
    const molgraph::Edge &ed = g.edge(e);
    const std::vector<int> path = bfs_path(g, ed.i, ed.j, e);
    if (path.empty()) {
      continue;  // bridge edge, no cycle through it
    }
    CandidateCycle c = cycle_from_path(g, path, e);
    if (seen_edge_sets.insert(c.edges).second) {
      candidates.push_back(std::move(c));
    }
  }
  // Per-edge shortest cycles can in rare graphs fail to span the space;
  // fundamental cycles of a BFS forest complete it and keep determinism.
  {
    std::vector<int> parent(static_cast<std::size_t>(g.node_count()), -2);
    std::vector<char> tree_edge(static_cast<std::size_t>(g.edge_count()), 0);
    for (int s = 0; s < g.node_count(); ++s) {
      if (parent[static_cast<std::size_t>(s)] != -2) {
        continue;
      }
      parent[static_cast<std::size_t>(s)] = -1;
      std::deque<int> queue{s};
      while (!queue.empty()) {
        const int x = queue.front();
        queue.pop_front();
        const auto &nb = g.neighbors(x);
        const auto &ie = g.incident_edges(x);
        for (std::size_t k = 0; k < nb.size(); ++k) {
          if (parent[static_cast<std::size_t>(nb[k])] == -2) {
            parent[static_cast<std::size_t>(nb[k])] = x;
            tree_edge[static_cast<std::size_t>(ie[k])] = 1;
            queue.push_back(nb[k]);
          }
        }
      }
    }
    for (int e = 0; e < g.edge_count(); ++e) {
      if (tree_edge[static_cast<std::size_t>(e)]) {
        continue;
      }
      const molgraph::Edge &ed = g.edge(e);
      const std::vector<int> path = bfs_path(g, ed.i, ed.j, e);
      if (path.empty()) {
        continue;
      }
      CandidateCycle c = cycle_from_path(g, path, e);
      if (seen_edge_sets.insert(c.edges).second) {
        candidates.push_back(std::move(c));
      }
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const CandidateCycle &a, const CandidateCycle &b) {
                     if (a.nodes.size() != b.nodes.size()) {
                       return a.nodes.size() < b.nodes.size();
                     }
                     return a.nodes < b.nodes;
                   });
  std::vector<std::vector<std::uint64_t>> basis;
  std::vector<int> pivots;
  std::vector<Fragment> out;
  for (const CandidateCycle &c: candidates) {
    if (static_cast<int>(out.size()) == dim) {
      break;
    }
    if (add_to_basis(basis, pivots, incidence(c.edges, g.edge_count()))) {
      Fragment f;
      f.kind = FragmentKind::cycle;
      f.node_ids = c.nodes;
      f.edge_ids = c.edges;
      out.push_back(std::move(f));
    }
  }
  std::sort(out.begin(), out.end(), fragment_order);
  return out;
}

std::vector<Fragment> merge_cycles(const std::vector<Fragment> &cycles) {
  for (const Fragment &f: cycles) {
    if (f.kind != FragmentKind::cycle && f.kind != FragmentKind::merged_cycle) {
      throw DataError("merge_cycles: inputs must be cycle fragments");
    }
    if (f.node_ids.empty()) {
      throw DataError("merge_cycles: empty fragment");
    }
  }
  std::vector<Fragment> work = cycles;
  std::vector<char> merged_flag(work.size(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < work.size() && !changed; ++i) {
      for (std::size_t j = i + 1; j < work.size() && !changed; ++j) {
        std::vector<int> inter;
        std::set_intersection(work[i].node_ids.begin(), work[i].node_ids.end(),
                              work[j].node_ids.begin(), work[j].node_ids.end(),
                              std::back_inserter(inter));
        if (inter.size() > 2) {
          Fragment m;
          m.kind = FragmentKind::merged_cycle;
          std::set_union(work[i].node_ids.begin(), work[i].node_ids.end(),
                         work[j].node_ids.begin(), work[j].node_ids.end(),
                         std::back_inserter(m.node_ids));
          std::set_union(work[i].edge_ids.begin(), work[i].edge_ids.end(),
                         work[j].edge_ids.begin(), work[j].edge_ids.end(),
                         std::back_inserter(m.edge_ids));
          work.erase(work.begin() + static_cast<std::ptrdiff_t>(j));
          work.erase(work.begin() + static_cast<std::ptrdiff_t>(i));
          work.push_back(std::move(m));
          changed = true;
        }
      }
    }
  }
  std::sort(work.begin(), work.end(), fragment_order);
  return work;
}

std::vector<Fragment> remaining_nodes(const MolGraph &g,
                                      const std::vector<Fragment> &covered) {
  std::vector<char> hit(static_cast<std::size_t>(g.node_count()), 0);
  for (const Fragment &f: covered) {
    for (int v: f.node_ids) {
      if (v < 0 || v >= g.node_count()) {
        throw DataError("remaining_nodes: fragment node out of range");
      }
      hit[static_cast<std::size_t>(v)] = 1;
    }
  }
  std::vector<Fragment> out;
  for (int v = 0; v < g.node_count(); ++v) {
    if (!hit[static_cast<std::size_t>(v)]) {
      Fragment f;
      f.kind = FragmentKind::singleton_node;
      f.node_ids = {v};
      out.push_back(std::move(f));
    }
  }
  return out;
}

std::vector<Fragment> remaining_edges(const MolGraph &g,
                                      const std::vector<Fragment> &covered,
                                      bool cc_single_only) {
  std::vector<char> hit(static_cast<std::size_t>(g.edge_count()), 0);
  for (const Fragment &f: covered) {
    for (int e: f.edge_ids) {
      if (e < 0 || e >= g.edge_count()) {
        throw DataError("remaining_edges: fragment edge out of range");
      }
      hit[static_cast<std::size_t>(e)] = 1;
    }
  }
  std::vector<Fragment> out;
  for (int e = 0; e < g.edge_count(); ++e) {
    if (hit[static_cast<std::size_t>(e)]) {
      continue;
    }
    const molgraph::Edge &ed = g.edge(e);
    if (cc_single_only) {
      const auto &ni = g.node(ed.i);
      const auto &nj = g.node(ed.j);
      const bool cc_single = ed.attr.bond_type == molgraph::BondType::single &&
                             ni.atomic_number == 6 && nj.atomic_number == 6 &&
                             !ni.is_aromatic && !nj.is_aromatic;
      if (!cc_single) {
        continue;
      }
    }
    Fragment f;
    f.kind = FragmentKind::single_edge;
    f.node_ids = {std::min(ed.i, ed.j), std::max(ed.i, ed.j)};
    f.edge_ids = {e};
    out.push_back(std::move(f));
  }
  return out;
}

namespace {

/// Connected components of `nodes` using only edges from `edge_ids` whose
/// endpoints are both in `nodes`.
std::vector<std::vector<int>> sub_components(const MolGraph &g,
                                             const std::set<int> &nodes,
                                             const std::vector<int> &edge_ids) {
  std::map<int, std::vector<int>> adj;
  for (int v: nodes) {
    adj[v];
  }
  for (int e: edge_ids) {
    const molgraph::Edge &ed = g.edge(e);
    if (nodes.count(ed.i) != 0 && nodes.count(ed.j) != 0) {
      adj[ed.i].push_back(ed.j);
      adj[ed.j].push_back(ed.i);
    }
  }
  std::set<int> left = nodes;
  std::vector<std::vector<int>> comps;
  while (!left.empty()) {
    std::vector<int> comp;
    std::vector<int> stack{*left.begin()};
    left.erase(left.begin());
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      for (int u: adj[v]) {
        if (left.erase(u) > 0) {
          stack.push_back(u);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

Fragment make_part(const MolGraph &g, const Fragment &parent,
                   const std::vector<int> &nodes, FragmentKind kind) {
  Fragment f;
  f.kind = kind;
  f.node_ids = nodes;
  const std::set<int> node_set(nodes.begin(), nodes.end());
  for (int e: parent.edge_ids) {
    const molgraph::Edge &ed = g.edge(e);
    if (node_set.count(ed.i) != 0 && node_set.count(ed.j) != 0) {
      f.edge_ids.push_back(e);
    }
  }
  f.normalize();
  return f;
}

}  // namespace

std::vector<Fragment> mgssl_refine(const MolGraph &g,
                                   const std::vector<Fragment> &fragments) {
  std::vector<Fragment> out;
  for (const Fragment &frag: fragments) {
    // Cycle nodes of the fragment's own subgraph, via a remapped graph.
    std::map<int, int> to_local;
    std::vector<molgraph::NodeAttr> local_nodes;
    for (int v: frag.node_ids) {
      to_local[v] = static_cast<int>(local_nodes.size());
      local_nodes.push_back(g.node(v));
    }
    std::vector<molgraph::Edge> local_edges;
    for (int e: frag.edge_ids) {
      const molgraph::Edge &ed = g.edge(e);
      local_edges.push_back(
          molgraph::Edge{to_local.at(ed.i), to_local.at(ed.j), ed.attr});
    }
    const MolGraph sub = MolGraph::create(local_nodes, local_edges);
    std::set<int> cycle_nodes;  // parent ids
    for (const Fragment &c: extract_cycles(sub)) {
      for (int lv: c.node_ids) {
        cycle_nodes.insert(frag.node_ids[static_cast<std::size_t>(lv)]);
      }
    }
    if (cycle_nodes.empty()) {
      out.push_back(frag);
      continue;
    }
    std::set<int> non_cycle;
    for (int v: frag.node_ids) {
      if (cycle_nodes.count(v) == 0) {
        non_cycle.insert(v);
      }
    }
    if (non_cycle.empty()) {
      out.push_back(frag);
      continue;
    }
    std::set<int> remainder = cycle_nodes;
    bool split_any = false;
    for (const auto &comp: sub_components(g, non_cycle, frag.edge_ids)) {
      if (comp.size() == 1) {
        out.push_back(make_part(g, frag, comp, FragmentKind::singleton_node));
        split_any = true;
      } else if (comp.size() >= 3) {
        out.push_back(make_part(g, frag, comp, FragmentKind::refined));
        split_any = true;
      } else {
        remainder.insert(comp.begin(), comp.end());
      }
    }
    if (!split_any) {
      out.push_back(frag);
      continue;
    }
    for (const auto &comp: sub_components(g, remainder, frag.edge_ids)) {
      out.push_back(make_part(g, frag, comp, FragmentKind::refined));
    }
  }
  std::sort(out.begin(), out.end(), fragment_order);
  return out;
}

// --- Recipe -----------------------------------------------------------------

namespace {

std::string strip_spaces(const std::string &s) {
  std::string out;
  for (char c: s) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      out.push_back(c);
    }
  }
  return out;
}

std::vector<std::string> split_top(const std::string &s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  int depth = 0;
  for (char c: s) {
    if (c == '(') {
      ++depth;
    } else if (c == ')') {
      --depth;
    }
    if (c == sep && depth == 0) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

}  // namespace

Recipe Recipe::parse(const std::string &spec) {
  return parse(spec, default_fg_patterns(), default_cleavage_table());
}

Recipe Recipe::parse(const std::string &spec,
                     const std::vector<Pattern> &fg_patterns,
                     const CleavageTable &cleavage) {
  std::string text = strip_spaces(spec);
  if (text == "preset:mgssl") {
    text = "brics;mgssl_refine";
  } else if (text == "preset:relmole") {
    text = "union(cycles,fg);remaining_cc_edges;remaining_nodes";
  } else if (text.rfind("preset:", 0) == 0) {
    throw DataError("unknown recipe preset: " + text);
  }
  if (text.empty()) {
    throw DataError("empty fragmentation recipe");
  }
  Recipe r;
  r.canonical_ = text;
  r.fg_patterns_ = fg_patterns;
  r.cleavage_ = cleavage;

  std::function<Step(const std::string &)> parse_step =
      [&](const std::string &tok) -> Step {
    if (tok == "cycles") return Step{StepKind::cycles, {}};
    if (tok == "fg") return Step{StepKind::fg, {}};
    if (tok == "brics") return Step{StepKind::brics, {}};
    if (tok == "merge_cycles") return Step{StepKind::merge_cycles, {}};
    if (tok == "remaining_nodes") return Step{StepKind::remaining_nodes, {}};
    if (tok == "remaining_edges") return Step{StepKind::remaining_edges, {}};
    if (tok == "remaining_cc_edges")
      return Step{StepKind::remaining_cc_edges, {}};
    if (tok == "mgssl_refine") return Step{StepKind::mgssl_refine, {}};
    if (tok.rfind("union(", 0) == 0 && tok.back() == ')') {
      const std::string inner = tok.substr(6, tok.size() - 7);
      Step s{StepKind::union_group, {}};
      for (const std::string &part: split_top(inner, ',')) {
        if (part.empty()) {
          throw DataError("empty member in union(...)");
        }
        Step child = parse_step(part);
        if (child.kind != StepKind::cycles && child.kind != StepKind::fg &&
            child.kind != StepKind::brics &&
            child.kind != StepKind::union_group) {
          throw DataError("union(...) members must be sources: " + part);
        }
        s.children.push_back(std::move(child));
      }
      if (s.children.empty()) {
        throw DataError("empty union(...)");
      }
      return s;
    }
    throw DataError("unknown recipe step: '" + tok + "'");
  };

  for (const std::string &tok: split_top(text, ';')) {
    if (tok.empty()) {
      throw DataError("empty step in recipe");
    }
    r.steps_.push_back(parse_step(tok));
  }
  return r;
}

std::uint64_t Recipe::fingerprint() const {
  return fnv1a(canonical_);
}

std::vector<Fragment> Recipe::run_source(const MolGraph &g,
                                         const Step &s) const {
  switch (s.kind) {
  case StepKind::cycles:
    return extract_cycles(g);
  case StepKind::fg:
    return match_patterns(g, fg_patterns_);
  case StepKind::brics:
    return brics_cleave(g, cleavage_);
  case StepKind::union_group: {
    std::vector<Fragment> all;
    for (const Step &child: s.children) {
      std::vector<Fragment> part = run_source(g, child);
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  default:
    throw DataError("recipe step is not a source");
  }
}

std::vector<Fragment> Recipe::apply(const MolGraph &g) const {
  std::vector<Fragment> frags;
  for (const Step &s: steps_) {
    switch (s.kind) {
    case StepKind::cycles:
    case StepKind::fg:
    case StepKind::brics:
    case StepKind::union_group: {
      std::vector<Fragment> part = run_source(g, s);
      frags.insert(frags.end(), part.begin(), part.end());
      break;
    }
    case StepKind::merge_cycles: {
      std::vector<Fragment> cycles, rest;
      for (Fragment &f: frags) {
        if (f.kind == FragmentKind::cycle ||
            f.kind == FragmentKind::merged_cycle) {
          cycles.push_back(std::move(f));
        } else {
          rest.push_back(std::move(f));
        }
      }
      frags = merge_cycles(cycles);
      frags.insert(frags.end(), std::make_move_iterator(rest.begin()),
                   std::make_move_iterator(rest.end()));
      break;
    }
    case StepKind::remaining_nodes: {
      std::vector<Fragment> extra = remaining_nodes(g, frags);
      frags.insert(frags.end(), std::make_move_iterator(extra.begin()),
                   std::make_move_iterator(extra.end()));
      break;
    }
    case StepKind::remaining_edges:
    case StepKind::remaining_cc_edges: {
      std::vector<Fragment> extra = remaining_edges(
          g, frags, s.kind == StepKind::remaining_cc_edges);
      frags.insert(frags.end(), std::make_move_iterator(extra.begin()),
                   std::make_move_iterator(extra.end()));
      break;
    }
    case StepKind::mgssl_refine:
      frags = mgssl_refine(g, frags);
      break;
    }
  }
  std::sort(frags.begin(), frags.end(), fragment_order);
  return frags;
}

std::vector<Fragment> compose(const MolGraph &g, const Recipe &recipe) {
  return recipe.apply(g);
}

}  // namespace mgm::fragment
