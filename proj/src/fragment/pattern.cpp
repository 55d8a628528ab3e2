//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/fragment/pattern.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "mgm/core/error.hpp"
#include "mgm/molgraph/graph_io.hpp"

namespace mgm::fragment {

using molgraph::BondType;
using molgraph::MolGraph;

namespace {

constexpr std::size_t kMaxPatternAtoms = 16;

struct PatternParserState {
  Pattern pat;
  int prev = -1;
  std::optional<std::optional<BondType>> pending;  // outer: bond symbol seen
  std::size_t pending_offset = 0;
  std::vector<int> branch_stack;
  std::map<int, std::pair<int, std::optional<std::optional<BondType>>>> rings;
};

void add_pattern_bond(PatternParserState &st, int a, int b,
                      std::optional<std::optional<BondType>> bond_spec) {
  std::optional<BondType> type;
  if (bond_spec) {
    type = *bond_spec;  // explicit bond or '~' wildcard (nullopt)
  } else {
    const bool both_aromatic =
        st.pat.atoms[static_cast<std::size_t>(a)].aromatic == true &&
        st.pat.atoms[static_cast<std::size_t>(b)].aromatic == true;
    type = both_aromatic ? BondType::aromatic : BondType::single;
  }
  st.pat.bonds.push_back(PatternBond{a, b, type});
}

void add_pattern_atom(PatternParserState &st, PatternAtom atom,
                      std::size_t offset) {
  const int idx = static_cast<int>(st.pat.atoms.size());
  st.pat.atoms.push_back(atom);
  if (st.prev >= 0) {
    add_pattern_bond(st, st.prev, idx, st.pending);
  } else if (st.pending) {
    throw ParseError("dangling bond symbol before first pattern atom",
                     st.pending_offset);
  }
  (void)offset;
  st.pending.reset();
  st.prev = idx;
}

}  // namespace

Pattern parse_pattern(const std::string &name, const std::string &body) {
  if (body.empty()) {
    throw ParseError("empty pattern", 0);
  }
  PatternParserState st;
  st.pat.name = name;
  std::size_t i = 0;
  while (i < body.size()) {
    const char c = body[i];
    if (c == '-' || c == '=' || c == '#' || c == ':' || c == '~') {
      if (st.pending) {
        throw ParseError("two bond symbols in a row", i);
      }
      std::optional<BondType> t;
      switch (c) {
      case '-': t = BondType::single; break;
      case '=': t = BondType::double_bond; break;
      case '#': t = BondType::triple; break;
      case ':': t = BondType::aromatic; break;
      default: t = std::nullopt; break;  // '~'
      }
      st.pending = t;
      st.pending_offset = i;
      ++i;
      continue;
    }
    if (c == '(') {
      if (st.prev < 0) {
        throw ParseError("branch opens before any pattern atom", i);
      }
      st.branch_stack.push_back(st.prev);
      ++i;
      continue;
    }
    if (c == ')') {
      if (st.branch_stack.empty()) {
        throw ParseError("unbalanced parenthesis", i);
      }
      st.prev = st.branch_stack.back();
      st.branch_stack.pop_back();
      ++i;
      continue;
    }
    if (c >= '1' && c <= '9') {
      if (st.prev < 0) {
        throw ParseError("ring digit before any pattern atom", i);
      }
      const int digit = c - '0';
      auto it = st.rings.find(digit);
      if (it == st.rings.end()) {
        st.rings.emplace(digit, std::make_pair(st.prev, st.pending));
        st.pending.reset();
      } else {
        const auto [atom, bond] = it->second;
        st.rings.erase(it);
        add_pattern_bond(st, atom, st.prev, bond ? bond : st.pending);
        st.pending.reset();
      }
      ++i;
      continue;
    }
    if (c == '*') {
      add_pattern_atom(st, PatternAtom{std::nullopt, std::nullopt, false}, i);
      ++i;
      continue;
    }
    if (c == 'X') {
      add_pattern_atom(st, PatternAtom{std::nullopt, false, true}, i);
      ++i;
      continue;
    }
    if (c == 'C' && i + 1 < body.size() && body[i + 1] == 'l') {
      add_pattern_atom(st, PatternAtom{17, false, false}, i);
      i += 2;
      continue;
    }
    if (c == 'B' && i + 1 < body.size() && body[i + 1] == 'r') {
      add_pattern_atom(st, PatternAtom{35, false, false}, i);
      i += 2;
      continue;
    }
    if (std::isupper(static_cast<unsigned char>(c))) {
      const int z = molgraph::atomic_number_of(std::string(1, c));
      if (z < 0) {
        throw ParseError(std::string("unknown pattern atom '") + c + "'", i);
      }
      add_pattern_atom(st, PatternAtom{z, false, false}, i);
      ++i;
      continue;
    }
    if (std::islower(static_cast<unsigned char>(c))) {
      const int z = molgraph::atomic_number_of(
          std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c)))));
      if (z < 0) {
        throw ParseError(std::string("unknown pattern atom '") + c + "'", i);
      }
      add_pattern_atom(st, PatternAtom{z, true, false}, i);
      ++i;
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "' in pattern", i);
  }
  if (st.pending) {
    throw ParseError("dangling bond symbol at end of pattern", st.pending_offset);
  }
  if (!st.branch_stack.empty()) {
    throw ParseError("unbalanced parenthesis in pattern", body.size());
  }
  if (!st.rings.empty()) {
    throw ParseError("unclosed ring digit in pattern", body.size());
  }
  // adjacency + connectivity
  st.pat.adj.assign(st.pat.atoms.size(), {});
  for (int b = 0; b < static_cast<int>(st.pat.bonds.size()); ++b) {
    st.pat.adj[static_cast<std::size_t>(st.pat.bonds[static_cast<std::size_t>(b)].a)].push_back(b);
    st.pat.adj[static_cast<std::size_t>(st.pat.bonds[static_cast<std::size_t>(b)].b)].push_back(b);
  }
  std::vector<char> seen(st.pat.atoms.size(), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int b: st.pat.adj[static_cast<std::size_t>(v)]) {
      const PatternBond &pb = st.pat.bonds[static_cast<std::size_t>(b)];
      const int u = pb.a == v ? pb.b : pb.a;
      if (!seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = 1;
        stack.push_back(u);
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw ParseError("pattern graph must be connected", 0);
  }
  return st.pat;
}

std::vector<Pattern> parse_pattern_lines(const std::string &text,
                                         const std::string &origin) {
  std::vector<Pattern> out;
  std::istringstream is(text);
  std::string line;
  std::size_t ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    const std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') {
      continue;
    }
    const std::size_t sep = line.find(":=");
    if (sep == std::string::npos) {
      throw DataError(origin + ":" + std::to_string(ln) +
                      ": expected 'name := pattern'");
    }
    auto strip = [](std::string s) {
      const std::size_t x = s.find_first_not_of(" \t\r");
      const std::size_t y = s.find_last_not_of(" \t\r");
      return x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
    };
    const std::string name = strip(line.substr(0, sep));
    const std::string body = strip(line.substr(sep + 2));
    if (name.empty() || body.empty()) {
      throw DataError(origin + ":" + std::to_string(ln) +
                      ": empty name or pattern");
    }
    try {
      out.push_back(parse_pattern(name, body));
    } catch (const ParseError &e) {
      throw DataError(origin + ":" + std::to_string(ln) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Pattern> load_pattern_file(const std::string &path) {
  return parse_pattern_lines(molgraph::read_file(path), path);
}

const std::vector<Pattern> &default_fg_patterns() {
  static const std::vector<Pattern> patterns = [] {
    const std::vector<std::pair<const char *, const char *>> defs = {
        {"hydroxyl", "O"},      {"amine", "N"},
        {"amide", "C(=O)N"},    {"carboxyl", "C(=O)O"},
        {"ester", "C(=O)OC"},   {"ether", "COC"},
        {"ketone", "CC(=O)C"},  {"aldehyde", "CC=O"},
        {"nitro", "N(=O)O"},    {"thiol", "S"},
        {"halide", "CX"},       {"nitrile", "C#N"},
    };
    std::vector<Pattern> out;
    out.reserve(defs.size());
    for (const auto &[name, body]: defs) {
      out.push_back(parse_pattern(name, body));
    }
    return out;
  }();
  return patterns;
}

namespace {

bool atom_matches(const PatternAtom &pa, const molgraph::NodeAttr &na) {
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
}

bool bond_matches(const PatternBond &pb, const molgraph::EdgeAttr &ea) {
  return !pb.type || *pb.type == ea.bond_type;
}

struct Match {
  std::vector<int> node_of_atom;  // pattern atom -> graph node
  std::vector<int> edge_of_bond;  // pattern bond -> graph edge
};

/// DFS order where each atom after the first touches an earlier atom.
std::vector<int> match_order(const Pattern &p) {
  std::vector<int> order{0};
  std::vector<char> placed(p.size(), 0);
  placed[0] = 1;
  while (order.size() < p.size()) {
    bool grew = false;
    for (std::size_t k = 0; k < order.size() && !grew; ++k) {
      for (int b: p.adj[static_cast<std::size_t>(order[k])]) {
        const PatternBond &pb = p.bonds[static_cast<std::size_t>(b)];
        const int u = placed[static_cast<std::size_t>(pb.a)] ? pb.b : pb.a;
        if (!placed[static_cast<std::size_t>(u)]) {
          placed[static_cast<std::size_t>(u)] = 1;
          order.push_back(u);
          grew = true;
          break;
        }
      }
    }
    if (!grew) {
      break;  // unreachable for connected patterns
    }
  }
  return order;
}

void extend(const MolGraph &g, const Pattern &p, const std::vector<int> &order,
            std::size_t depth, std::vector<int> &map, std::vector<char> &used,
            std::vector<Match> &found) {
  if (depth == order.size()) {
    Match m;
    m.node_of_atom = map;
    m.edge_of_bond.reserve(p.bonds.size());
    for (const PatternBond &pb: p.bonds) {
      m.edge_of_bond.push_back(
          g.find_edge(map[static_cast<std::size_t>(pb.a)],
                      map[static_cast<std::size_t>(pb.b)]));
    }
    found.push_back(std::move(m));
    return;
  }
  const int atom = order[depth];
  // A mapped neighbor constrains the candidates to its graph neighborhood.
  int anchor_atom = -1, anchor_bond = -1;
  for (int b: p.adj[static_cast<std::size_t>(atom)]) {
    const PatternBond &pb = p.bonds[static_cast<std::size_t>(b)];
    const int other = pb.a == atom ? pb.b : pb.a;
    if (map[static_cast<std::size_t>(other)] >= 0) {
      anchor_atom = other;
      anchor_bond = b;
      break;
    }
  }
  auto try_node = [&](int v) {
    if (used[static_cast<std::size_t>(v)] ||
        !atom_matches(p.atoms[static_cast<std::size_t>(atom)], g.node(v))) {
      return;
    }
    // All pattern bonds into already-mapped atoms must exist and match.
    for (int b: p.adj[static_cast<std::size_t>(atom)]) {
      const PatternBond &pb = p.bonds[static_cast<std::size_t>(b)];
      const int other = pb.a == atom ? pb.b : pb.a;
      const int mapped = map[static_cast<std::size_t>(other)];
      if (mapped < 0) {
        continue;
      }
      const int e = g.find_edge(v, mapped);
      if (e < 0 || !bond_matches(pb, g.edge(e).attr)) {
        return;
      }
    }
    map[static_cast<std::size_t>(atom)] = v;
    used[static_cast<std::size_t>(v)] = 1;
    extend(g, p, order, depth + 1, map, used, found);
    used[static_cast<std::size_t>(v)] = 0;
    map[static_cast<std::size_t>(atom)] = -1;
  };
  if (anchor_atom >= 0) {
    (void)anchor_bond;
    for (int v: g.neighbors(map[static_cast<std::size_t>(anchor_atom)])) {
      try_node(v);
    }
  } else {
    for (int v = 0; v < g.node_count(); ++v) {
      try_node(v);
    }
  }
}

std::vector<Match> all_matches(const MolGraph &g, const Pattern &p) {
  std::vector<Match> found;
  if (p.size() == 0 || p.size() > static_cast<std::size_t>(g.node_count())) {
    return found;
  }
  const std::vector<int> order = match_order(p);
  std::vector<int> map(p.size(), -1);
  std::vector<char> used(static_cast<std::size_t>(g.node_count()), 0);
  extend(g, p, order, 0, map, used, found);
  return found;
}

}  // namespace

std::vector<Fragment> match_patterns(const MolGraph &g,
                                     const std::vector<Pattern> &patterns) {
  std::vector<Fragment> out;
  for (const Pattern &p: patterns) {
    if (p.size() > kMaxPatternAtoms) {
      throw DataError("pattern '" + p.name + "' exceeds the 16-atom limit");
    }
    std::set<std::vector<int>> seen_node_sets;
    std::vector<Fragment> per_pattern;
    for (const Match &m: all_matches(g, p)) {
      std::vector<int> nodes = m.node_of_atom;
      std::sort(nodes.begin(), nodes.end());
      if (!seen_node_sets.insert(nodes).second) {
        continue;  // duplicate node set of the same pattern
      }
      Fragment f;
      f.kind = FragmentKind::fg;
      f.node_ids = std::move(nodes);
      f.edge_ids = m.edge_of_bond;
      f.normalize();
      per_pattern.push_back(std::move(f));
    }
    std::sort(per_pattern.begin(), per_pattern.end(), fragment_order);
    out.insert(out.end(), per_pattern.begin(), per_pattern.end());
  }
  return out;
}

CleavageTable parse_cleavage_lines(const std::string &text,
                                   const std::string &origin) {
  CleavageTable table;
  std::istringstream is(text);
  std::string line;
  std::size_t ln = 0;
  while (std::getline(is, line)) {
    ++ln;
    const std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') {
      continue;
    }
    const std::size_t sep = line.find('|');
    if (sep == std::string::npos) {
      throw DataError(origin + ":" + std::to_string(ln) +
                      ": expected 'left_pattern | right_pattern'");
    }
    auto strip = [](std::string s) {
      const std::size_t x = s.find_first_not_of(" \t\r");
      const std::size_t y = s.find_last_not_of(" \t\r");
      return x == std::string::npos ? std::string() : s.substr(x, y - x + 1);
    };
    const std::string left = strip(line.substr(0, sep));
    const std::string right = strip(line.substr(sep + 1));
    if (left.empty() || right.empty()) {
      throw DataError(origin + ":" + std::to_string(ln) +
                      ": empty environment pattern");
    }
    try {
      table.rules.push_back(CleavageRule{parse_pattern("left", left),
                                         parse_pattern("right", right)});
    } catch (const ParseError &e) {
      throw DataError(origin + ":" + std::to_string(ln) + ": " + e.what());
    }
  }
  return table;
}

CleavageTable load_cleavage_file(const std::string &path) {
  return parse_cleavage_lines(molgraph::read_file(path), path);
}

const CleavageTable &default_cleavage_table() {
  static const CleavageTable table = parse_cleavage_lines(
      "N(C=O) | c\n"   // amide nitrogen | aromatic carbon
      "O(C=O) | C\n"   // ester oxygen | aliphatic carbon
      "N | C\n"        // amine nitrogen | aliphatic carbon
      "c | C\n",       // aromatic carbon | aliphatic carbon
      "<builtin>");
  return table;
}

namespace {

struct AnchoredMatches {
  // anchor graph node -> node sets of matches anchored there
  std::map<int, std::vector<std::vector<int>>> by_anchor;
};

AnchoredMatches anchored(const MolGraph &g, const Pattern &p) {
  AnchoredMatches am;
  for (const Match &m: all_matches(g, p)) {
    std::vector<int> nodes = m.node_of_atom;
    const int anchor = nodes[0];  // pattern atom 0
    std::sort(nodes.begin(), nodes.end());
    auto &sets = am.by_anchor[anchor];
    if (std::find(sets.begin(), sets.end(), nodes) == sets.end()) {
      sets.push_back(std::move(nodes));
    }
  }
  return am;
}

bool disjoint(const std::vector<int> &a, const std::vector<int> &b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      return false;
    }
    if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return true;
}

bool pair_hits(const AnchoredMatches &left, const AnchoredMatches &right,
               int i, int j) {
  const auto li = left.by_anchor.find(i);
  const auto rj = right.by_anchor.find(j);
  if (li == left.by_anchor.end() || rj == right.by_anchor.end()) {
    return false;
  }
  for (const auto &ls: li->second) {
    for (const auto &rs: rj->second) {
      if (disjoint(ls, rs)) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace

std::vector<int> cleavage_sites(const MolGraph &g, const CleavageTable &table) {
  std::vector<int> sites;
  std::vector<std::pair<AnchoredMatches, AnchoredMatches>> rule_matches;
  rule_matches.reserve(table.rules.size());
  for (const CleavageRule &rule: table.rules) {
    rule_matches.emplace_back(anchored(g, rule.left), anchored(g, rule.right));
  }
  for (int e = 0; e < g.edge_count(); ++e) {
    const molgraph::Edge &ed = g.edge(e);
    bool hit = false;
    for (const auto &[left, right]: rule_matches) {
      if (pair_hits(left, right, ed.i, ed.j) ||
          pair_hits(left, right, ed.j, ed.i)) {
        hit = true;
        break;
      }
    }
    if (hit) {
      sites.push_back(e);
    }
  }
  return sites;
}

std::vector<Fragment> brics_cleave(const MolGraph &g,
                                   const CleavageTable &table) {
  const std::vector<int> sites = cleavage_sites(g, table);
  std::vector<char> cleaved(static_cast<std::size_t>(g.edge_count()), 0);
  for (int e: sites) {
    cleaved[static_cast<std::size_t>(e)] = 1;
  }
  // Components of g minus the cleavage sites.
  const int n = g.node_count();
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  int comp_count = 0;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0) {
      continue;
    }
    comp[static_cast<std::size_t>(s)] = comp_count;
    stack.push_back(s);
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      const auto &nb = g.neighbors(v);
      const auto &ie = g.incident_edges(v);
      for (std::size_t k = 0; k < nb.size(); ++k) {
        if (cleaved[static_cast<std::size_t>(ie[k])]) {
          continue;
        }
        if (comp[static_cast<std::size_t>(nb[k])] < 0) {
          comp[static_cast<std::size_t>(nb[k])] = comp_count;
          stack.push_back(nb[k]);
        }
      }
    }
    ++comp_count;
  }
  std::vector<Fragment> fragments(static_cast<std::size_t>(comp_count));
  for (auto &f: fragments) {
    f.kind = FragmentKind::brics_piece;
  }
  for (int v = 0; v < n; ++v) {
    fragments[static_cast<std::size_t>(comp[static_cast<std::size_t>(v)])]
        .node_ids.push_back(v);
  }
  for (int e = 0; e < g.edge_count(); ++e) {
    if (cleaved[static_cast<std::size_t>(e)]) {
      continue;  // a cleavage site never lands in any fragment
    }
    const molgraph::Edge &ed = g.edge(e);
    fragments[static_cast<std::size_t>(comp[static_cast<std::size_t>(ed.i)])]
        .edge_ids.push_back(e);
  }
  std::sort(fragments.begin(), fragments.end(), fragment_order);
  return fragments;
}

}  // namespace mgm::fragment
