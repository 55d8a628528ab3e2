//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/molgraph/smiles.hpp"

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mgm/core/error.hpp"

namespace mgm::molgraph {

namespace {

struct PendingRing {
  int atom;
  std::optional<BondType> bond;
  std::size_t offset;  // of the ring digit, for error reporting
};

struct ParserState {
  std::vector<NodeAttr> nodes;
  std::vector<Edge> edges;
  int prev = -1;
  std::optional<BondType> pending_bond;
  std::size_t pending_bond_offset = 0;
  std::vector<std::pair<int, std::size_t>> branch_stack;  // (prev, '(' offset)
  std::map<int, PendingRing> open_rings;
};

bool is_organic_upper(char c) {
  switch (c) {
  case 'B':
  case 'C':
  case 'N':
  case 'O':
  case 'P':
  case 'S':
  case 'F':
  case 'I':
    return true;
  default:
    return false;
  }
}

bool is_aromatic_lower(char c) {
  switch (c) {
  case 'b':
  case 'c':
  case 'n':
  case 'o':
  case 'p':
  case 's':
    return true;
  default:
    return false;
  }
}

BondType resolve_bond(const ParserState &st, int a, int b,
                      std::optional<BondType> explicit_bond) {
  if (explicit_bond) {
    return *explicit_bond;
  }
  const bool both_aromatic = st.nodes[static_cast<std::size_t>(a)].is_aromatic &&
                             st.nodes[static_cast<std::size_t>(b)].is_aromatic;
  return both_aromatic ? BondType::aromatic : BondType::single;
}

void add_atom(ParserState &st, std::string_view /*text*/, std::size_t offset,
              int atomic_number, bool aromatic) {
  const int idx = static_cast<int>(st.nodes.size());
  st.nodes.push_back(NodeAttr{atomic_number, Chirality::unspecified, aromatic});
  if (st.prev >= 0) {
    const BondType bt = resolve_bond(st, st.prev, idx, st.pending_bond);
    st.edges.push_back(Edge{st.prev, idx, EdgeAttr{bt}});
  } else if (st.pending_bond) {
    throw ParseError("dangling bond symbol before first atom",
                     st.pending_bond_offset);
  }
  (void)offset;
  st.pending_bond.reset();
  st.prev = idx;
}

void close_or_open_ring(ParserState &st, int digit, std::size_t offset) {
  if (st.prev < 0) {
    throw ParseError("ring-closure digit before any atom", offset);
  }
  auto it = st.open_rings.find(digit);
  if (it == st.open_rings.end()) {
    st.open_rings.emplace(digit,
                          PendingRing{st.prev, st.pending_bond, offset});
    st.pending_bond.reset();
    return;
  }
  const PendingRing open = it->second;
  st.open_rings.erase(it);
  if (open.atom == st.prev) {
    throw ParseError("ring closure bonds an atom to itself", offset);
  }
  std::optional<BondType> bond;
  if (open.bond && st.pending_bond && *open.bond != *st.pending_bond) {
    throw ParseError("conflicting bond symbols on ring closure", offset);
  }
  bond = open.bond ? open.bond : st.pending_bond;
  st.pending_bond.reset();
  for (const Edge &e: st.edges) {
    if ((e.i == open.atom && e.j == st.prev) ||
        (e.j == open.atom && e.i == st.prev)) {
      throw ParseError("ring closure duplicates an existing bond", offset);
    }
  }
  const BondType bt = resolve_bond(st, open.atom, st.prev, bond);
  st.edges.push_back(Edge{open.atom, st.prev, EdgeAttr{bt}});
}

// [Xx] or [x] with an element symbol only (no charge/isotope/H-count).
void parse_bracket_atom(ParserState &st, std::string_view text, std::size_t &i) {
  const std::size_t open = i;
  ++i;  // consume '['
  std::size_t end = i;
  while (end < text.size() && text[end] != ']') {
    ++end;
  }
  if (end == text.size()) {
    throw ParseError("unterminated bracket atom", open);
  }
  const std::string sym(text.substr(i, end - i));
  if (sym.empty()) {
    throw ParseError("empty bracket atom", open);
  }
  bool aromatic = false;
  int z = -1;
  if (std::islower(static_cast<unsigned char>(sym[0]))) {
    std::string upper = sym;
    upper[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(upper[0])));
    // the aromatic-capable subset
    if (sym == "b" || sym == "c" || sym == "n" || sym == "o" || sym == "p" ||
        sym == "s" || sym == "se" || sym == "as") {
      if (sym == "se") upper = "Se";
      if (sym == "as") upper = "As";
      aromatic = true;
      z = atomic_number_of(upper);
    }
  } else {
    z = atomic_number_of(sym);
  }
  if (z < 0) {
    throw ParseError("unknown atom symbol '" + sym + "'", i);
  }
  add_atom(st, text, open, z, aromatic);
  i = end + 1;
}

}  // namespace

MolGraph parse_smiles(std::string_view text) {
  if (text.empty()) {
    throw ParseError("empty SMILES", 0);
  }
  ParserState st;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '-' || c == '=' || c == '#' || c == ':') {
      if (st.pending_bond) {
        throw ParseError("two bond symbols in a row", i);
      }
      switch (c) {
      case '-': st.pending_bond = BondType::single; break;
      case '=': st.pending_bond = BondType::double_bond; break;
      case '#': st.pending_bond = BondType::triple; break;
      default: st.pending_bond = BondType::aromatic; break;
      }
      st.pending_bond_offset = i;
      ++i;
      continue;
    }
    if (c == '(') {
      if (st.prev < 0) {
        throw ParseError("branch opens before any atom", i);
      }
      if (st.pending_bond) {
        throw ParseError("dangling bond symbol before '('", st.pending_bond_offset);
      }
      st.branch_stack.push_back({st.prev, i});
      ++i;
      continue;
    }
    if (c == ')') {
      if (st.branch_stack.empty()) {
        throw ParseError("unbalanced parenthesis", i);
      }
      if (st.pending_bond) {
        throw ParseError("dangling bond symbol before ')'", st.pending_bond_offset);
      }
      st.prev = st.branch_stack.back().first;
      st.branch_stack.pop_back();
      ++i;
      continue;
    }
    if (c >= '1' && c <= '9') {
      close_or_open_ring(st, c - '0', i);
      ++i;
      continue;
    }
    if (c == '%') {
      if (i + 2 >= text.size() ||
          !std::isdigit(static_cast<unsigned char>(text[i + 1])) ||
          !std::isdigit(static_cast<unsigned char>(text[i + 2]))) {
        throw ParseError("'%' ring closure needs two digits", i);
      }
      const int digit = (text[i + 1] - '0') * 10 + (text[i + 2] - '0');
      close_or_open_ring(st, digit, i);
      i += 3;
      continue;
    }
    if (c == '[') {
      parse_bracket_atom(st, text, i);
      continue;
    }
    if (c == 'C' && i + 1 < text.size() && text[i + 1] == 'l') {
      add_atom(st, text, i, 17, false);
      i += 2;
      continue;
    }
    if (c == 'B' && i + 1 < text.size() && text[i + 1] == 'r') {
      add_atom(st, text, i, 35, false);
      i += 2;
      continue;
    }
    if (is_organic_upper(c)) {
      add_atom(st, text, i, atomic_number_of(std::string(1, c)), false);
      ++i;
      continue;
    }
    if (is_aromatic_lower(c)) {
      const std::string upper(1, static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
      add_atom(st, text, i, atomic_number_of(upper), true);
      ++i;
      continue;
    }
    throw ParseError(std::string("unknown atom symbol '") + c + "'", i);
  }
  if (st.pending_bond) {
    throw ParseError("dangling bond symbol at end of input", st.pending_bond_offset);
  }
  if (!st.branch_stack.empty()) {
    throw ParseError("unbalanced parenthesis", st.branch_stack.back().second);
  }
  if (!st.open_rings.empty()) {
    // Report the earliest unclosed digit by byte offset.
    std::size_t first = text.size();
    for (const auto &[digit, ring]: st.open_rings) {
      first = std::min(first, ring.offset);
    }
    throw ParseError("unclosed ring digit", first);
  }
  if (st.nodes.empty()) {
    throw ParseError("no atoms in SMILES", 0);
  }
  return MolGraph::create(std::move(st.nodes), std::move(st.edges));
}

}  // namespace mgm::molgraph
