//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_FRAGMENT_PATTERN_HPP_
#define MGM_FRAGMENT_PATTERN_HPP_

#include <optional>
#include <string>
#include <vector>

#include "mgm/fragment/fragment.hpp"
#include "mgm/molgraph/molgraph.hpp"

namespace mgm::fragment {

// Simplified SMARTS-like pattern grammar (SMILES syntax reused):
//   atoms    - element symbol (uppercase aliphatic, lowercase aromatic),
//              '*' matches any element and any aromaticity,
//              'X' matches a halogen (F, Cl, Br, I);
//   bonds    - '-' '=' '#' ':' for a concrete type, '~' for any type;
//              an implicit bond requires single, or aromatic when both
//              pattern atoms are aromatic (same default rule as SMILES);
//   branches and ring closures as in SMILES. No recursion, charges, or
//   ring-membership predicates.

struct PatternAtom {
  std::optional<int> atomic_number;   // nullopt = wildcard element
  std::optional<bool> aromatic;       // nullopt = wildcard aromaticity
  bool halogen_class = false;         // 'X': any of F, Cl, Br, I
};

struct PatternBond {
  int a = 0;
  int b = 0;
  std::optional<molgraph::BondType> type;  // nullopt = wildcard
};

struct Pattern {
  std::string name;
  std::vector<PatternAtom> atoms;
  std::vector<PatternBond> bonds;
  std::vector<std::vector<int>> adj;  // pattern adjacency (bond indices)

  std::size_t size() const { return atoms.size(); }
};

/// Parses the pattern body (no name). Throws ParseError with byte offset.
Pattern parse_pattern(const std::string &name, const std::string &body);

/// Pattern file: one `name := body` per line, '#' comments ignored.
std::vector<Pattern> load_pattern_file(const std::string &path);
std::vector<Pattern> parse_pattern_lines(const std::string &text,
                                         const std::string &origin);

/// The 12 built-in functional-group patterns.
const std::vector<Pattern> &default_fg_patterns();

/// Every subgraph of g isomorphic to one of the patterns (exhaustive
/// backtracking; wildcards allowed; matches of one pattern deduplicated by
/// node set; overlaps across patterns retained). Patterns over 16 atoms are
/// rejected. Output in (pattern order, fragment_order) sequence.
std::vector<Fragment> match_patterns(const molgraph::MolGraph &g,
                                     const std::vector<Pattern> &patterns);

/// One anchored environment pair per cleavable-bond rule: a bond (i, j) is a
/// cleavage site when one endpoint anchors a left match and the other a right
/// match, with the two matches node-disjoint. The anchor is pattern atom 0.
struct CleavageRule {
  Pattern left;
  Pattern right;
};

struct CleavageTable {
  std::vector<CleavageRule> rules;
};

/// Cleavage file: one `left_pattern | right_pattern` per line.
CleavageTable load_cleavage_file(const std::string &path);
CleavageTable parse_cleavage_lines(const std::string &text,
                                   const std::string &origin);

/// The 4 built-in environment pairs.
const CleavageTable &default_cleavage_table();

/// Edge ids of all cleavage sites in g under the table.
std::vector<int> cleavage_sites(const molgraph::MolGraph &g,
                                const CleavageTable &table);

/// Removes the cleavage-site edges and returns the connected components as
/// fragments (kind = brics_piece), each with all of its internal edges.
std::vector<Fragment> brics_cleave(const molgraph::MolGraph &g,
                                   const CleavageTable &table);

}  // namespace mgm::fragment

#endif  // MGM_FRAGMENT_PATTERN_HPP_
