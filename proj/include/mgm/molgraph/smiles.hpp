//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_MOLGRAPH_SMILES_HPP_
#define MGM_MOLGRAPH_SMILES_HPP_

#include <string_view>

#include "mgm/molgraph/molgraph.hpp"

namespace mgm::molgraph {

// Supported SMILES subset: organic-subset atoms (B C N O P S F Cl Br I),
// aromatic lowercase (b c n o p s), bracket atoms [..] holding an element
// symbol only, bonds - = # :, branches ( ), ring closures 1-9 and %nn.
// Hydrogens are never materialized. Aromatic perception is purely syntactic:
// lowercase atoms set is_aromatic, and an implicit or ring-closure bond
// between two aromatic atoms defaults to the aromatic bond type; every other
// implicit bond is single. Out-of-subset constructs are hard errors.
//
// Throws ParseError with the byte offset of the offending character.
MolGraph parse_smiles(std::string_view text);

}  // namespace mgm::molgraph

#endif  // MGM_MOLGRAPH_SMILES_HPP_
