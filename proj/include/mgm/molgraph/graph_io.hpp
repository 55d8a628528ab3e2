//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_MOLGRAPH_GRAPH_IO_HPP_
#define MGM_MOLGRAPH_GRAPH_IO_HPP_

#include <string>
#include <vector>

#include "mgm/molgraph/molgraph.hpp"

namespace mgm::molgraph {

// Two on-disk forms, auto-detected on load:
//  - SMILES corpus: one molecule per line, '#'-prefixed comment lines ignored;
//  - structured graph file: per graph a "graph <n_nodes> <n_edges>" header,
//    then "node <idx> <Z> <chirality:0-3> <aromatic:0|1>" lines, then
//    "edge <i> <j> <bond:0-3>" lines; multiple graphs concatenated.
// The writer's output is canonical, so write(load(f)) is byte-identical for
// structured inputs.

std::vector<MolGraph> load_graph_file(const std::string &path);
void write_graph_file(const std::vector<MolGraph> &graphs,
                      const std::string &path);

std::string format_graph_file(const std::vector<MolGraph> &graphs);
std::vector<MolGraph> parse_graph_file_text(const std::string &text,
                                            const std::string &origin);

/// Writes a file atomically (temp file + rename).
void write_file_atomic(const std::string &path, const std::string &content);
std::string read_file(const std::string &path);

}  // namespace mgm::molgraph

#endif  // MGM_MOLGRAPH_GRAPH_IO_HPP_
