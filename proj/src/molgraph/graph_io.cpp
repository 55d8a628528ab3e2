//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/molgraph/graph_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mgm/core/error.hpp"
#include "mgm/molgraph/smiles.hpp"

namespace mgm::molgraph {

namespace {

std::string trim(const std::string &s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return "";
  }
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_lines(const std::string &text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c: text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) {
    lines.push_back(cur);
  }
  return lines;
}

std::vector<MolGraph> parse_structured(const std::vector<std::string> &lines,
                                       const std::string &origin) {
  std::vector<MolGraph> graphs;
  std::size_t ln = 0;
  auto fail = [&origin](std::size_t line_no, const std::string &msg) -> void {
    throw DataError(origin + ":" + std::to_string(line_no + 1) + ": " + msg);
  };
  while (ln < lines.size()) {
    const std::string line = trim(lines[ln]);
    if (line.empty() || line[0] == '#') {
      ++ln;
      continue;
    }
    std::istringstream header(line);
    std::string tag;
    int n_nodes = 0, n_edges = 0;
    header >> tag >> n_nodes >> n_edges;
    if (tag != "graph" || header.fail() || n_nodes < 1 || n_edges < 0) {
      fail(ln, "expected 'graph <n_nodes> <n_edges>'");
    }
    ++ln;
    std::vector<NodeAttr> nodes(static_cast<std::size_t>(n_nodes));
    for (int k = 0; k < n_nodes; ++k, ++ln) {
      if (ln >= lines.size()) {
        fail(ln, "truncated graph: missing node line");
      }
      std::istringstream is(lines[ln]);
      std::string t;
      int idx = 0, z = 0, chir = 0, arom = 0;
      is >> t >> idx >> z >> chir >> arom;
      if (t != "node" || is.fail() || idx != k || z < 1 || z > 118 ||
          chir < 0 || chir > 3 || (arom != 0 && arom != 1)) {
        fail(ln, "malformed node line");
      }
      nodes[static_cast<std::size_t>(k)] =
          NodeAttr{z, static_cast<Chirality>(chir), arom == 1};
    }
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n_edges));
    for (int k = 0; k < n_edges; ++k, ++ln) {
      if (ln >= lines.size()) {
        fail(ln, "truncated graph: missing edge line");
      }
      std::istringstream is(lines[ln]);
      std::string t;
      int i = 0, j = 0, bond = 0;
      is >> t >> i >> j >> bond;
      if (t != "edge" || is.fail() || bond < 0 || bond > 3) {
        fail(ln, "malformed edge line");
      }
      edges.push_back(Edge{i, j, EdgeAttr{static_cast<BondType>(bond)}});
    }
    try {
      graphs.push_back(MolGraph::create(std::move(nodes), std::move(edges)));
    } catch (const DataError &e) {
      fail(ln - 1, e.what());
    }
  }
  return graphs;
}

std::vector<MolGraph> parse_smiles_lines(const std::vector<std::string> &lines,
                                         const std::string &origin) {
  std::vector<MolGraph> graphs;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string line = trim(lines[ln]);
    if (line.empty() || line[0] == '#') {
      continue;
    }
    // A trailing name field after whitespace is permitted and ignored.
    const std::size_t ws = line.find_first_of(" \t");
    const std::string smiles = ws == std::string::npos ? line : line.substr(0, ws);
    try {
      graphs.push_back(parse_smiles(smiles));
    } catch (const ParseError &e) {
      throw DataError(origin + ":" + std::to_string(ln + 1) + ": " + e.what());
    }
  }
  return graphs;
}

}  // namespace

std::vector<MolGraph> parse_graph_file_text(const std::string &text,
                                            const std::string &origin) {
  const std::vector<std::string> lines = split_lines(text);
  for (const std::string &raw: lines) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') {
      continue;
    }
    if (line.rfind("graph ", 0) == 0) {
      return parse_structured(lines, origin);
    }
    return parse_smiles_lines(lines, origin);
  }
  return {};  // only comments / empty
}

std::vector<MolGraph> load_graph_file(const std::string &path) {
  return parse_graph_file_text(read_file(path), path);
}

std::string format_graph_file(const std::vector<MolGraph> &graphs) {
  std::ostringstream os;
  for (const MolGraph &g: graphs) {
    os << "graph " << g.node_count() << ' ' << g.edge_count() << '\n';
    for (int v = 0; v < g.node_count(); ++v) {
      const NodeAttr &a = g.node(v);
      os << "node " << v << ' ' << a.atomic_number << ' '
         << static_cast<int>(a.chirality) << ' ' << (a.is_aromatic ? 1 : 0)
         << '\n';
    }
    for (int e = 0; e < g.edge_count(); ++e) {
      const Edge &ed = g.edge(e);
      os << "edge " << ed.i << ' ' << ed.j << ' '
         << static_cast<int>(ed.attr.bond_type) << '\n';
    }
  }
  return os.str();
}

void write_graph_file(const std::vector<MolGraph> &graphs,
                      const std::string &path) {
  write_file_atomic(path, format_graph_file(graphs));
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open file: " + path);
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file_atomic(const std::string &path, const std::string &content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw DataError("cannot open file for writing: " + tmp);
    }
    out << content;
    if (!out) {
      throw DataError("write failed: " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw DataError("rename failed: " + tmp + " -> " + path);
  }
}

}  // namespace mgm::molgraph
