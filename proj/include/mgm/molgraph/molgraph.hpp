//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_MOLGRAPH_MOLGRAPH_HPP_
#define MGM_MOLGRAPH_MOLGRAPH_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mgm/fragment/fragment.hpp"
#include "mgm/tensorcore/tensor.hpp"

namespace mgm::molgraph {

enum class Chirality : std::uint8_t { unspecified = 0, tet_cw, tet_ccw, other };
enum class BondType : std::uint8_t { single = 0, double_bond, triple, aromatic };

struct NodeAttr {
  int atomic_number = 6;
  Chirality chirality = Chirality::unspecified;
  bool is_aromatic = false;
};

struct EdgeAttr {
  BondType bond_type = BondType::single;
};

struct Edge {
  int i = 0;
  int j = 0;
  EdgeAttr attr;
};

/// Attributed undirected molecular graph. No self-loops, no multi-edges,
/// at least one node, at most kMaxNodes. Immutable after construction.
class MolGraph {
 public:
  static constexpr int kMaxNodes = 1024;

  /// Validates all invariants; throws DataError on violation.
  static MolGraph create(std::vector<NodeAttr> nodes, std::vector<Edge> edges);

  int node_count() const { return static_cast<int>(nodes_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const NodeAttr &node(int v) const { return nodes_[static_cast<std::size_t>(v)]; }
  const Edge &edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
  const std::vector<NodeAttr> &nodes() const { return nodes_; }
  const std::vector<Edge> &edges() const { return edges_; }

  /// Neighbor node ids, ascending.
  const std::vector<int> &neighbors(int v) const {
    return adj_[static_cast<std::size_t>(v)];
  }
  /// Incident edge ids, aligned with neighbors(v).
  const std::vector<int> &incident_edges(int v) const {
    return incident_[static_cast<std::size_t>(v)];
  }
  /// Edge id for the unordered pair (u, v), or -1.
  int find_edge(int u, int v) const;
  int degree(int v) const { return static_cast<int>(adj_[static_cast<std::size_t>(v)].size()); }

  /// Connected components; returns component id per node and the count.
  std::pair<std::vector<int>, int> components() const;

 private:
  MolGraph() = default;

  std::vector<NodeAttr> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
  std::vector<std::vector<int>> incident_;
};

/// Dense adjacency A, self-looped A~ = A + I and its degree diagonal D~.
struct AdjacencyView {
  tensorcore::Tensor a;        // n x n, entries 0/1, zero diagonal
  tensorcore::Tensor a_tilde;  // A + I
  std::vector<double> degree_tilde;
};

AdjacencyView adjacency(const MolGraph &g);

/// Induced subgraph over the given nodes: the fragment holds the requested
/// nodes and every parent edge with both endpoints inside.
fragment::Fragment induced_subgraph(const MolGraph &g, std::span<const int> nodes);

/// Disjoint union with block-diagonal adjacency.
struct Batched {
  MolGraph graph;
  std::vector<int> offsets;  // node offset of each input graph

  int graph_count() const { return static_cast<int>(offsets.size()); }
  /// [begin, end) node range of graph k.
  std::pair<int, int> node_range(int k) const;
};

Batched batch_graphs(std::span<const MolGraph> graphs);

/// Element symbol for an atomic number (1-118); throws DataError otherwise.
const std::string &element_symbol(int atomic_number);
/// Atomic number for a symbol, or -1 if unknown. Case-sensitive, e.g. "Cl".
int atomic_number_of(const std::string &symbol);

}  // namespace mgm::molgraph

#endif  // MGM_MOLGRAPH_MOLGRAPH_HPP_
