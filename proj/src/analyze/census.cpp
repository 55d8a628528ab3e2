//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/analyze/census.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

#include "mgm/core/error.hpp"

namespace mgm::analyze {

using molgraph::MolGraph;

namespace {

std::string node_symbol(const MolGraph &g, int v) {
  std::string s = molgraph::element_symbol(g.node(v).atomic_number);
  if (g.node(v).is_aromatic) {
    s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  }
  return s;
}

using CountMap = std::map<std::string, std::int64_t>;

struct LocalCounts {
  CountMap subtrees;
  CountMap atoms;
  std::int64_t nodes = 0;
};

LocalCounts count_range(std::span<const MolGraph> corpus, std::size_t begin,
                        std::size_t end) {
  LocalCounts c;
  for (std::size_t k = begin; k < end; ++k) {
    const MolGraph &g = corpus[k];
    for (int v = 0; v < g.node_count(); ++v) {
      c.subtrees[subtree_key(g, v)] += 1;
      c.atoms[molgraph::element_symbol(g.node(v).atomic_number)] += 1;
      c.nodes += 1;
    }
  }
  return c;
}

std::vector<CensusEntry> sorted_entries(const CountMap &m) {
  std::vector<CensusEntry> out;
  out.reserve(m.size());
  for (const auto &[key, count]: m) {
    out.push_back(CensusEntry{key, count});
  }
  std::sort(out.begin(), out.end(), [](const CensusEntry &a, const CensusEntry &b) {
    if (a.count != b.count) {
      return a.count > b.count;
    }
    return a.key < b.key;
  });
  return out;
}

}  // namespace

std::string subtree_key(const MolGraph &g, int node) {
  std::string key = node_symbol(g, node);
  key.push_back(':');
  std::vector<std::string> nb;
  for (int u: g.neighbors(node)) {
    nb.push_back(node_symbol(g, u));
  }
  std::sort(nb.begin(), nb.end());
  for (const std::string &s: nb) {
    key += s;
  }
  return key;
}


CensusResult subtree_census(std::span<const MolGraph> corpus, int threads) {
  LocalCounts total;
  if (threads <= 1 || corpus.size() < 2) {
    total = count_range(corpus, 0, corpus.size());
  } else {
    const std::size_t nthreads =
        std::min<std::size_t>(static_cast<std::size_t>(threads), corpus.size());
    std::vector<LocalCounts> partial(nthreads);
    std::vector<std::thread> workers;
    const std::size_t chunk = (corpus.size() + nthreads - 1) / nthreads;
    for (std::size_t t = 0; t < nthreads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(corpus.size(), begin + chunk);
      workers.emplace_back([&corpus, &partial, t, begin, end] {
        partial[t] = count_range(corpus, begin, end);
      });
    }
    for (std::thread &w: workers) {
      w.join();
    }
    for (const LocalCounts &p: partial) {  // deterministic merge order
      for (const auto &[k, v]: p.subtrees) {
        total.subtrees[k] += v;
      }
      for (const auto &[k, v]: p.atoms) {
        total.atoms[k] += v;
      }
      total.nodes += p.nodes;
    }
  }
  CensusResult r;
  r.subtrees = sorted_entries(total.subtrees);
  r.atoms = sorted_entries(total.atoms);
  r.total_nodes = total.nodes;
  return r;
}

std::string CensusResult::to_csv() const {
  std::ostringstream os;
  char buf[256];
  os << "# one-hop rooted subtree census (key,count,fraction)\n";
  for (const CensusEntry &e: subtrees) {
    std::snprintf(buf, sizeof(buf), "%s,%lld,%.8f\n", e.key.c_str(),
                  static_cast<long long>(e.count),
                  total_nodes > 0 ? static_cast<double>(e.count) /
                                        static_cast<double>(total_nodes)
                                  : 0.0);
    os << buf;
  }
  os << "# atom type census (key,count,fraction)\n";
  for (const CensusEntry &e: atoms) {
    std::snprintf(buf, sizeof(buf), "%s,%lld,%.8f\n", e.key.c_str(),
                  static_cast<long long>(e.count),
                  total_nodes > 0 ? static_cast<double>(e.count) /
                                        static_cast<double>(total_nodes)
                                  : 0.0);
    os << buf;
  }
  os << "subtree_types," << subtrees.size() << '\n';
  os << "atom_types," << atoms.size() << '\n';
  return os.str();
}

}  // namespace mgm::analyze
