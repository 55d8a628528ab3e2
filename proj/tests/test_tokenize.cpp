//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "mgm/core/error.hpp"
#include "mgm/core/rng.hpp"
#include "mgm/molgraph/smiles.hpp"
#include "mgm/tokenize/tokenize.hpp"
#include "oracles.hpp"

using mgm::DataError;
using mgm::RngStream;
using namespace mgm::tokenize;
using mgm::fragment::Fragment;
using mgm::fragment::FragmentKind;
using mgm::fragment::Recipe;
using mgm::molgraph::MolGraph;
using mgm::molgraph::parse_smiles;

namespace {

/// Oracle: canonical key by brute force over all permutations, using the
/// same serialization definition but an independent code path.
std::string oracle_key(const Fragment &frag, const MolGraph &g) {
  const std::size_t k = frag.node_ids.size();
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::string best;
  auto serialize = [&](const std::vector<int> &order) {
    std::string s;
    for (std::size_t q = 0; q < k; ++q) {
      const int vq = frag.node_ids[static_cast<std::size_t>(order[q])];
      std::string sym =
          mgm::molgraph::element_symbol(g.node(vq).atomic_number);
      if (g.node(vq).is_aromatic) {
        sym[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(sym[0])));
      }
      s += sym;
      s.push_back(',');
      for (std::size_t p = 0; p < q; ++p) {
        const int vp = frag.node_ids[static_cast<std::size_t>(order[p])];
        int code = 0;
        for (int e: frag.edge_ids) {
          const auto &ed = g.edge(e);
          if ((ed.i == vq && ed.j == vp) || (ed.i == vp && ed.j == vq)) {
            code = 1 + static_cast<int>(ed.attr.bond_type);
          }
        }
        s.push_back(static_cast<char>('0' + code));
      }
      s.push_back(';');
    }
    return s;
  };
  do {
    const std::string s = serialize(perm);
    if (best.empty() || s < best) {
      best = s;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Fragment whole_graph_fragment(const MolGraph &g) {
  Fragment f;
  for (int v = 0; v < g.node_count(); ++v) {
    f.node_ids.push_back(v);
  }
  for (int e = 0; e < g.edge_count(); ++e) {
    f.edge_ids.push_back(e);
  }
  return f;
}

}  // namespace

TEST_CASE("node tokenizer uses the corpus atom vocabulary") {
  const std::vector<MolGraph> corpus{parse_smiles("CO"), parse_smiles("CN")};
  const AtomVocabulary vocab = AtomVocabulary::build(corpus);  // C,N,O
  REQUIRE(vocab.atomic_numbers() == std::vector<int>{6, 7, 8});
  const auto tokens = tok_node(parse_smiles("CO"), vocab);
  REQUIRE(tokens.size() == 2);
  CHECK(tokens[0].id == 0);
  CHECK(tokens[1].id == 2);

  CHECK(tok_node(parse_smiles("C"), vocab)[0].id == 0);
  // An element outside the vocabulary maps to UNK.
  CHECK(tok_node(parse_smiles("S"), vocab)[0].id == vocab.unk_id());
}

TEST_CASE("edge tokenizer emits bond types") {
  CHECK(tok_edge(parse_smiles("CO"))[0].id == 0);
  CHECK(tok_edge(parse_smiles("C=O"))[0].id == 1);
  const auto benzene = tok_edge(parse_smiles("c1ccccc1"));
  REQUIRE(benzene.size() == 6);
  for (const auto &t: benzene) {
    CHECK(t.id == 3);
  }
}

TEST_CASE("canonical keys are invariant to node order") {
  // The same triangle written with different atom orders.
  const MolGraph a = parse_smiles("OC1CC1");
  Fragment fa;
  fa.node_ids = {1, 2, 3};
  fa.edge_ids = {1, 2, 3};
  fa.normalize();
  // Node ids differ here: ring first.
  const MolGraph b = parse_smiles("C1CC1O");
  Fragment fb;
  fb.node_ids = {0, 1, 2};
  fb.edge_ids = {0, 1, 2};
  fb.normalize();
  CHECK(canonical_key(fa, a) == canonical_key(fb, b));
  CHECK(canonical_key(fa, a) == oracle_key(fa, a));
}

TEST_CASE("benzene rings from different molecules share one key") {
  const MolGraph benzene = parse_smiles("c1ccccc1");
  const MolGraph toluene = parse_smiles("Cc1ccccc1");
  const Fragment fb = whole_graph_fragment(benzene);
  Fragment ft;
  ft.node_ids = {1, 2, 3, 4, 5, 6};
  for (int e = 0; e < toluene.edge_count(); ++e) {
    const auto &ed = toluene.edge(e);
    if (ed.i != 0 && ed.j != 0) {
      ft.edge_ids.push_back(e);
    }
  }
  CHECK(canonical_key(fb, benzene) == canonical_key(ft, toluene));
}

TEST_CASE("singleton key depends on the element alone") {
  const MolGraph co = parse_smiles("CO");
  Fragment f;
  f.node_ids = {1};
  const MolGraph oc = parse_smiles("OC");
  Fragment g;
  g.node_ids = {0};
  CHECK(canonical_key(f, co) == canonical_key(g, oc));
  CHECK(canonical_key(f, co) == "O,;");
}

TEST_CASE("canonical keys match the permutation oracle on random fragments") {
  RngStream rng(41);
  int done = 0;
  while (done < 200) {
    const MolGraph g = mgm_oracles::random_molgraph(rng, 8);
    const Fragment f = whole_graph_fragment(g);
    const std::string key = canonical_key(f, g);
    CHECK(key == oracle_key(f, g));
    // Relabeling: shuffle node identities by rebuilding the graph.
    std::vector<int> perm(static_cast<std::size_t>(g.node_count()));
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<mgm::molgraph::NodeAttr> nodes(perm.size());
    for (std::size_t v = 0; v < perm.size(); ++v) {
      nodes[static_cast<std::size_t>(perm[v])] = g.node(static_cast<int>(v));
    }
    std::vector<mgm::molgraph::Edge> edges;
    for (const auto &ed: g.edges()) {
      edges.push_back(mgm::molgraph::Edge{perm[static_cast<std::size_t>(ed.i)],
                                          perm[static_cast<std::size_t>(ed.j)],
                                          ed.attr});
    }
    const MolGraph relabeled = MolGraph::create(nodes, edges);
    CHECK(canonical_key(whole_graph_fragment(relabeled), relabeled) == key);
    ++done;
  }
}

TEST_CASE("canonicalization is exact in the branch-and-bound range") {
  // 10-node case: cyclodecane ring written from two different start points.
  const MolGraph ring = parse_smiles("C1CCCCCCCCC1");
  const MolGraph tail = parse_smiles("CC1CCCCCCCCC1");  // same ring + methyl
  Fragment whole = whole_graph_fragment(ring);
  Fragment sub;
  sub.node_ids = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  for (int e = 0; e < tail.edge_count(); ++e) {
    const auto &ed = tail.edge(e);
    if (ed.i != 0 && ed.j != 0) {
      sub.edge_ids.push_back(e);
    }
  }
  CHECK(canonical_key(whole, ring) == canonical_key(sub, tail));
}

TEST_CASE("fragments above twelve nodes are rejected with advice") {
  const MolGraph big = parse_smiles("CCCCCCCCCCCCC");
  CHECK_THROWS_WITH_AS(canonical_key(whole_graph_fragment(big), big),
                       doctest::Contains("threshold"), DataError);
}

TEST_CASE("motif vocabulary applies the frequency threshold") {
  std::vector<MolGraph> corpus{parse_smiles("c1ccccc1"), parse_smiles("c1ccccc1"),
                               parse_smiles("c1ccccc1"), parse_smiles("C1CC1")};
  const Recipe cycles = Recipe::parse("cycles");
  const MotifVocabulary v2 = MotifVocabulary::build(corpus, cycles, 2);
  CHECK(v2.entries().size() == 1);
  CHECK(v2.entries()[0].count == 3);
  CHECK(v2.unk_id() == 1);
  const MotifVocabulary v1 = MotifVocabulary::build(corpus, cycles, 1);
  CHECK(v1.entries().size() == 2);

  CHECK_THROWS_AS(MotifVocabulary::build(corpus, cycles, 0), DataError);
  CHECK_THROWS_AS(
      MotifVocabulary::build(std::vector<MolGraph>{}, cycles, 1), DataError);
}

TEST_CASE("motif counts agree with an independent recount") {
  RngStream rng(43);
  std::vector<MolGraph> corpus;
  for (int i = 0; i < 20; ++i) {
    corpus.push_back(mgm_oracles::random_molgraph(rng, 6));
  }
  const Recipe recipe = Recipe::parse("cycles ; remaining_nodes");
  const MotifVocabulary vocab = MotifVocabulary::build(corpus, recipe, 1);
  // Second pass: recount with the oracle key on raw fragment output.
  std::map<std::string, std::int64_t> counts;
  for (const MolGraph &g: corpus) {
    for (const Fragment &f: recipe.apply(g)) {
      counts[oracle_key(f, g)] += 1;
    }
  }
  REQUIRE(counts.size() == vocab.entries().size());
  for (const auto &e: vocab.entries()) {
    REQUIRE(counts.count(e.key) == 1);
    CHECK(counts.at(e.key) == e.count);
  }
}

TEST_CASE("vocabulary serialization is byte-stable and round-trips") {
  std::vector<MolGraph> corpus{parse_smiles("c1ccccc1"), parse_smiles("C1CC1"),
                               parse_smiles("Cc1ccccc1")};
  const Recipe recipe = Recipe::parse("cycles ; remaining_nodes");
  const MotifVocabulary a = MotifVocabulary::build(corpus, recipe, 1);
  const MotifVocabulary b = MotifVocabulary::build(corpus, recipe, 1);
  CHECK(a.to_text() == b.to_text());
  const MotifVocabulary c = MotifVocabulary::from_text(a.to_text(), "<mem>");
  CHECK(c.to_text() == a.to_text());
  CHECK(c.recipe_fingerprint() == recipe.fingerprint());
}

TEST_CASE("motif tokens map fragments to vocabulary ids") {
  std::vector<MolGraph> corpus{parse_smiles("c1ccccc1"), parse_smiles("c1ccccc1"),
                               parse_smiles("c1ccccc1"), parse_smiles("C1CC1")};
  const Recipe cycles = Recipe::parse("cycles");
  const MotifVocabulary vocab = MotifVocabulary::build(corpus, cycles, 2);
  const auto benzene = tok_motif(parse_smiles("c1ccccc1"), cycles, vocab);
  REQUIRE(benzene.size() == 1);
  CHECK(benzene[0].id == 0);
  const auto cyclopropane = tok_motif(parse_smiles("C1CC1"), cycles, vocab);
  REQUIRE(cyclopropane.size() == 1);
  CHECK(cyclopropane[0].id == vocab.unk_id());

  const Recipe with_rest = Recipe::parse("cycles ; remaining_nodes");
  const MotifVocabulary vocab2 = MotifVocabulary::build(corpus, with_rest, 1);
  const auto toluene = tok_motif(parse_smiles("Cc1ccccc1"), with_rest, vocab2);
  CHECK(toluene.size() == 2);

  // Recipe fingerprint mismatch is an error.
  CHECK_THROWS_AS(tok_motif(parse_smiles("c1ccccc1"), with_rest, vocab),
                  DataError);
}

TEST_CASE("token count equals the fragmentation output for the corpus") {
  RngStream rng(47);
  std::vector<MolGraph> corpus;
  for (int i = 0; i < 15; ++i) {
    corpus.push_back(mgm_oracles::random_molgraph(rng, 7));
  }
  const Recipe recipe = Recipe::parse("cycles ; remaining_nodes");
  const MotifVocabulary vocab = MotifVocabulary::build(corpus, recipe, 1);
  for (const MolGraph &g: corpus) {
    CHECK(tok_motif(g, recipe, vocab).size() == recipe.apply(g).size());
  }
}

TEST_CASE("frozen GNN tokenizer with zero weights emits zero vectors") {
  const std::vector<MolGraph> corpus{parse_smiles("CO")};
  const AtomVocabulary vocab = AtomVocabulary::build(corpus);
  FrozenGnnTokenizer tok;
  tok.layers = 1;
  tok.dim = 3;
  tok.embed = mgm::tensorcore::Tensor(static_cast<std::size_t>(vocab.size()), 3);
  tok.combine_w = {mgm::tensorcore::Tensor(3, 3)};
  const auto tokens = frozen_gnn_tokenize(parse_smiles("CO"), vocab, tok);
  REQUIRE(tokens.size() == 2);
  for (const auto &t: tokens) {
    for (double v: t.vec) {
      CHECK(v == 0.0);
    }
  }
}

TEST_CASE("one-layer frozen GNN equals hand-computed message passing") {
  const std::vector<MolGraph> corpus{parse_smiles("CO")};
  const AtomVocabulary vocab = AtomVocabulary::build(corpus);
  RngStream rng(51);
  const FrozenGnnTokenizer tok = FrozenGnnTokenizer::random(vocab, 1, 2, rng);
  const MolGraph g = parse_smiles("CO");
  const auto tokens = frozen_gnn_tokenize(g, vocab, tok);
  // Direct matrix arithmetic: h_i = ((1+0) e_i + sum_j e_j) W.
  const auto &e = tok.embed;
  const auto &w = tok.combine_w[0];
  const double agg_c[2] = {e.at(0, 0) + e.at(1, 0), e.at(0, 1) + e.at(1, 1)};
  for (std::size_t c = 0; c < 2; ++c) {
    const double expected = agg_c[0] * w.at(0, c) + agg_c[1] * w.at(1, c);
    CHECK(tokens[0].vec[c] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("isomorphic graphs get identical frozen-token multisets") {
  const std::vector<MolGraph> corpus{parse_smiles("CCO"), parse_smiles("OCC")};
  const AtomVocabulary vocab = AtomVocabulary::build(corpus);
  RngStream rng(53);
  const FrozenGnnTokenizer tok = FrozenGnnTokenizer::random(vocab, 2, 3, rng);
  auto sorted_tokens = [&](const MolGraph &g) {
    std::vector<std::vector<double>> vecs;
    for (const auto &t: frozen_gnn_tokenize(g, vocab, tok)) {
      vecs.push_back(t.vec);
    }
    std::sort(vecs.begin(), vecs.end());
    return vecs;
  };
  CHECK(sorted_tokens(parse_smiles("CCO")) == sorted_tokens(parse_smiles("OCC")));
}
