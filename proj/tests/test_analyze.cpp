//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "mgm/analyze/census.hpp"
#include "mgm/analyze/probe.hpp"
#include "mgm/core/error.hpp"
#include "mgm/core/rng.hpp"
#include "mgm/fragment/pattern.hpp"
#include "mgm/molgraph/smiles.hpp"
#include "mgm/nets/nets.hpp"
#include "mgm/pretrain/pretrain.hpp"
#include "mgm/tokenize/tokenize.hpp"

using mgm::DataError;
using mgm::RngStream;
using namespace mgm::analyze;
using mgm::molgraph::MolGraph;
using mgm::molgraph::parse_smiles;
using mgm::nets::AutoencoderParams;
using mgm::nets::ModelConfig;
using mgm::tensorcore::ParamStore;
using mgm::tensorcore::Tensor;
using mgm::tokenize::AtomVocabulary;

namespace {

std::vector<MolGraph> toy_corpus(std::size_t limit = 0) {
  std::ifstream in(MGM_DATA_DIR "/toy_corpus.smi");
  REQUIRE(in.good());
  std::vector<MolGraph> graphs;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') {
      graphs.push_back(parse_smiles(line));
      if (limit > 0 && graphs.size() == limit) {
        break;
      }
    }
  }
  return graphs;
}

/// Second-pass census oracle with its own key construction.
std::map<std::string, long long> oracle_subtree_counts(
    const std::vector<MolGraph> &corpus) {
  std::map<std::string, long long> counts;
  for (const MolGraph &g: corpus) {
    for (int v = 0; v < g.node_count(); ++v) {
      std::string center = mgm::molgraph::element_symbol(g.node(v).atomic_number);
      if (g.node(v).is_aromatic) {
        center[0] = static_cast<char>(
            std::tolower(static_cast<unsigned char>(center[0])));
      }
      std::vector<std::string> nb;
      for (int u: g.neighbors(v)) {
        std::string s = mgm::molgraph::element_symbol(g.node(u).atomic_number);
        if (g.node(u).is_aromatic) {
          s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
        }
        nb.push_back(s);
      }
      std::sort(nb.begin(), nb.end());
      std::string key = center + ":";
      for (const auto &s: nb) {
        key += s;
      }
      counts[key] += 1;
    }
  }
  return counts;
}

}  // namespace

TEST_CASE("subtree keys of CO and benzene") {
  const MolGraph co = parse_smiles("CO");
  CHECK(subtree_key(co, 0) == "C:O");
  CHECK(subtree_key(co, 1) == "O:C");
  const CensusResult census = subtree_census(std::vector<MolGraph>{co});
  CHECK(census.subtree_type_count() == 2);

  const MolGraph benzene = parse_smiles("c1ccccc1");
  for (int v = 0; v < 6; ++v) {
    CHECK(subtree_key(benzene, v) == "c:cc");
  }
  const CensusResult bc = subtree_census(std::vector<MolGraph>{benzene});
  REQUIRE(bc.subtrees.size() == 1);
  CHECK(bc.subtrees[0].key == "c:cc");
  CHECK(bc.subtrees[0].count == 6);
}

TEST_CASE("census matches an independent recount on the toy corpus") {
  const std::vector<MolGraph> corpus = toy_corpus();
  const CensusResult census = subtree_census(corpus);
  const auto oracle = oracle_subtree_counts(corpus);
  REQUIRE(census.subtrees.size() == oracle.size());
  long long census_total = 0;
  for (const auto &e: census.subtrees) {
    REQUIRE(oracle.count(e.key) == 1);
    CHECK(oracle.at(e.key) == e.count);
    census_total += e.count;
  }
  CHECK(census_total == census.total_nodes);
}

TEST_CASE("every node yields exactly one subtree key") {
  for (const MolGraph &g: toy_corpus(30)) {
    long long nodes = 0;
    const CensusResult c = subtree_census(std::vector<MolGraph>{g});
    for (const auto &e: c.subtrees) {
      nodes += e.count;
    }
    CHECK(nodes == g.node_count());
  }
}

TEST_CASE("census is order-independent and thread-count independent") {
  std::vector<MolGraph> corpus = toy_corpus();
  const CensusResult a = subtree_census(corpus, 1);
  RngStream rng(111);
  rng.shuffle(corpus);
  const CensusResult b = subtree_census(corpus, 1);
  const CensusResult c = subtree_census(corpus, 2);
  REQUIRE(a.subtrees.size() == b.subtrees.size());
  for (std::size_t i = 0; i < a.subtrees.size(); ++i) {
    CHECK(a.subtrees[i].key == b.subtrees[i].key);
    CHECK(a.subtrees[i].count == b.subtrees[i].count);
    CHECK(b.subtrees[i].key == c.subtrees[i].key);
    CHECK(b.subtrees[i].count == c.subtrees[i].count);
  }
  CHECK(a.to_csv() == b.to_csv());
}

TEST_CASE("roc_auc rank-sum with ties") {
  // scores: pos {3, 2}, neg {2, 1}; the tie at 2 contributes a half.
  const std::vector<double> scores{3.0, 2.0, 2.0, 1.0};
  const std::vector<int> labels{1, 1, 0, 0};
  CHECK(roc_auc(scores, labels) == doctest::Approx(0.875));
  // Constant scores carry no signal.
  const std::vector<double> flat{1.0, 1.0, 1.0, 1.0};
  CHECK(roc_auc(flat, labels) == doctest::Approx(0.5));
  CHECK_THROWS_AS(roc_auc(scores, std::vector<int>{1, 1, 1, 1}), DataError);
}

TEST_CASE("majority baseline") {
  const std::vector<int> labels{0, 0, 0, 1, 2};
  CHECK(majority_baseline(labels) == doctest::Approx(0.6));
}

TEST_CASE("masked-atom probe freezes the encoder and tracks the baseline") {
  const std::vector<MolGraph> corpus = toy_corpus(40);
  const AtomVocabulary vocab = AtomVocabulary::build(corpus);
  ModelConfig cfg;
  cfg.encoder = mgm::nets::Preset::gts_tiny;
  cfg.decoder = mgm::nets::Preset::linear;
  cfg.dim = 8;
  cfg.out_dim = 8;
  ParamStore store;
  RngStream init(120);
  const AutoencoderParams model =
      AutoencoderParams::create(store, cfg, vocab.embedding_rows(), init);
  // Snapshot all parameters.
  std::vector<Tensor> before;
  for (const auto &p: store) {
    before.push_back(p->value);
  }
  ProbeConfig pc;
  pc.epochs = 300;
  pc.seed = 3;
  const ProbeReport report = probe_masked_atoms(model, vocab, corpus, pc);
  CHECK(report.task == "masked_atom_type");
  CHECK(report.metric_name == "accuracy");
  CHECK(report.metric >= 0.0);
  CHECK(report.metric <= 1.0);
  CHECK(report.train_size > 0);
  CHECK(report.test_size > 0);
  // Frozen-encoder contract: parameters are bit-identical after probing.
  std::size_t idx = 0;
  for (const auto &p: store) {
    CHECK(p->value.identical(before[idx]));
    ++idx;
  }
  // Report text shape.
  const std::string text = report.to_text();
  CHECK(text.find("task: masked_atom_type") != std::string::npos);
  CHECK(text.find("seed: 3") != std::string::npos);
}

TEST_CASE("probe classifier separates linearly separable representations") {
  // Synthetic sanity oracle: one-hot features of the label itself.
  RngStream rng(121);
  const int classes = 3;
  Tensor x(30, 3);
  std::vector<int> labels(30);
  for (std::size_t r = 0; r < 30; ++r) {
    const int cls = static_cast<int>(rng.uniform_below(classes));
    labels[r] = cls;
    x.at(r, static_cast<std::size_t>(cls)) = 1.0;
    x.at(r, (static_cast<std::size_t>(cls) + 1) % 3) = 0.05 * rng.uniform();
  }
  const LinearProbe probe = fit_linear_probe(x, labels, classes, 400, 0.5);
  int correct = 0;
  for (std::size_t r = 0; r < 30; ++r) {
    correct += probe.predict_row(x, r) == labels[r] ? 1 : 0;
  }
  CHECK(correct == 30);
}

TEST_CASE("fg probe labels molecules by pattern presence") {
  const std::vector<MolGraph> corpus = toy_corpus(40);
  const AtomVocabulary vocab = AtomVocabulary::build(corpus);
  ModelConfig cfg;
  cfg.encoder = mgm::nets::Preset::gts_tiny;
  cfg.decoder = mgm::nets::Preset::linear;
  cfg.dim = 8;
  cfg.out_dim = 8;
  ParamStore store;
  RngStream init(122);
  const AutoencoderParams model =
      AutoencoderParams::create(store, cfg, vocab.embedding_rows(), init);
  ProbeConfig pc;
  pc.epochs = 200;
  pc.seed = 4;
  const ProbeReport report = probe_fg(
      model, vocab, corpus, mgm::fragment::default_fg_patterns(), pc);
  CHECK(report.task == "fg_presence");
  CHECK(report.metric_name == "roc_auc");
  CHECK(report.metric >= 0.0);
  CHECK(report.metric <= 1.0);
  // The deviation note about the pattern library must always be present.
  bool found_note = false;
  for (const auto &n: report.notes) {
    found_note = found_note || n.find("pattern library") != std::string::npos;
  }
  CHECK(found_note);
  // Hydroxyl-pattern label source: CO is a positive.
  CHECK_FALSE(mgm::fragment::match_patterns(
                  parse_smiles("CO"),
                  {mgm::fragment::parse_pattern("hydroxyl", "O")})
                  .empty());
}

TEST_CASE("fg probes run against node- and sgt-trained checkpoints") {
  // End-to-end comparison harness: two short pretraining runs, one fg probe
  // each, both reports emitted. No numeric ordering is asserted.
  const std::vector<MolGraph> corpus = toy_corpus(40);
  auto train_and_probe = [&corpus](const std::string &tokenizer) {
    mgm::pretrain::TrainConfig cfg;
    cfg.tokenizer = tokenizer;
    cfg.epochs = 4;
    cfg.batch_size = 16;
    cfg.model.dim = 8;
    cfg.model.encoder = mgm::nets::Preset::gts_tiny;
    cfg.model.decoder = mgm::nets::Preset::linear;
    cfg.seed = 77;
    ParamStore store;
    const auto result = mgm::pretrain::train(corpus, cfg, store, "");
    ModelConfig mc = result.model_cfg;
    const AutoencoderParams model = AutoencoderParams::bind(store, mc);
    ProbeConfig pc;
    pc.epochs = 150;
    pc.seed = 78;
    return probe_fg(model, result.vocab, corpus,
                    mgm::fragment::default_fg_patterns(), pc);
  };
  const ProbeReport node_report = train_and_probe("node");
  const ProbeReport sgt_report = train_and_probe("sgt");
  for (const ProbeReport &r: {node_report, sgt_report}) {
    CHECK(r.metric >= 0.0);
    CHECK(r.metric <= 1.0);
    CHECK_FALSE(r.per_class.empty());
  }
}

TEST_CASE("all-constant representations give chance-level fg probes") {
  const std::vector<MolGraph> corpus = toy_corpus(30);
  const AtomVocabulary vocab = AtomVocabulary::build(corpus);
  ModelConfig cfg;
  cfg.encoder = mgm::nets::Preset::linear;
  cfg.decoder = mgm::nets::Preset::linear;
  cfg.dim = 6;
  cfg.out_dim = 6;
  ParamStore store;
  RngStream init(123);
  const AutoencoderParams model =
      AutoencoderParams::create(store, cfg, vocab.embedding_rows(), init);
  model.embed->value.fill(0.0);  // every representation is the zero vector
  ProbeConfig pc;
  pc.epochs = 50;
  pc.seed = 5;
  const ProbeReport report = probe_fg(
      model, vocab, corpus, mgm::fragment::default_fg_patterns(), pc);
  for (const auto &[name, auc]: report.per_class) {
    CHECK(auc == doctest::Approx(0.5));
  }
}
