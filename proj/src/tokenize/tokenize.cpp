//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/tokenize/tokenize.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <set>
#include <sstream>

#include "mgm/core/error.hpp"
#include "mgm/kernels/kernels.hpp"
#include "mgm/molgraph/graph_io.hpp"

namespace mgm::tokenize {

using molgraph::MolGraph;
using tensorcore::Tensor;

// --- AtomVocabulary ---------------------------------------------------------

AtomVocabulary AtomVocabulary::build(std::span<const MolGraph> corpus) {
  if (corpus.empty()) {
    throw DataError("AtomVocabulary: empty corpus");
  }
  std::set<int> zs;
  for (const MolGraph &g: corpus) {
    for (const auto &n: g.nodes()) {
      zs.insert(n.atomic_number);
    }
  }
  AtomVocabulary v;
  v.zs_.assign(zs.begin(), zs.end());
  for (std::size_t i = 0; i < v.zs_.size(); ++i) {
    v.index_[v.zs_[i]] = static_cast<int>(i);
  }
  return v;
}

int AtomVocabulary::id_of(int atomic_number) const {
  const auto it = index_.find(atomic_number);
  return it == index_.end() ? unk_id() : it->second;
}

std::vector<int> AtomVocabulary::ids_for(const MolGraph &g) const {
  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(g.node_count()));
  for (const auto &n: g.nodes()) {
    ids.push_back(id_of(n.atomic_number));
  }
  return ids;
}

// --- node / edge tokenizers ---------------------------------------------------

std::vector<Token> tok_node(const MolGraph &g, const AtomVocabulary &vocab) {
  std::vector<Token> out;
  out.reserve(static_cast<std::size_t>(g.node_count()));
  for (int v = 0; v < g.node_count(); ++v) {
    Token t;
    t.kind = Token::Kind::discrete;
    t.id = vocab.id_of(g.node(v).atomic_number);
    t.fragment.kind = fragment::FragmentKind::singleton_node;
    t.fragment.node_ids = {v};
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Token> tok_edge(const MolGraph &g) {
  std::vector<Token> out;
  out.reserve(static_cast<std::size_t>(g.edge_count()));
  for (int e = 0; e < g.edge_count(); ++e) {
    const molgraph::Edge &ed = g.edge(e);
    Token t;
    t.kind = Token::Kind::discrete;
    t.id = static_cast<int>(ed.attr.bond_type);
    t.fragment.kind = fragment::FragmentKind::single_edge;
    t.fragment.node_ids = {std::min(ed.i, ed.j), std::max(ed.i, ed.j)};
    t.fragment.edge_ids = {e};
    out.push_back(std::move(t));
  }
  return out;
}

// --- MotifVocabulary ---------------------------------------------------------

MotifVocabulary MotifVocabulary::build(std::span<const MolGraph> corpus,
                                       const fragment::Recipe &recipe,
                                       std::int64_t threshold) {
  if (corpus.empty()) {
    throw DataError("MotifVocabulary: empty corpus");
  }
  if (threshold < 1) {
    throw DataError("MotifVocabulary: threshold must be >= 1");
  }
  std::map<std::string, std::int64_t> counts;
  for (const MolGraph &g: corpus) {
    for (const fragment::Fragment &f: recipe.apply(g)) {
      counts[canonical_key(f, g)] += 1;
    }
  }
  MotifVocabulary v;
  v.recipe_fingerprint_ = recipe.fingerprint();
  v.threshold_ = threshold;
  for (const auto &[key, count]: counts) {
    if (count >= threshold) {
      v.entries_.push_back(Entry{key, count});
    }
  }
  std::sort(v.entries_.begin(), v.entries_.end(),
            [](const Entry &a, const Entry &b) {
              if (a.count != b.count) {
                return a.count > b.count;
              }
              return a.key < b.key;
            });
  for (std::size_t i = 0; i < v.entries_.size(); ++i) {
    v.index_[v.entries_[i].key] = static_cast<int>(i);
  }
  return v;
}

int MotifVocabulary::id_of(const std::string &key) const {
  const auto it = index_.find(key);
  return it == index_.end() ? unk_id() : it->second;
}

std::string MotifVocabulary::to_text() const {
  std::ostringstream os;
  char head[128];
  std::snprintf(head, sizeof(head),
                "# motif-vocab fingerprint=%016" PRIx64 " threshold=%" PRId64 "\n",
                recipe_fingerprint_, threshold_);
  os << head;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    os << i << '\t' << entries_[i].count << '\t' << entries_[i].key << '\n';
  }
  return os.str();
}

MotifVocabulary MotifVocabulary::from_text(const std::string &text,
                                           const std::string &origin) {
  MotifVocabulary v;
  std::istringstream is(text);
  std::string line;
  std::size_t ln = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty()) {
      continue;
    }
    if (line[0] == '#') {
      std::uint64_t fp = 0;
      std::int64_t th = 0;
      if (std::sscanf(line.c_str(),
                      "# motif-vocab fingerprint=%" SCNx64 " threshold=%" SCNd64,
                      &fp, &th) == 2) {
        v.recipe_fingerprint_ = fp;
        v.threshold_ = th;
        have_header = true;
      }
      continue;
    }
    std::istringstream ls(line);
    std::size_t idx = 0;
    std::int64_t count = 0;
    std::string key;
    if (!(ls >> idx >> count >> key) || idx != v.entries_.size()) {
      throw DataError(origin + ":" + std::to_string(ln) +
                      ": malformed vocabulary line");
    }
    v.entries_.push_back(Entry{key, count});
    v.index_[key] = static_cast<int>(idx);
  }
  if (!have_header) {
    throw DataError(origin + ": missing motif-vocab header");
  }
  return v;
}

void MotifVocabulary::save(const std::string &path) const {
  molgraph::write_file_atomic(path, to_text());
}

MotifVocabulary MotifVocabulary::load(const std::string &path) {
  return from_text(molgraph::read_file(path), path);
}

std::vector<Token> tok_motif(const MolGraph &g, const fragment::Recipe &recipe,
                             const MotifVocabulary &vocab) {
  if (recipe.fingerprint() != vocab.recipe_fingerprint()) {
    throw DataError(
        "tok_motif: recipe fingerprint does not match the vocabulary's");
  }
  std::vector<Token> out;
  for (fragment::Fragment &f: recipe.apply(g)) {
    Token t;
    t.kind = Token::Kind::discrete;
    t.id = vocab.id_of(canonical_key(f, g));
    t.fragment = std::move(f);
    out.push_back(std::move(t));
  }
  return out;
}

// --- frozen GNN tokenizer -----------------------------------------------------

void FrozenGnnTokenizer::validate(const AtomVocabulary &vocab) const {
  if (layers < 1 || static_cast<std::size_t>(layers) != combine_w.size()) {
    throw ShapeError("FrozenGnnTokenizer: layer count does not match weights");
  }
  if (embed.rows() != static_cast<std::size_t>(vocab.size()) ||
      embed.cols() != static_cast<std::size_t>(dim)) {
    throw ShapeError("FrozenGnnTokenizer: embedding shape mismatch");
  }
  for (const Tensor &w: combine_w) {
    if (w.rows() != static_cast<std::size_t>(dim) ||
        w.cols() != static_cast<std::size_t>(dim)) {
      throw ShapeError("FrozenGnnTokenizer: combine weight shape mismatch");
    }
  }
}

FrozenGnnTokenizer FrozenGnnTokenizer::random(const AtomVocabulary &vocab,
                                              int layers, int dim,
                                              RngStream &init) {
  FrozenGnnTokenizer t;
  t.layers = layers;
  t.dim = dim;
  t.embed = Tensor(static_cast<std::size_t>(vocab.size()),
                   static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < t.embed.size(); ++i) {
    t.embed.data()[i] = 0.1 * init.normal();
  }
  for (int l = 0; l < layers; ++l) {
    Tensor w(static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < w.size(); ++i) {
      w.data()[i] = 0.1 * init.normal();
    }
    t.combine_w.push_back(std::move(w));
  }
  return t;
}

std::vector<Token> frozen_gnn_tokenize(const MolGraph &g,
                                       const AtomVocabulary &vocab,
                                       const FrozenGnnTokenizer &tok) {
  tok.validate(vocab);
  const auto &kt = kernels::active();
  const std::size_t n = static_cast<std::size_t>(g.node_count());
  const std::size_t d = static_cast<std::size_t>(tok.dim);
  Tensor h(n, d);
  const std::vector<int> ids = vocab.ids_for(g);
  for (std::size_t v = 0; v < n; ++v) {
    std::copy(tok.embed.row_ptr(static_cast<std::size_t>(ids[v])),
              tok.embed.row_ptr(static_cast<std::size_t>(ids[v])) + d,
              h.row_ptr(v));
  }
  for (int l = 0; l < tok.layers; ++l) {
    Tensor agg(n, d);
    std::vector<std::vector<double>> messages;
    for (std::size_t v = 0; v < n; ++v) {
      // Neighbor rows summed in value order, self term last, so isomorphic
      // graphs produce bit-identical token multisets.
      const auto &nb = g.neighbors(static_cast<int>(v));
      messages.assign(nb.size(), {});
      for (std::size_t k = 0; k < nb.size(); ++k) {
        messages[k].assign(h.row_ptr(static_cast<std::size_t>(nb[k])),
                           h.row_ptr(static_cast<std::size_t>(nb[k])) + d);
      }
      std::sort(messages.begin(), messages.end());
      for (const auto &msg: messages) {
        kt.accumulate(agg.row_ptr(v), msg.data(), d);
      }
      kt.axpy(agg.row_ptr(v), 1.0 + tok.eps, h.row_ptr(v), d);
    }
    Tensor next(n, d);
    kt.matmul_acc(next.data(), agg.data(), tok.combine_w[static_cast<std::size_t>(l)].data(),
                  n, d, d);
    if (l + 1 < tok.layers) {
      kt.relu(next.data(), next.data(), next.size());
    }
    h = std::move(next);
  }
  std::vector<Token> out;
  out.reserve(n);
  for (std::size_t v = 0; v < n; ++v) {
    Token t;
    t.kind = Token::Kind::continuous;
    t.vec.assign(h.row_ptr(v), h.row_ptr(v) + d);
    t.fragment.kind = fragment::FragmentKind::singleton_node;
    t.fragment.node_ids = {static_cast<int>(v)};
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace mgm::tokenize
