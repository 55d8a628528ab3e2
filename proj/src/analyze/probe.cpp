//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/analyze/probe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "mgm/core/error.hpp"
#include "mgm/kernels/kernels.hpp"
#include "mgm/pretrain/pretrain.hpp"

namespace mgm::analyze {

using molgraph::Batched;
using molgraph::MolGraph;
using tensorcore::ParamStore;
using tensorcore::Tape;
using tensorcore::Tensor;
using tensorcore::Var;

namespace {

/// Masked-node hidden representations (remask disabled, the masked atoms
/// keep their own rows) over several independent mask draws, plus the true
/// vocabulary ids.
struct MaskedExamples {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
};

MaskedExamples extract_masked(const nets::AutoencoderParams &model,
                              const tokenize::AtomVocabulary &vocab,
                              std::span<const MolGraph> corpus,
                              const ProbeConfig &cfg) {
  MaskedExamples out;
  const std::size_t dim = static_cast<std::size_t>(model.cfg.dim);
  SeedSplitter seeds(cfg.seed);
  RngStream mask_stream = seeds.stream("probe-mask");
  for (int round = 0; round < std::max(1, cfg.mask_rounds); ++round) {
    for (std::size_t begin = 0; begin < corpus.size();
         begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(
          corpus.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      std::vector<MolGraph> graphs(
          corpus.begin() + static_cast<std::ptrdiff_t>(begin),
          corpus.begin() + static_cast<std::ptrdiff_t>(end));
      const Batched batch = molgraph::batch_graphs(graphs);
      const std::vector<int> clean_ids = vocab.ids_for(batch.graph);
      const pretrain::MaskPlan plan =
          pretrain::mask_nodes(batch, cfg.mask_ratio, mask_stream.next_u64());
      const std::vector<int> input_ids =
          pretrain::apply_mask_ids(clean_ids, plan, vocab.m0_id());
      Tape tape;
      nets::EncodeInputs in;
      in.batch = &batch;
      in.input_ids = input_ids;
      in.masked_nodes = plan.masked;
      Var hidden = nets::encode(tape, model, in, nets::RemaskMode::none);
      const Tensor &h = tape.value(hidden);
      for (int v: plan.masked) {
        out.features.emplace_back(h.row_ptr(static_cast<std::size_t>(v)),
                                  h.row_ptr(static_cast<std::size_t>(v)) + dim);
        out.labels.push_back(clean_ids[static_cast<std::size_t>(v)]);
      }
    }
  }
  return out;
}

/// Mean-pooled encoder outputs of unmasked molecules.
Tensor extract_molecule_reps(const nets::AutoencoderParams &model,
                             const tokenize::AtomVocabulary &vocab,
                             std::span<const MolGraph> corpus,
                             const ProbeConfig &cfg) {
  const std::size_t dim = static_cast<std::size_t>(model.cfg.dim);
  Tensor pooled(corpus.size(), dim);
  std::size_t mol = 0;
  for (std::size_t begin = 0; begin < corpus.size();
       begin += static_cast<std::size_t>(cfg.batch_size)) {
    const std::size_t end = std::min(
        corpus.size(), begin + static_cast<std::size_t>(cfg.batch_size));
    std::vector<MolGraph> graphs(
        corpus.begin() + static_cast<std::ptrdiff_t>(begin),
        corpus.begin() + static_cast<std::ptrdiff_t>(end));
    const Batched batch = molgraph::batch_graphs(graphs);
    Tape tape;
    nets::EncodeInputs in;
    in.batch = &batch;
    in.input_ids = vocab.ids_for(batch.graph);
    Var hidden = nets::encode(tape, model, in, nets::RemaskMode::none);
    const Tensor &h = tape.value(hidden);
    for (int k = 0; k < batch.graph_count(); ++k, ++mol) {
      const auto [b, e] = batch.node_range(k);
      for (int r = b; r < e; ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
          pooled.at(mol, c) += h.at(static_cast<std::size_t>(r), c);
        }
      }
      for (std::size_t c = 0; c < dim; ++c) {
        pooled.at(mol, c) /= static_cast<double>(e - b);
      }
    }
  }
  return pooled;
}

int argmax_row(const Tensor &t, std::size_t r) {
  int best = 0;
  double best_v = t.at(r, 0);
  for (std::size_t c = 1; c < t.cols(); ++c) {
    if (t.at(r, c) > best_v) {
      best_v = t.at(r, c);
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace

Tensor LinearProbe::logits(const Tensor &x) const {
  Tensor out(x.rows(), w.cols());
  const auto &kt = kernels::active();
  kt.matmul_acc(out.data(), x.data(), w.data(), x.rows(), x.cols(), w.cols());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    kt.add(out.row_ptr(r), out.row_ptr(r), b.data(), out.cols());
  }
  return out;
}

int LinearProbe::predict_row(const Tensor &x, std::size_t row) const {
  Tensor one(1, x.cols());
  std::copy(x.row_ptr(row), x.row_ptr(row) + x.cols(), one.data());
  const Tensor l = logits(one);
  return argmax_row(l, 0);
}

LinearProbe fit_linear_probe(const Tensor &x, const std::vector<int> &labels,
                             int classes, int epochs, double lr) {
  ParamStore store;
  tensorcore::Parameter &w =
      store.create("probe.w", Tensor(x.cols(), static_cast<std::size_t>(classes)));
  tensorcore::Parameter &b =
      store.create("probe.b", Tensor(1, static_cast<std::size_t>(classes)));
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Tape tape;
    Var logits = tape.add(tape.matmul(tape.constant(x), tape.param(w)),
                          tape.param(b));
    Var loss = tape.cross_entropy(logits, labels);
    store.zero_all_grads();
    tape.backward(loss);
    for (std::size_t i = 0; i < w.value.size(); ++i) {
      w.value.data()[i] -= lr * w.grad.data()[i];
    }
    for (std::size_t i = 0; i < b.value.size(); ++i) {
      b.value.data()[i] -= lr * b.grad.data()[i];
    }
  }
  return LinearProbe{w.value, b.value};
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw DataError("roc_auc: bad inputs");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  // Midranks for ties.
  std::vector<double> rank(scores.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) {
      ++j;
    }
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      rank[order[k]] = mid;
    }
    i = j + 1;
  }
  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] != 0) {
      rank_sum_pos += rank[k];
      ++n_pos;
    }
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("roc_auc: needs both classes");
  }
  return (rank_sum_pos -
          static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double majority_baseline(std::span<const int> labels) {
  if (labels.empty()) {
    throw DataError("majority_baseline: empty labels");
  }
  std::map<int, std::size_t> counts;
  for (int l: labels) {
    counts[l] += 1;
  }
  std::size_t best = 0;
  for (const auto &[l, c]: counts) {
    best = std::max(best, c);
  }
  return static_cast<double>(best) / static_cast<double>(labels.size());
}

std::string ProbeReport::to_text() const {
  std::ostringstream os;
  os << "task: " << task << '\n';
  os << "metric: " << metric_name << '\n';
  char buf[96];
  std::snprintf(buf, sizeof(buf), "value: %.6f\n", metric);
  os << buf;
  os << "train_size: " << train_size << '\n';
  os << "test_size: " << test_size << '\n';
  os << "seed: " << seed << '\n';
  for (const auto &[name, value]: per_class) {
    std::snprintf(buf, sizeof(buf), "class %s: %.6f\n", name.c_str(), value);
    os << buf;
  }
  for (const std::string &note: notes) {
    os << "note: " << note << '\n';
  }
  return os.str();
}

ProbeReport probe_masked_atoms(const nets::AutoencoderParams &model,
                               const tokenize::AtomVocabulary &vocab,
                               std::span<const MolGraph> corpus,
                               const ProbeConfig &cfg) {
  const MaskedExamples reps = extract_masked(model, vocab, corpus, cfg);
  const std::size_t m = reps.features.size();
  if (m < 4) {
    throw DataError("probe_masked_atoms: corpus too small");
  }
  // Shuffled split of the masked examples.
  SeedSplitter seeds(cfg.seed);
  RngStream split = seeds.stream("probe-split");
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  split.shuffle(order);
  const std::size_t train_n = std::max<std::size_t>(
      1, static_cast<std::size_t>(cfg.train_fraction * static_cast<double>(m)));
  if (train_n >= m) {
    throw DataError("probe_masked_atoms: corpus too small for the split");
  }
  const std::size_t dim = static_cast<std::size_t>(model.cfg.dim);
  const int classes = vocab.size();
  Tensor x_train(train_n, dim), x_test(m - train_n, dim);
  std::vector<int> y_train, y_test;
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t ex = order[k];
    if (k < train_n) {
      std::copy(reps.features[ex].begin(), reps.features[ex].end(),
                x_train.row_ptr(k));
      y_train.push_back(reps.labels[ex]);
    } else {
      std::copy(reps.features[ex].begin(), reps.features[ex].end(),
                x_test.row_ptr(k - train_n));
      y_test.push_back(reps.labels[ex]);
    }
  }
  const LinearProbe clf =
      fit_linear_probe(x_train, y_train, classes, cfg.epochs, cfg.lr);
  const Tensor logits = clf.logits(x_test);
  std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // correct/total
  std::size_t correct = 0;
  for (std::size_t r = 0; r < x_test.rows(); ++r) {
    const int pred = argmax_row(logits, r);
    auto &[c_ok, c_all] = per_class[y_test[r]];
    c_all += 1;
    if (pred == y_test[r]) {
      correct += 1;
      c_ok += 1;
    }
  }
  ProbeReport report;
  report.task = "masked_atom_type";
  report.metric_name = "accuracy";
  report.metric = static_cast<double>(correct) / static_cast<double>(x_test.rows());
  report.train_size = train_n;
  report.test_size = m - train_n;
  report.seed = cfg.seed;
  for (const auto &[cls, counts]: per_class) {
    const std::string name =
        cls < static_cast<int>(vocab.atomic_numbers().size())
            ? molgraph::element_symbol(
                  vocab.atomic_numbers()[static_cast<std::size_t>(cls)])
            : std::string("UNK");
    report.per_class.emplace_back(
        name, static_cast<double>(counts.first) /
                  static_cast<double>(counts.second));
  }
  report.notes.push_back("remask disabled during extraction");
  return report;
}

ProbeReport probe_fg(const nets::AutoencoderParams &model,
                     const tokenize::AtomVocabulary &vocab,
                     std::span<const MolGraph> corpus,
                     const std::vector<fragment::Pattern> &patterns,
                     const ProbeConfig &cfg) {
  if (patterns.empty()) {
    throw DataError("probe_fg: no patterns");
  }
  const std::size_t n_mol = corpus.size();
  if (n_mol < 4) {
    throw DataError("probe_fg: corpus too small");
  }
  const std::size_t dim = static_cast<std::size_t>(model.cfg.dim);
  const Tensor pooled = extract_molecule_reps(model, vocab, corpus, cfg);
  SeedSplitter seeds(cfg.seed);
  RngStream split = seeds.stream("probe-split");
  std::vector<std::size_t> order(n_mol);
  std::iota(order.begin(), order.end(), std::size_t{0});
  split.shuffle(order);
  const std::size_t train_n = std::max<std::size_t>(
      2, static_cast<std::size_t>(cfg.train_fraction * static_cast<double>(n_mol)));
  if (train_n >= n_mol) {
    throw DataError("probe_fg: corpus too small for the split");
  }

  ProbeReport report;
  report.task = "fg_presence";
  report.metric_name = "roc_auc";
  report.train_size = train_n;
  report.test_size = n_mol - train_n;
  report.seed = cfg.seed;
  report.notes.push_back(
      "FG labels from the built-in simplified pattern library, not RDKit's 85");

  double auc_sum = 0.0;
  std::size_t auc_count = 0;
  for (const fragment::Pattern &pattern: patterns) {
    std::vector<int> labels(n_mol, 0);
    for (std::size_t k = 0; k < n_mol; ++k) {
      labels[k] =
          fragment::match_patterns(corpus[k], {pattern}).empty() ? 0 : 1;
    }
    // Train labels must contain both classes for the fit to mean anything;
    // the AUC additionally needs both classes in the test split.
    std::vector<int> y_train, y_test;
    Tensor x_train(train_n, dim), x_test(n_mol - train_n, dim);
    for (std::size_t k = 0; k < n_mol; ++k) {
      const std::size_t mol = order[k];
      if (k < train_n) {
        std::copy(pooled.row_ptr(mol), pooled.row_ptr(mol) + dim,
                  x_train.row_ptr(k));
        y_train.push_back(labels[mol]);
      } else {
        std::copy(pooled.row_ptr(mol), pooled.row_ptr(mol) + dim,
                  x_test.row_ptr(k - train_n));
        y_test.push_back(labels[mol]);
      }
    }
    const bool train_ok =
        std::count(y_train.begin(), y_train.end(), 1) > 0 &&
        std::count(y_train.begin(), y_train.end(), 0) > 0;
    const bool test_ok = std::count(y_test.begin(), y_test.end(), 1) > 0 &&
                         std::count(y_test.begin(), y_test.end(), 0) > 0;
    if (!train_ok || !test_ok) {
      report.notes.push_back("pattern '" + pattern.name +
                             "' excluded: missing a class in the split");
      continue;
    }
    const LinearProbe clf =
        fit_linear_probe(x_train, y_train, 2, cfg.epochs, cfg.lr);
    const Tensor logits = clf.logits(x_test);
    std::vector<double> scores(x_test.rows());
    for (std::size_t r = 0; r < x_test.rows(); ++r) {
      scores[r] = logits.at(r, 1) - logits.at(r, 0);
    }
    const double auc = roc_auc(scores, y_test);
    report.per_class.emplace_back(pattern.name, auc);
    auc_sum += auc;
    auc_count += 1;
  }
  if (auc_count == 0) {
    throw DataError("probe_fg: every pattern was excluded");
  }
  report.metric = auc_sum / static_cast<double>(auc_count);
  return report;
}

}  // namespace mgm::analyze
