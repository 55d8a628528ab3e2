//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/pretrain/pretrain.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "mgm/core/error.hpp"
#include "mgm/kernels/kernels.hpp"
#include "mgm/molgraph/graph_io.hpp"

namespace mgm::pretrain {

using molgraph::MolGraph;

// --- masking -----------------------------------------------------------------

MaskPlan mask_nodes(const Batched &batch, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw DataError("mask_nodes: ratio must lie in (0, 1)");
  }
  RngStream stream(seed);
  MaskPlan plan;
  plan.ratio = ratio;
  plan.seed = seed;
  for (int g = 0; g < batch.graph_count(); ++g) {
    const auto [begin, end] = batch.node_range(g);
    const int n = end - begin;
    const int count = std::max(
        1, static_cast<int>(std::floor(ratio * static_cast<double>(n) + 0.5)));
    for (int local: stream.sample_without_replacement(n, std::min(count, n))) {
      plan.masked.push_back(begin + local);
    }
  }
  std::sort(plan.masked.begin(), plan.masked.end());
  return plan;
}

std::vector<int> apply_mask_ids(const std::vector<int> &clean_ids,
                                const MaskPlan &plan, int m0_id) {
  std::vector<int> ids = clean_ids;
  for (int v: plan.masked) {
    if (v < 0 || static_cast<std::size_t>(v) >= ids.size()) {
      throw DataError("apply_mask_ids: masked index out of range");
    }
    ids[static_cast<std::size_t>(v)] = m0_id;
  }
  return ids;
}

// --- targets -----------------------------------------------------------------

int TokenSet::target_dim() const {
  switch (kind) {
  case Kind::continuous_nodes:
    return static_cast<int>(values.cols());
  case Kind::discrete_nodes:
  case Kind::discrete_fragments:
    return class_count;
  }
  return 0;
}

TokenizerSpec::Kind TokenizerSpec::kind_from(const std::string &name) {
  if (name == "node") return Kind::node;
  if (name == "motif") return Kind::motif;
  if (name == "sgt") return Kind::sgt;
  if (name == "frozen_gnn") return Kind::frozen_gnn;
  throw DataError("unknown tokenizer: " + name);
}

int TokenizerSpec::out_dim(const tokenize::AtomVocabulary &vocab) const {
  switch (kind) {
  case Kind::node:
    return vocab.size();
  case Kind::motif:
    if (motif_vocab == nullptr) {
      throw DataError("motif tokenizer needs a vocabulary");
    }
    return motif_vocab->size();
  case Kind::sgt:
    return sgt_cfg.layers * sgt_cfg.dim;
  case Kind::frozen_gnn:
    if (frozen == nullptr) {
      throw DataError("frozen_gnn tokenizer needs loaded weights");
    }
    return frozen->dim;
  }
  return 0;
}

TokenSet compute_targets(const Batched &batch,
                         const tokenize::AtomVocabulary &vocab,
                         const TokenizerSpec &spec,
                         const Tensor &embed_snapshot) {
  TokenSet out;
  switch (spec.kind) {
  case TokenizerSpec::Kind::node: {
    out.kind = TokenSet::Kind::discrete_nodes;
    out.ids = vocab.ids_for(batch.graph);
    out.class_count = vocab.size();
    break;
  }
  case TokenizerSpec::Kind::motif: {
    if (spec.recipe == nullptr || spec.motif_vocab == nullptr) {
      throw DataError("motif tokenizer needs a recipe and vocabulary");
    }
    out.kind = TokenSet::Kind::discrete_fragments;
    out.class_count = spec.motif_vocab->size();
    for (tokenize::Token &t:
         tokenize::tok_motif(batch.graph, *spec.recipe, *spec.motif_vocab)) {
      out.ids.push_back(t.id);
      out.fragments.push_back(std::move(t.fragment));
    }
    break;
  }
  case TokenizerSpec::Kind::sgt: {
    out.kind = TokenSet::Kind::continuous_nodes;
    // Tokens come from the clean graph with the current embedding snapshot,
    // never on a tape (Alg. 1's detach).
    sgt::SgtConfig cfg = spec.sgt_cfg;
    cfg.dim = static_cast<int>(embed_snapshot.cols());
    const std::vector<int> ids = vocab.ids_for(batch.graph);
    out.values = sgt::sgt_tokenize(batch.graph, embed_snapshot, ids, cfg).mat;
    break;
  }
  case TokenizerSpec::Kind::frozen_gnn: {
    if (spec.frozen == nullptr) {
      throw DataError("frozen_gnn tokenizer needs loaded weights");
    }
    out.kind = TokenSet::Kind::continuous_nodes;
    const std::vector<tokenize::Token> tokens =
        tokenize::frozen_gnn_tokenize(batch.graph, vocab, *spec.frozen);
    out.values = Tensor(tokens.size(), static_cast<std::size_t>(spec.frozen->dim));
    for (std::size_t r = 0; r < tokens.size(); ++r) {
      std::copy(tokens[r].vec.begin(), tokens[r].vec.end(), out.values.row_ptr(r));
    }
    break;
  }
  }
  return out;
}

// --- loss ---------------------------------------------------------------------

Var reconstruction_loss(Tape &tape, Var z, const TokenSet &targets,
                        const MaskPlan &plan, tensorcore::PoolMode pool) {
  if (plan.masked.empty()) {
    throw DataError("reconstruction_loss: empty mask");
  }
  switch (targets.kind) {
  case TokenSet::Kind::continuous_nodes: {
    Var pred = tape.gather_rows(z, plan.masked);
    Tensor sub(plan.masked.size(), targets.values.cols());
    for (std::size_t r = 0; r < plan.masked.size(); ++r) {
      const auto src = static_cast<std::size_t>(plan.masked[r]);
      std::copy(targets.values.row_ptr(src),
                targets.values.row_ptr(src) + targets.values.cols(),
                sub.row_ptr(r));
    }
    return tape.mse_loss(pred, sub);
  }
  case TokenSet::Kind::discrete_nodes: {
    Var pred = tape.gather_rows(z, plan.masked);
    std::vector<int> ids;
    ids.reserve(plan.masked.size());
    for (int v: plan.masked) {
      ids.push_back(targets.ids[static_cast<std::size_t>(v)]);
    }
    return tape.cross_entropy(pred, ids);
  }
  case TokenSet::Kind::discrete_fragments: {
    std::vector<std::vector<int>> groups;
    std::vector<int> ids;
    for (std::size_t k = 0; k < targets.fragments.size(); ++k) {
      const fragment::Fragment &f = targets.fragments[k];
      const bool contributes = std::any_of(
          plan.masked.begin(), plan.masked.end(),
          [&f](int v) { return f.contains_node(v); });
      if (contributes) {
        groups.push_back(f.node_ids);
        ids.push_back(targets.ids[k]);
      }
    }
    if (groups.empty()) {
      throw DataError(
          "reconstruction_loss: no fragment intersects the mask; use a "
          "recipe that covers all nodes");
    }
    Var pooled = tape.pool_rows(z, groups, pool);
    return tape.cross_entropy(pooled, ids);
  }
  }
  throw DataError("reconstruction_loss: unknown target kind");
}

// --- Adam ----------------------------------------------------------------------

void AdamState::init(const ParamStore &store) {
  step = 0;
  m.clear();
  v.clear();
  for (const auto &p: store) {
    m.emplace_back(p->value.rows(), p->value.cols());
    v.emplace_back(p->value.rows(), p->value.cols());
  }
}

void adam_step(ParamStore &store, AdamState &state, double lr) {
  if (state.m.size() != store.count()) {
    throw DataError("adam_step: state not initialized for this store");
  }
  for (const auto &p: store) {
    if (!p->grad.all_finite()) {
      throw NumericalError("adam_step: non-finite gradient in parameter '" +
                           p->name + "'");
    }
  }
  std::size_t idx = 0;
  state.step += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  idx = 0;
  for (const auto &p: store) {
    Tensor &m = state.m[idx];
    Tensor &v = state.v[idx];
    ++idx;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad.data()[i];
      m.data()[i] = b1 * m.data()[i] + (1.0 - b1) * g;
      v.data()[i] = b2 * v.data()[i] + (1.0 - b2) * g * g;
      const double mhat = m.data()[i] / bc1;
      const double vhat = v.data()[i] / bc2;
      p->value.data()[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

// --- token-prediction accuracy ---------------------------------------------------

int TokenVocab::index_of(std::span<const double> vec) const {
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() == vec.size() &&
        std::equal(vec.begin(), vec.end(), vectors[i].begin())) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

int TokenVocab::nearest(std::span<const double> vec) const {
  int best = -1;
  double best_d = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    double d = 0.0;
    for (std::size_t c = 0; c < vec.size(); ++c) {
      const double u = vec[c] - vectors[i][c];
      d += u * u;
    }
    if (best < 0 || d < best_d) {
      best = static_cast<int>(i);
      best_d = d;
    }
  }
  return best;
}

TokenVocab build_token_vocab(const Batched &batch, const Tensor &node_tokens) {
  if (node_tokens.rows() != static_cast<std::size_t>(batch.graph.node_count())) {
    throw ShapeError("build_token_vocab: token rows != node count");
  }
  // Candidates come one per node and collapse by exact vector equality. For
  // one-layer tokenizers an equal one-hop subtree forces an equal vector, so
  // this is the same vocabulary as enumerating per distinct subtree key;
  // distinct keys may still tokenize identically and merge.
  TokenVocab vocab;
  for (int v = 0; v < batch.graph.node_count(); ++v) {
    std::vector<double> vec(node_tokens.row_ptr(static_cast<std::size_t>(v)),
                            node_tokens.row_ptr(static_cast<std::size_t>(v)) +
                                node_tokens.cols());
    if (vocab.index_of(vec) < 0) {
      vocab.vectors.push_back(std::move(vec));
    }
  }
  if (vocab.vectors.empty()) {
    throw DataError("build_token_vocab: empty vocabulary");
  }
  return vocab;
}

double token_prediction_accuracy(const Tensor &preds,
                                 const std::vector<int> &true_index,
                                 const TokenVocab &vocab) {
  if (vocab.vectors.empty()) {
    throw DataError("token_prediction_accuracy: empty vocabulary");
  }
  if (preds.rows() != true_index.size() || preds.rows() == 0) {
    throw ShapeError("token_prediction_accuracy: shape mismatch");
  }
  int correct = 0;
  for (std::size_t r = 0; r < preds.rows(); ++r) {
    const std::span<const double> row(preds.row_ptr(r), preds.cols());
    if (vocab.nearest(row) == true_index[r]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(preds.rows());
}

// --- training loop -----------------------------------------------------------------

std::string format_metrics_csv(std::span<const EpochMetrics> metrics,
                               bool with_wall) {
  std::ostringstream os;
  os << (with_wall ? "epoch,mean_loss,token_accuracy,wall_ms\n"
                   : "epoch,mean_loss,token_accuracy\n");
  char buf[160];
  for (const EpochMetrics &m: metrics) {
    if (with_wall) {
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.3f\n", m.epoch,
                    m.mean_loss, m.token_accuracy, m.wall_ms);
    } else {
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", m.epoch, m.mean_loss,
                    m.token_accuracy);
    }
    os << buf;
  }
  return os.str();
}

namespace {

struct BatchAccuracy {
  std::int64_t correct = 0;
  std::int64_t total = 0;
};

/// Argmax with lowest-index tie-break.
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

void accumulate_accuracy(const Batched &batch, const Tensor &z_value,
                         const TokenSet &targets, const MaskPlan &plan,
                         BatchAccuracy &acc) {
  switch (targets.kind) {
  case TokenSet::Kind::discrete_nodes: {
    for (int v: plan.masked) {
      const int pred = argmax_row(z_value, static_cast<std::size_t>(v));
      acc.correct += pred == targets.ids[static_cast<std::size_t>(v)] ? 1 : 0;
      acc.total += 1;
    }
    break;
  }
  case TokenSet::Kind::continuous_nodes: {
    const TokenVocab vocab = build_token_vocab(batch, targets.values);
    Tensor preds(plan.masked.size(), z_value.cols());
    std::vector<int> true_idx(plan.masked.size());
    for (std::size_t r = 0; r < plan.masked.size(); ++r) {
      const auto v = static_cast<std::size_t>(plan.masked[r]);
      std::copy(z_value.row_ptr(v), z_value.row_ptr(v) + z_value.cols(),
                preds.row_ptr(r));
      true_idx[r] = vocab.index_of(
          std::span<const double>(targets.values.row_ptr(v), targets.values.cols()));
    }
    for (std::size_t r = 0; r < plan.masked.size(); ++r) {
      const std::span<const double> row(preds.row_ptr(r), preds.cols());
      acc.correct += vocab.nearest(row) == true_idx[r] ? 1 : 0;
      acc.total += 1;
    }
    break;
  }
  case TokenSet::Kind::discrete_fragments: {
    for (std::size_t k = 0; k < targets.fragments.size(); ++k) {
      const fragment::Fragment &f = targets.fragments[k];
      const bool contributes =
          std::any_of(plan.masked.begin(), plan.masked.end(),
                      [&f](int v) { return f.contains_node(v); });
      if (!contributes) {
        continue;
      }
      // Mean-pooled logits over the fragment.
      std::vector<double> pooled(z_value.cols(), 0.0);
      for (int v: f.node_ids) {
        for (std::size_t c = 0; c < z_value.cols(); ++c) {
          pooled[c] += z_value.at(static_cast<std::size_t>(v), c);
        }
      }
      int best = 0;
      for (std::size_t c = 1; c < pooled.size(); ++c) {
        if (pooled[c] > pooled[best]) {
          best = static_cast<int>(c);
        }
      }
      acc.correct += best == targets.ids[k] ? 1 : 0;
      acc.total += 1;
    }
    break;
  }
  }
}

}  // namespace

TrainResult train(std::span<const MolGraph> corpus, const TrainConfig &cfg,
                  ParamStore &store, const std::string &out_dir) {
  if (corpus.empty()) {
    throw DataError("train: empty corpus");
  }
  if (cfg.epochs < 0 || cfg.batch_size < 1) {
    throw DataError("train: epochs must be >= 0 and batch_size >= 1");
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
  }
  TrainResult result;
  result.vocab = tokenize::AtomVocabulary::build(corpus);

  TokenizerSpec spec;
  spec.kind = TokenizerSpec::kind_from(cfg.tokenizer);
  spec.sgt_cfg = cfg.sgt_cfg;
  spec.sgt_cfg.dim = cfg.model.dim;
  std::optional<fragment::Recipe> recipe;
  tokenize::FrozenGnnTokenizer frozen;
  if (spec.kind == TokenizerSpec::Kind::motif) {
    recipe = fragment::Recipe::parse(cfg.motif_recipe);
    result.motif_vocab =
        tokenize::MotifVocabulary::build(corpus, *recipe, cfg.motif_threshold);
    spec.recipe = &*recipe;
    spec.motif_vocab = &*result.motif_vocab;
  } else if (spec.kind == TokenizerSpec::Kind::frozen_gnn) {
    if (cfg.frozen_weights.empty()) {
      throw DataError("train: frozen_gnn tokenizer needs frozen_weights");
    }
    const Checkpoint ck = load_checkpoint(cfg.frozen_weights);
    const Tensor *embed = ck.find("tokenizer.embed");
    if (embed == nullptr) {
      throw DataError("frozen tokenizer checkpoint lacks tokenizer.embed");
    }
    frozen.embed = *embed;
    frozen.dim = static_cast<int>(embed->cols());
    for (int l = 0;; ++l) {
      const Tensor *w = ck.find("tokenizer.layer" + std::to_string(l) + ".w");
      if (w == nullptr) {
        break;
      }
      frozen.combine_w.push_back(*w);
    }
    frozen.layers = static_cast<int>(frozen.combine_w.size());
    if (frozen.layers == 0) {
      throw DataError("frozen tokenizer checkpoint has no layers");
    }
    spec.frozen = &frozen;
  }

  nets::ModelConfig model_cfg = cfg.model;
  model_cfg.out_dim = spec.out_dim(result.vocab);
  result.model_cfg = model_cfg;

  SeedSplitter seeds(cfg.seed);
  RngStream init = seeds.stream("init");
  RngStream mask_stream = seeds.stream("mask");
  RngStream shuffle_stream = seeds.stream("shuffle");

  nets::AutoencoderParams model = nets::AutoencoderParams::create(
      store, model_cfg, result.vocab.embedding_rows(), init);

  AdamState adam;
  adam.init(store);

  auto rng_words = [&]() {
    std::vector<std::uint64_t> words;
    for (std::uint64_t w: mask_stream.state()) {
      words.push_back(w);
    }
    for (std::uint64_t w: shuffle_stream.state()) {
      words.push_back(w);
    }
    return words;
  };
  auto write_checkpoint = [&](const std::string &name, int epoch) {
    if (out_dir.empty()) {
      return;
    }
    CheckpointMeta meta;
    meta.config_fingerprint = cfg.config_fingerprint;
    meta.epoch = epoch;
    meta.rng_state = rng_words();
    save_checkpoint(out_dir + "/" + name, store, meta);
  };

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    shuffle_stream.shuffle(order);
    double loss_sum = 0.0;
    int batch_count = 0;
    BatchAccuracy acc;
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      std::vector<MolGraph> graphs;
      graphs.reserve(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        graphs.push_back(corpus[order[k]]);
      }
      const Batched batch = molgraph::batch_graphs(graphs);
      const std::vector<int> clean_ids = result.vocab.ids_for(batch.graph);
      const MaskPlan plan =
          mask_nodes(batch, cfg.mask_ratio, mask_stream.next_u64());
      const std::vector<int> masked_ids =
          apply_mask_ids(clean_ids, plan, result.vocab.m0_id());
      const TokenSet targets =
          compute_targets(batch, result.vocab, spec, model.embed->value);

      Tape tape;
      nets::EncodeInputs in;
      in.batch = &batch;
      in.input_ids = masked_ids;
      in.masked_nodes = plan.masked;
      Var hidden = nets::encode(tape, model, in, model_cfg.remask);
      Var z = nets::decode(tape, hidden, batch, model);
      Var loss = reconstruction_loss(tape, z, targets, plan, cfg.pool);

      store.zero_all_grads();
      tape.backward(loss);
      adam_step(store, adam, cfg.lr);

      loss_sum += tape.value(loss).scalar_value();
      batch_count += 1;
      accumulate_accuracy(batch, tape.value(z), targets, plan, acc);
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.mean_loss = loss_sum / static_cast<double>(batch_count);
    m.token_accuracy =
        acc.total > 0
            ? static_cast<double>(acc.correct) / static_cast<double>(acc.total)
            : -1.0;
    m.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - epoch_start)
                    .count();
    result.metrics.push_back(m);
    if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
      write_checkpoint("checkpoint_epoch" + std::to_string(epoch) + ".ckpt",
                       epoch);
    }
  }
  write_checkpoint("checkpoint.ckpt", cfg.epochs);
  if (!out_dir.empty()) {
    molgraph::write_file_atomic(out_dir + "/metrics.csv",
                                format_metrics_csv(result.metrics));
  }
  return result;
}

}  // namespace mgm::pretrain
