//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/nets/nets.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mgm/core/error.hpp"
#include "mgm/kernels/kernels.hpp"

namespace mgm::nets {

using molgraph::Batched;
using molgraph::MolGraph;
using tensorcore::PoolMode;
using tensorcore::Tensor;

RemaskMode remask_mode_from(const std::string &name) {
  if (name == "none") return RemaskMode::none;
  if (name == "v1") return RemaskMode::v1;
  if (name == "v2") return RemaskMode::v2;
  throw DataError("unknown remask mode: " + name);
}

Preset preset_from(const std::string &name) {
  if (name == "linear") return Preset::linear;
  if (name == "gine_small") return Preset::gine_small;
  if (name == "gts") return Preset::gts;
  if (name == "gts_small") return Preset::gts_small;
  if (name == "gts_tiny") return Preset::gts_tiny;
  throw DataError("unknown stack preset: " + name);
}

std::string preset_name(Preset p) {
  switch (p) {
  case Preset::linear: return "linear";
  case Preset::gine_small: return "gine_small";
  case Preset::gts: return "gts";
  case Preset::gts_small: return "gts_small";
  case Preset::gts_tiny: return "gts_tiny";
  }
  return "?";
}

StackShape preset_shape(Preset p) {
  switch (p) {
  case Preset::linear: return {0, 0};
  case Preset::gine_small: return {3, 0};
  case Preset::gts: return {5, 4};
  case Preset::gts_small: return {3, 1};
  case Preset::gts_tiny: return {1, 1};
  }
  return {0, 0};
}

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, RngStream &init,
                     double std_dev = 0.1) {
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t.data()[i] = std_dev * init.normal();
  }
  return t;
}

GinLayerParams create_gin_layer(ParamStore &store, const std::string &prefix,
                                int dim, bool edge_features, RngStream &init) {
  const std::size_t d = static_cast<std::size_t>(dim);
  const std::size_t hidden = 2 * d;
  GinLayerParams l;
  l.w1 = &store.create(prefix + ".w1", random_tensor(d, hidden, init));
  l.b1 = &store.create(prefix + ".b1", Tensor(1, hidden));
  l.w2 = &store.create(prefix + ".w2", random_tensor(hidden, d, init));
  l.b2 = &store.create(prefix + ".b2", Tensor(1, d));
  if (edge_features) {
    l.edge_embed = &store.create(prefix + ".edge_embed", random_tensor(4, d, init));
  }
  return l;
}

AttnLayerParams create_attn_layer(ParamStore &store, const std::string &prefix,
                                  int dim, RngStream &init) {
  const std::size_t d = static_cast<std::size_t>(dim);
  const std::size_t ffn = 2 * d;
  AttnLayerParams l;
  l.wq = &store.create(prefix + ".wq", random_tensor(d, d, init));
  l.wk = &store.create(prefix + ".wk", random_tensor(d, d, init));
  l.wv = &store.create(prefix + ".wv", random_tensor(d, d, init));
  l.wo = &store.create(prefix + ".wo", random_tensor(d, d, init));
  l.ln1_g = &store.create(prefix + ".ln1_g", Tensor(1, d, 1.0));
  l.ln1_b = &store.create(prefix + ".ln1_b", Tensor(1, d));
  l.ln2_g = &store.create(prefix + ".ln2_g", Tensor(1, d, 1.0));
  l.ln2_b = &store.create(prefix + ".ln2_b", Tensor(1, d));
  l.ff1_w = &store.create(prefix + ".ff1_w", random_tensor(d, ffn, init));
  l.ff1_b = &store.create(prefix + ".ff1_b", Tensor(1, ffn));
  l.ff2_w = &store.create(prefix + ".ff2_w", random_tensor(ffn, d, init));
  l.ff2_b = &store.create(prefix + ".ff2_b", Tensor(1, d));
  return l;
}

GinLayerParams bind_gin_layer(ParamStore &store, const std::string &prefix,
                              bool edge_features) {
  GinLayerParams l;
  l.w1 = &store.at(prefix + ".w1");
  l.b1 = &store.at(prefix + ".b1");
  l.w2 = &store.at(prefix + ".w2");
  l.b2 = &store.at(prefix + ".b2");
  if (edge_features) {
    l.edge_embed = &store.at(prefix + ".edge_embed");
  }
  return l;
}

AttnLayerParams bind_attn_layer(ParamStore &store, const std::string &prefix) {
  AttnLayerParams l;
  l.wq = &store.at(prefix + ".wq");
  l.wk = &store.at(prefix + ".wk");
  l.wv = &store.at(prefix + ".wv");
  l.wo = &store.at(prefix + ".wo");
  l.ln1_g = &store.at(prefix + ".ln1_g");
  l.ln1_b = &store.at(prefix + ".ln1_b");
  l.ln2_g = &store.at(prefix + ".ln2_g");
  l.ln2_b = &store.at(prefix + ".ln2_b");
  l.ff1_w = &store.at(prefix + ".ff1_w");
  l.ff1_b = &store.at(prefix + ".ff1_b");
  l.ff2_w = &store.at(prefix + ".ff2_w");
  l.ff2_b = &store.at(prefix + ".ff2_b");
  return l;
}

StackParams create_stack(ParamStore &store, const std::string &prefix,
                         Preset preset, int dim, bool edge_features,
                         RngStream &init) {
  StackParams s;
  s.preset = preset;
  const StackShape shape = preset_shape(preset);
  for (int l = 0; l < shape.gin_layers; ++l) {
    s.gin.push_back(create_gin_layer(store, prefix + ".gin" + std::to_string(l),
                                     dim, edge_features, init));
  }
  for (int l = 0; l < shape.attn_layers; ++l) {
    s.attn.push_back(
        create_attn_layer(store, prefix + ".attn" + std::to_string(l), dim, init));
  }
  return s;
}

StackParams bind_stack(ParamStore &store, const std::string &prefix,
                       Preset preset, bool edge_features) {
  StackParams s;
  s.preset = preset;
  const StackShape shape = preset_shape(preset);
  for (int l = 0; l < shape.gin_layers; ++l) {
    s.gin.push_back(
        bind_gin_layer(store, prefix + ".gin" + std::to_string(l), edge_features));
  }
  for (int l = 0; l < shape.attn_layers; ++l) {
    s.attn.push_back(bind_attn_layer(store, prefix + ".attn" + std::to_string(l)));
  }
  return s;
}

}  // namespace

AutoencoderParams AutoencoderParams::create(ParamStore &store,
                                            const ModelConfig &cfg,
                                            int embed_rows, RngStream &init) {
  AutoencoderParams m;
  m.cfg = cfg;
  const std::size_t d = static_cast<std::size_t>(cfg.dim);
  m.embed = &store.create("encoder.embed",
                          random_tensor(static_cast<std::size_t>(embed_rows), d, init));
  m.m1 = &store.create("encoder.m1", random_tensor(1, d, init));
  m.encoder = create_stack(store, "encoder", cfg.encoder, cfg.dim,
                           cfg.edge_features, init);
  m.decoder = create_stack(store, "decoder", cfg.decoder, cfg.dim,
                           cfg.edge_features, init);
  m.out_w = &store.create("decoder.out_w",
                          random_tensor(d, static_cast<std::size_t>(cfg.out_dim), init));
  m.out_b = &store.create("decoder.out_b",
                          Tensor(1, static_cast<std::size_t>(cfg.out_dim)));
  return m;
}

AutoencoderParams AutoencoderParams::bind(ParamStore &store,
                                          const ModelConfig &cfg) {
  AutoencoderParams m;
  m.cfg = cfg;
  m.embed = &store.at("encoder.embed");
  m.m1 = &store.at("encoder.m1");
  m.encoder = bind_stack(store, "encoder", cfg.encoder, cfg.edge_features);
  m.decoder = bind_stack(store, "decoder", cfg.decoder, cfg.edge_features);
  m.out_w = &store.at("decoder.out_w");
  m.out_b = &store.at("decoder.out_b");
  return m;
}

namespace {

/// (1+eps) h_i + sum of neighbor messages, messages sorted by value so the
/// sum is identical under any node relabeling. Messages optionally carry the
/// edge-type embedding.
Var gin_aggregate(Tape &tape, Var h, const MolGraph &g, double eps,
                  Var *edge_embed) {
  const auto &kt = kernels::active();
  const Tensor &vh = tape.value(h);
  const std::size_t n = vh.rows(), d = vh.cols();
  if (n != static_cast<std::size_t>(g.node_count())) {
    throw ShapeError("gin_aggregate: row count != node count");
  }
  const Tensor *ee = edge_embed ? &tape.value(*edge_embed) : nullptr;
  if (ee != nullptr && (ee->rows() != 4 || ee->cols() != d)) {
    throw ShapeError("gin_aggregate: edge embedding must be 4 x dim");
  }
  Tensor out(n, d);
  std::vector<std::vector<double>> messages;
  for (std::size_t i = 0; i < n; ++i) {
    const int vi = static_cast<int>(i);
    const auto &nb = g.neighbors(vi);
    const auto &ie = g.incident_edges(vi);
    messages.assign(nb.size(), {});
    for (std::size_t k = 0; k < nb.size(); ++k) {
      auto &msg = messages[k];
      msg.assign(vh.row_ptr(static_cast<std::size_t>(nb[k])),
                 vh.row_ptr(static_cast<std::size_t>(nb[k])) + d);
      if (ee != nullptr) {
        const auto bond = static_cast<std::size_t>(
            g.edge(ie[k]).attr.bond_type);
        kt.accumulate(msg.data(), ee->row_ptr(bond), d);
      }
    }
    std::sort(messages.begin(), messages.end());
    double *orow = out.row_ptr(i);
    for (const auto &msg: messages) {
      kt.accumulate(orow, msg.data(), d);
    }
    kt.axpy(orow, 1.0 + eps, vh.row_ptr(i), d);
  }
  std::vector<Var> inputs{h};
  if (edge_embed != nullptr) {
    inputs.push_back(*edge_embed);
  }
  const MolGraph *graph = &g;
  const bool has_ee = edge_embed != nullptr;
  return tape.custom_op(
      "gin_aggregate", inputs, std::move(out),
      [graph, eps, has_ee, n, d, &kt](const Tensor &go,
                                      std::vector<Tensor *> &grads) {
        Tensor &gh = *grads[0];
        for (std::size_t i = 0; i < n; ++i) {
          const int vi = static_cast<int>(i);
          kt.axpy(gh.row_ptr(i), 1.0 + eps, go.row_ptr(i), d);
          const auto &nb = graph->neighbors(vi);
          const auto &ie = graph->incident_edges(vi);
          for (std::size_t k = 0; k < nb.size(); ++k) {
            kt.accumulate(gh.row_ptr(static_cast<std::size_t>(nb[k])),
                          go.row_ptr(i), d);
            if (has_ee) {
              const auto bond = static_cast<std::size_t>(
                  graph->edge(ie[k]).attr.bond_type);
              kt.accumulate(grads[1]->row_ptr(bond), go.row_ptr(i), d);
            }
          }
        }
      });
}

}  // namespace

Var gin_forward(Tape &tape, Var h, const MolGraph &g,
                const GinLayerParams &layer, double eps, bool edge_features) {
  Var ee;
  Var *ee_ptr = nullptr;
  if (edge_features && layer.edge_embed != nullptr) {
    ee = tape.param(*layer.edge_embed);
    ee_ptr = &ee;
  }
  Var agg = gin_aggregate(tape, h, g, eps, ee_ptr);
  Var hidden = tape.relu(
      tape.add(tape.matmul(agg, tape.param(*layer.w1)), tape.param(*layer.b1)));
  return tape.add(tape.matmul(hidden, tape.param(*layer.w2)),
                  tape.param(*layer.b2));
}

Var attn_forward(Tape &tape, Var h,
                 const std::vector<std::pair<int, int>> &blocks,
                 const AttnLayerParams &layer) {
  const Tensor &vh = tape.value(h);
  const std::size_t d = vh.cols();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  Var ln1g = tape.param(*layer.ln1_g), ln1b = tape.param(*layer.ln1_b);
  Var ln2g = tape.param(*layer.ln2_g), ln2b = tape.param(*layer.ln2_b);
  Var wq = tape.param(*layer.wq), wk = tape.param(*layer.wk);
  Var wv = tape.param(*layer.wv), wo = tape.param(*layer.wo);
  Var f1w = tape.param(*layer.ff1_w), f1b = tape.param(*layer.ff1_b);
  Var f2w = tape.param(*layer.ff2_w), f2b = tape.param(*layer.ff2_b);

  std::vector<Var> outs;
  outs.reserve(blocks.size());
  for (const auto &[begin, end]: blocks) {
    if (end <= begin) {
      throw DataError("attn_forward: empty block");
    }
    std::vector<int> idx(static_cast<std::size_t>(end - begin));
    for (int r = begin; r < end; ++r) {
      idx[static_cast<std::size_t>(r - begin)] = r;
    }
    Var x = tape.gather_rows(h, idx);
    Var xn = tape.layer_norm_rows(x, ln1g, ln1b);
    Var q = tape.matmul(xn, wq);
    Var k = tape.matmul(xn, wk);
    Var v = tape.matmul(xn, wv);
    Var scores = tape.scale(tape.matmul_nt(q, k), inv_sqrt_d);
    Var att = tape.softmax_rows(scores);
    Var ctx = tape.matmul(att, v);
    Var a = tape.add(x, tape.matmul(ctx, wo));
    Var an = tape.layer_norm_rows(a, ln2g, ln2b);
    Var ff = tape.add(
        tape.matmul(tape.relu(tape.add(tape.matmul(an, f1w), f1b)), f2w), f2b);
    outs.push_back(tape.add(a, ff));
  }
  if (outs.size() == 1) {
    return outs[0];
  }
  return tape.concat_rows(outs);
}

std::vector<std::pair<int, int>> kept_blocks(const Batched &batch,
                                             const std::vector<int> &keep) {
  std::vector<std::pair<int, int>> blocks;
  if (keep.empty()) {
    for (int g = 0; g < batch.graph_count(); ++g) {
      blocks.push_back(batch.node_range(g));
    }
    return blocks;
  }
  int pos = 0;
  for (int g = 0; g < batch.graph_count(); ++g) {
    const auto [begin, end] = batch.node_range(g);
    const int start_pos = pos;
    while (pos < static_cast<int>(keep.size()) && keep[static_cast<std::size_t>(pos)] < end) {
      ++pos;
    }
    if (pos == start_pos) {
      throw DataError(
          "remask-v2 left a graph with every node masked; lower the mask ratio");
    }
    blocks.emplace_back(start_pos, pos);
  }
  return blocks;
}

Var encode(Tape &tape, const AutoencoderParams &model, const EncodeInputs &in,
           RemaskMode mode) {
  const Batched &batch = *in.batch;
  const int n = batch.graph.node_count();
  if (static_cast<int>(in.input_ids.size()) != n) {
    throw ShapeError("encode: id count != node count");
  }
  Var h = tape.embedding_lookup(*model.embed, in.input_ids);
  for (const GinLayerParams &layer: model.encoder.gin) {
    h = gin_forward(tape, h, batch.graph, layer, model.cfg.gin_eps,
                    model.cfg.edge_features);
  }
  const bool have_mask = !in.masked_nodes.empty();
  if (mode == RemaskMode::v2 && have_mask) {
    std::vector<char> is_masked(static_cast<std::size_t>(n), 0);
    for (int v: in.masked_nodes) {
      is_masked[static_cast<std::size_t>(v)] = 1;
    }
    std::vector<int> keep;
    keep.reserve(static_cast<std::size_t>(n) - in.masked_nodes.size());
    for (int v = 0; v < n; ++v) {
      if (!is_masked[static_cast<std::size_t>(v)]) {
        keep.push_back(v);
      }
    }
    const auto blocks = kept_blocks(batch, keep);
    Var hk = tape.gather_rows(h, keep);
    for (const AttnLayerParams &layer: model.encoder.attn) {
      hk = attn_forward(tape, hk, blocks, layer);
    }
    return tape.scatter_rows_fill(hk, keep, static_cast<std::size_t>(n),
                                  tape.param(*model.m1));
  }
  if (!model.encoder.attn.empty()) {
    const auto blocks = kept_blocks(batch, {});
    for (const AttnLayerParams &layer: model.encoder.attn) {
      h = attn_forward(tape, h, blocks, layer);
    }
  }
  if (mode == RemaskMode::v1 && have_mask) {
    std::vector<char> is_masked(static_cast<std::size_t>(n), 0);
    for (int v: in.masked_nodes) {
      is_masked[static_cast<std::size_t>(v)] = 1;
    }
    std::vector<int> unmasked;
    for (int v = 0; v < n; ++v) {
      if (!is_masked[static_cast<std::size_t>(v)]) {
        unmasked.push_back(v);
      }
    }
    Var kept = tape.gather_rows(h, unmasked);
    return tape.scatter_rows_fill(kept, unmasked, static_cast<std::size_t>(n),
                                  tape.param(*model.m1));
  }
  return h;
}

Var decode(Tape &tape, Var hidden, const Batched &batch,
           const AutoencoderParams &model) {
  Var h = hidden;
  for (const GinLayerParams &layer: model.decoder.gin) {
    h = gin_forward(tape, h, batch.graph, layer, model.cfg.gin_eps,
                    model.cfg.edge_features);
  }
  if (!model.decoder.attn.empty()) {
    const auto blocks = kept_blocks(batch, {});
    for (const AttnLayerParams &layer: model.decoder.attn) {
      h = attn_forward(tape, h, blocks, layer);
    }
  }
  return tape.add(tape.matmul(h, tape.param(*model.out_w)),
                  tape.param(*model.out_b));
}

Var pool_subgraph(Tape &tape, Var z, const fragment::Fragment &frag,
                  PoolMode mode) {
  if (frag.node_ids.empty()) {
    throw DataError("pool_subgraph: empty fragment");
  }
  return tape.pool_rows(z, {frag.node_ids}, mode);
}

}  // namespace mgm::nets
