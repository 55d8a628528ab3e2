//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_NETS_NETS_HPP_
#define MGM_NETS_NETS_HPP_

#include <string>
#include <vector>

#include "mgm/core/rng.hpp"
#include "mgm/fragment/fragment.hpp"
#include "mgm/molgraph/molgraph.hpp"
#include "mgm/tensorcore/tape.hpp"

namespace mgm::nets {

using tensorcore::Parameter;
using tensorcore::ParamStore;
using tensorcore::Tape;
using tensorcore::Var;

enum class RemaskMode { none, v1, v2 };
enum class Preset { linear, gine_small, gts, gts_small, gts_tiny };

RemaskMode remask_mode_from(const std::string &name);
Preset preset_from(const std::string &name);
std::string preset_name(Preset p);

struct StackShape {
  int gin_layers = 0;
  int attn_layers = 0;
};

/// Message-passing / attention depth per preset (full-scale layer ratios
/// preserved, widths scaled down by config):
/// linear 0+0, gine_small 3+0, gts 5+4, gts_small 3+1, gts_tiny 1+1.
StackShape preset_shape(Preset p);

struct GinLayerParams {
  Parameter *w1 = nullptr;
  Parameter *b1 = nullptr;
  Parameter *w2 = nullptr;
  Parameter *b2 = nullptr;
  Parameter *edge_embed = nullptr;  // 4 x dim, null when edge features off
};

struct AttnLayerParams {
  Parameter *wq = nullptr, *wk = nullptr, *wv = nullptr, *wo = nullptr;
  Parameter *ln1_g = nullptr, *ln1_b = nullptr;
  Parameter *ln2_g = nullptr, *ln2_b = nullptr;
  Parameter *ff1_w = nullptr, *ff1_b = nullptr;
  Parameter *ff2_w = nullptr, *ff2_b = nullptr;
};

struct StackParams {
  Preset preset = Preset::linear;
  std::vector<GinLayerParams> gin;
  std::vector<AttnLayerParams> attn;
};

struct ModelConfig {
  Preset encoder = Preset::gts_small;
  Preset decoder = Preset::gts_tiny;
  int dim = 16;
  int out_dim = 16;
  bool edge_features = true;  // encoder/decoder GINE-lite messages
  double gin_eps = 0.0;       // encoder GIN epsilon (tokenizer uses its own)
  RemaskMode remask = RemaskMode::v2;
};

/// All autoencoder parameters, created inside a ParamStore under the
/// "encoder." / "decoder." prefixes.
struct AutoencoderParams {
  ModelConfig cfg;
  Parameter *embed = nullptr;  // embedding_rows x dim (includes UNK and m0)
  Parameter *m1 = nullptr;     // 1 x dim remask token
  StackParams encoder;
  StackParams decoder;
  Parameter *out_w = nullptr;  // dim x out_dim
  Parameter *out_b = nullptr;  // 1 x out_dim

  static AutoencoderParams create(ParamStore &store, const ModelConfig &cfg,
                                  int embed_rows, RngStream &init);
  /// Rebinds pointers to an existing store (after checkpoint load).
  static AutoencoderParams bind(ParamStore &store, const ModelConfig &cfg);
};

/// GIN layer: MLP((1+eps) h_i + sum_{j in N(i)} (h_j + edge_embed[e_ij])).
/// Neighbor messages are summed in lexicographic row-value order so node
/// relabeling permutes outputs bit-exactly.
Var gin_forward(Tape &tape, Var h, const molgraph::MolGraph &g,
                const GinLayerParams &layer, double eps, bool edge_features);

/// Pre-norm single-head attention + feed-forward over each [begin, end)
/// row block independently (rows only attend within their block).
Var attn_forward(Tape &tape, Var h,
                 const std::vector<std::pair<int, int>> &blocks,
                 const AttnLayerParams &layer);

struct EncodeInputs {
  const molgraph::Batched *batch = nullptr;
  std::vector<int> input_ids;     // embedding ids, m0 already substituted
  std::vector<int> masked_nodes;  // sorted global node indices, may be empty
};

/// Full encoder: embedding, GIN layers on all nodes, then the transformer
/// stage under the requested remask mode (v2 drops masked rows before
/// attention and pads m1 afterwards; v1 overwrites masked rows with m1 after
/// the stack; none passes through). Throws DataError if remask-v2 leaves a
/// graph with no unmasked node.
Var encode(Tape &tape, const AutoencoderParams &model,
           const EncodeInputs &in, RemaskMode mode);

/// Decoder stack plus the output projection to cfg.out_dim.
Var decode(Tape &tape, Var hidden, const molgraph::Batched &batch,
           const AutoencoderParams &model);

/// Pooled prediction for one fragment.
Var pool_subgraph(Tape &tape, Var z, const fragment::Fragment &frag,
                  tensorcore::PoolMode mode);

/// Row blocks of a batch, in kept-row coordinates after dropping all rows
/// not in `keep` (keep sorted; empty keep list means keep everything).
std::vector<std::pair<int, int>> kept_blocks(const molgraph::Batched &batch,
                                             const std::vector<int> &keep);

}  // namespace mgm::nets

#endif  // MGM_NETS_NETS_HPP_
