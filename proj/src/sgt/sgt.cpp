//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/sgt/sgt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "mgm/core/error.hpp"
#include "mgm/kernels/kernels.hpp"

namespace mgm::sgt {

using molgraph::AdjacencyView;
using molgraph::MolGraph;
using tensorcore::Tensor;

Tensor build_operator(const AdjacencyView &adj, GraphOperatorKind kind) {
  const std::size_t n = adj.a.rows();
  Tensor op(n, n);
  switch (kind.family) {
  case OperatorFamily::gin:
    op = adj.a;
    for (std::size_t i = 0; i < n; ++i) {
      op.at(i, i) += 1.0 + kind.eps;
    }
    break;
  case OperatorFamily::gcn:
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (adj.a_tilde.at(i, j) != 0.0) {
          op.at(i, j) = 1.0 / std::sqrt(adj.degree_tilde[i] * adj.degree_tilde[j]);
        }
      }
    }
    break;
  case OperatorFamily::sage:
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (adj.a_tilde.at(i, j) != 0.0) {
          op.at(i, j) = 1.0 / adj.degree_tilde[i];
        }
      }
    }
    break;
  }
  return op;
}

Tensor batch_normalize(const Tensor &m, double bn_epsilon) {
  const std::size_t n = m.rows(), d = m.cols();
  if (n == 0) {
    throw ShapeError("batch_normalize: empty input");
  }
  const auto &kt = kernels::active();
  Tensor mean(1, d);
  for (std::size_t r = 0; r < n; ++r) {
    kt.accumulate(mean.data(), m.row_ptr(r), d);
  }
  kt.scale(mean.data(), mean.data(), 1.0 / static_cast<double>(n), d);
  Tensor var(1, d), tmp(1, d);
  Tensor centered(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    kt.sub(centered.row_ptr(r), m.row_ptr(r), mean.data(), d);
    kt.mul(tmp.data(), centered.row_ptr(r), centered.row_ptr(r), d);
    kt.accumulate(var.data(), tmp.data(), d);
  }
  kt.scale(var.data(), var.data(), 1.0 / static_cast<double>(n), d);
  Tensor inv_std(1, d);
  for (std::size_t c = 0; c < d; ++c) {
    inv_std.at(0, c) = 1.0 / std::sqrt(var.at(0, c) + bn_epsilon);
  }
  Tensor out(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    kt.mul(out.row_ptr(r), centered.row_ptr(r), inv_std.data(), d);
  }
  return out;
}

std::string to_string(const SgtConfig &cfg) {
  const char *family = cfg.op.family == OperatorFamily::gin   ? "gin"
                       : cfg.op.family == OperatorFamily::gcn ? "gcn"
                                                              : "sage";
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "sgt(op=%s,eps=%g,layers=%d,dim=%d,bn_eps=%g,bn=%s)", family,
                cfg.op.eps, cfg.layers, cfg.dim, cfg.bn_epsilon,
                cfg.use_batch_norm ? "on" : "off");
  return buf;
}

Tensor SgtTokens::layer_slice(int l) const {
  if (l < 0 || l >= layers) {
    throw DataError("layer_slice: layer index out of range");
  }
  Tensor s(mat.rows(), static_cast<std::size_t>(dim));
  const std::size_t off = static_cast<std::size_t>(l) * static_cast<std::size_t>(dim);
  for (std::size_t r = 0; r < mat.rows(); ++r) {
    std::copy(mat.row_ptr(r) + off, mat.row_ptr(r) + off + static_cast<std::size_t>(dim),
              s.row_ptr(r));
  }
  return s;
}

namespace {

/// One propagation H <- omega(A) . H computed per node, with contributions
/// accumulated in ascending (vocab id at layer 1 / node index afterwards)
/// order. Layer 1 exactness: equal (own id, neighbor id multiset, degrees)
/// implies bit-equal rows.
Tensor propagate(const MolGraph &g, const Tensor &h,
                 std::span<const int> vocab_ids, GraphOperatorKind kind,
                 bool order_by_vocab_id) {
  const auto &kt = kernels::active();
  const std::size_t n = h.rows(), d = h.cols();
  Tensor out(n, d);
  std::vector<std::pair<int, int>> contrib;  // (sort key, node)
  for (std::size_t i = 0; i < n; ++i) {
    const int vi = static_cast<int>(i);
    const double deg_i = 1.0 + static_cast<double>(g.degree(vi));
    contrib.clear();
    for (int u: g.neighbors(vi)) {
      contrib.emplace_back(order_by_vocab_id ? vocab_ids[static_cast<std::size_t>(u)] : u, u);
    }
    std::sort(contrib.begin(), contrib.end());
    double *orow = out.row_ptr(i);
    switch (kind.family) {
    case OperatorFamily::gin:
      for (const auto &[key, u]: contrib) {
        kt.accumulate(orow, h.row_ptr(static_cast<std::size_t>(u)), d);
      }
      kt.axpy(orow, 1.0 + kind.eps, h.row_ptr(i), d);
      break;
    case OperatorFamily::gcn:
      for (const auto &[key, u]: contrib) {
        const double w =
            1.0 / std::sqrt(deg_i * (1.0 + static_cast<double>(g.degree(u))));
        kt.axpy(orow, w, h.row_ptr(static_cast<std::size_t>(u)), d);
      }
      kt.axpy(orow, 1.0 / deg_i, h.row_ptr(i), d);
      break;
    case OperatorFamily::sage:
      for (const auto &[key, u]: contrib) {
        kt.axpy(orow, 1.0 / deg_i, h.row_ptr(static_cast<std::size_t>(u)), d);
      }
      kt.axpy(orow, 1.0 / deg_i, h.row_ptr(i), d);
      break;
    }
  }
  return out;
}

}  // namespace

SgtTokens sgt_tokenize(const MolGraph &batch, const Tensor &embedding,
                       std::span<const int> vocab_ids, const SgtConfig &cfg) {
  const std::size_t n = static_cast<std::size_t>(batch.node_count());
  if (vocab_ids.size() != n) {
    throw ShapeError("sgt_tokenize: id count != node count");
  }
  const std::size_t d = embedding.cols();
  if (cfg.dim != 0 && static_cast<std::size_t>(cfg.dim) != d) {
    throw ShapeError("sgt_tokenize: configured dim != embedding width");
  }
  if (cfg.layers < 1) {
    throw DataError("sgt_tokenize: layers must be >= 1");
  }
  Tensor h(n, d);
  for (std::size_t v = 0; v < n; ++v) {
    const int id = vocab_ids[v];
    if (id < 0 || static_cast<std::size_t>(id) >= embedding.rows()) {
      throw DataError("sgt_tokenize: embedding is missing a vocabulary id");
    }
    std::copy(embedding.row_ptr(static_cast<std::size_t>(id)),
              embedding.row_ptr(static_cast<std::size_t>(id)) + d, h.row_ptr(v));
  }
  SgtTokens tokens;
  tokens.layers = cfg.layers;
  tokens.dim = static_cast<int>(d);
  tokens.mat = Tensor(n, static_cast<std::size_t>(cfg.layers) * d);
  for (int l = 0; l < cfg.layers; ++l) {
    Tensor propagated = propagate(batch, h, vocab_ids, cfg.op, l == 0);
    h = cfg.use_batch_norm ? batch_normalize(propagated, cfg.bn_epsilon)
                           : std::move(propagated);
    const std::size_t off = static_cast<std::size_t>(l) * d;
    for (std::size_t r = 0; r < n; ++r) {
      std::copy(h.row_ptr(r), h.row_ptr(r) + d, tokens.mat.row_ptr(r) + off);
    }
  }
  if (!tokens.mat.all_finite()) {
    throw NumericalError("sgt_tokenize: non-finite token values");
  }
  return tokens;
}

}  // namespace mgm::sgt
