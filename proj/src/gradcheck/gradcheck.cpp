//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/gradcheck/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "mgm/core/error.hpp"
#include "mgm/core/rng.hpp"
#include "mgm/molgraph/smiles.hpp"
#include "mgm/nets/nets.hpp"
#include "mgm/pretrain/pretrain.hpp"

namespace mgm::gradcheck {

using tensorcore::Parameter;
using tensorcore::ParamStore;
using tensorcore::PoolMode;
using tensorcore::Tape;
using tensorcore::Tensor;
using tensorcore::Var;

double max_rel_error(ParamStore &store, const LossBuilder &build, double h) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    Var loss = build(tape);
    store.zero_all_grads();
    tape.backward(loss);
    for (const auto &p: store) {
      analytic.push_back(p->grad);
    }
  }
  double worst = 0.0;
  std::size_t pi = 0;
  for (const auto &p: store) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double keep = p->value.data()[i];
      p->value.data()[i] = keep + h;
      Tape tp;
      const double fp = tp.value(build(tp)).scalar_value();
      p->value.data()[i] = keep - h;
      Tape tm;
      const double fm = tm.value(build(tm)).scalar_value();
      p->value.data()[i] = keep;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[pi].data()[i];
      const double rel =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, rel);
    }
    ++pi;
  }
  return worst;
}

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, RngStream &rng,
                     double scale = 1.0) {
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t.data()[i] = scale * rng.normal();
  }
  return t;
}

/// Values bounded away from zero, for kinked ops (relu).
Tensor random_tensor_offset(std::size_t r, std::size_t c, RngStream &rng) {
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    t.data()[i] = sign * (0.1 + rng.uniform());
  }
  return t;
}

std::size_t random_dim(RngStream &rng) {
  return 1 + static_cast<std::size_t>(rng.uniform_below(5));
}

/// Scalar functional of a matrix output: sum(out * W) with fixed W.
Var weighted_sum(Tape &tape, Var out, const Tensor &weights) {
  return tape.sum_all(tape.mul(out, tape.constant(weights)));
}

using InstanceFn = std::function<double(RngStream &)>;

CheckOutcome run_instances(const std::string &name, int count, double tol,
                           RngStream &rng, const InstanceFn &one) {
  CheckOutcome out;
  out.name = name;
  for (int i = 0; i < count; ++i) {
    out.max_rel_error = std::max(out.max_rel_error, one(rng));
  }
  out.ok = out.max_rel_error < tol;
  return out;
}

double pipeline_instance(RngStream &rng, nets::RemaskMode mode, bool discrete) {
  const molgraph::MolGraph mol = molgraph::parse_smiles("CC(=O)NCO");
  std::vector<molgraph::MolGraph> graphs{mol, molgraph::parse_smiles("C1CC1")};
  const molgraph::Batched batch = molgraph::batch_graphs(graphs);
  const tokenize::AtomVocabulary vocab =
      tokenize::AtomVocabulary::build(graphs);

  nets::ModelConfig cfg;
  cfg.encoder = nets::Preset::gts_tiny;
  cfg.decoder = nets::Preset::gts_tiny;
  cfg.dim = 6;
  cfg.out_dim = discrete ? vocab.size() : 6;
  cfg.edge_features = true;
  cfg.remask = mode;

  ParamStore store;
  RngStream init(rng.next_u64());
  nets::AutoencoderParams model =
      nets::AutoencoderParams::create(store, cfg, vocab.embedding_rows(), init);

  pretrain::MaskPlan plan =
      pretrain::mask_nodes(batch, 0.35, rng.next_u64());
  const std::vector<int> clean_ids = vocab.ids_for(batch.graph);
  const std::vector<int> masked_ids =
      pretrain::apply_mask_ids(clean_ids, plan, vocab.m0_id());

  const Tensor target = random_tensor(
      static_cast<std::size_t>(batch.graph.node_count()),
      static_cast<std::size_t>(cfg.out_dim), rng);

  auto build = [&](Tape &tape) -> Var {
    nets::EncodeInputs in;
    in.batch = &batch;
    in.input_ids = masked_ids;
    in.masked_nodes = plan.masked;
    Var hidden = nets::encode(tape, model, in, mode);
    Var z = nets::decode(tape, hidden, batch, model);
    if (discrete) {
      std::vector<int> ids;
      for (int v: plan.masked) {
        ids.push_back(clean_ids[static_cast<std::size_t>(v)]);
      }
      return tape.cross_entropy(tape.gather_rows(z, plan.masked), ids);
    }
    Var pred = tape.gather_rows(z, plan.masked);
    Tensor sub(plan.masked.size(), target.cols());
    for (std::size_t r = 0; r < plan.masked.size(); ++r) {
      const auto src = static_cast<std::size_t>(plan.masked[r]);
      std::copy(target.row_ptr(src), target.row_ptr(src) + target.cols(),
                sub.row_ptr(r));
    }
    return tape.mse_loss(pred, sub);
  };
  return max_rel_error(store, build);
}

}  // namespace

std::vector<CheckOutcome> run_suite(std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<CheckOutcome> outcomes;
  const double kOpTol = 1e-4;
  const double kPipelineTol = 1e-3;
  const int kOpInstances = 30;

  outcomes.push_back(run_instances("matmul", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m = random_dim(r), k = random_dim(r), n = random_dim(r);
    ParamStore store;
    Parameter &a = store.create("a", random_tensor(m, k, r));
    Parameter &b = store.create("b", random_tensor(k, n, r));
    const Tensor w = random_tensor(m, n, r);
    return max_rel_error(store, [&](Tape &t) {
      return weighted_sum(t, t.matmul(t.param(a), t.param(b)), w);
    });
  }));

  outcomes.push_back(run_instances("matmul_nt", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m = random_dim(r), k = random_dim(r), n = random_dim(r);
    ParamStore store;
    Parameter &a = store.create("a", random_tensor(m, k, r));
    Parameter &b = store.create("b", random_tensor(n, k, r));
    const Tensor w = random_tensor(m, n, r);
    return max_rel_error(store, [&](Tape &t) {
      return weighted_sum(t, t.matmul_nt(t.param(a), t.param(b)), w);
    });
  }));

  outcomes.push_back(run_instances("add", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m = random_dim(r), n = random_dim(r);
    ParamStore store;
    Parameter &a = store.create("a", random_tensor(m, n, r));
    Parameter &b = store.create("b", random_tensor(m, n, r));
    const Tensor w = random_tensor(m, n, r);
    return max_rel_error(store, [&](Tape &t) {
      return weighted_sum(t, t.add(t.param(a), t.param(b)), w);
    });
  }));

  outcomes.push_back(run_instances("add_row_broadcast", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m = random_dim(r), n = random_dim(r);
    ParamStore store;
    Parameter &a = store.create("a", random_tensor(m, n, r));
    Parameter &b = store.create("b", random_tensor(1, n, r));
    const Tensor w = random_tensor(m, n, r);
    return max_rel_error(store, [&](Tape &t) {
      return weighted_sum(t, t.add(t.param(a), t.param(b)), w);
    });
  }));

  outcomes.push_back(run_instances("sub", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m = random_dim(r), n = random_dim(r);
    ParamStore store;
    Parameter &a = store.create("a", random_tensor(m, n, r));
    Parameter &b = store.create("b", random_tensor(m, n, r));
    const Tensor w = random_tensor(m, n, r);
    return max_rel_error(store, [&](Tape &t) {
      return weighted_sum(t, t.sub(t.param(a), t.param(b)), w);
    });
  }));

  outcomes.push_back(run_instances("mul", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m = random_dim(r), n = random_dim(r);
    ParamStore store;
    Parameter &a = store.create("a", random_tensor(m, n, r));
    Parameter &b = store.create("b", random_tensor(m, n, r));
    const Tensor w = random_tensor(m, n, r);
    return max_rel_error(store, [&](Tape &t) {
      return weighted_sum(t, t.mul(t.param(a), t.param(b)), w);
    });
  }));

  outcomes.push_back(run_instances("scale", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m = random_dim(r), n = random_dim(r);
    ParamStore store;
    Parameter &a = store.create("a", random_tensor(m, n, r));
    const double s = r.normal();
    const Tensor w = random_tensor(m, n, r);
    return max_rel_error(store, [&](Tape &t) {
      return weighted_sum(t, t.scale(t.param(a), s), w);
    });
  }));

  outcomes.push_back(run_instances("relu", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m = random_dim(r), n = random_dim(r);
    ParamStore store;
    Parameter &a = store.create("a", random_tensor_offset(m, n, r));
    const Tensor w = random_tensor(m, n, r);
    return max_rel_error(store, [&](Tape &t) {
      return weighted_sum(t, t.relu(t.param(a)), w);
    });
  }));

  outcomes.push_back(run_instances("softmax_rows", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m = random_dim(r), n = 1 + static_cast<std::size_t>(r.uniform_below(5));
    ParamStore store;
    Parameter &a = store.create("a", random_tensor(m, n, r));
    const Tensor w = random_tensor(m, n, r);
    return max_rel_error(store, [&](Tape &t) {
      return weighted_sum(t, t.softmax_rows(t.param(a)), w);
    });
  }));

  outcomes.push_back(run_instances("concat_cols", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m = random_dim(r), n1 = random_dim(r), n2 = random_dim(r);
    ParamStore store;
    Parameter &a = store.create("a", random_tensor(m, n1, r));
    Parameter &b = store.create("b", random_tensor(m, n2, r));
    const Tensor w = random_tensor(m, n1 + n2, r);
    return max_rel_error(store, [&](Tape &t) {
      const std::vector<Var> parts{t.param(a), t.param(b)};
      return weighted_sum(t, t.concat_cols(parts), w);
    });
  }));

  outcomes.push_back(run_instances("concat_rows", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m1 = random_dim(r), m2 = random_dim(r), n = random_dim(r);
    ParamStore store;
    Parameter &a = store.create("a", random_tensor(m1, n, r));
    Parameter &b = store.create("b", random_tensor(m2, n, r));
    const Tensor w = random_tensor(m1 + m2, n, r);
    return max_rel_error(store, [&](Tape &t) {
      const std::vector<Var> parts{t.param(a), t.param(b)};
      return weighted_sum(t, t.concat_rows(parts), w);
    });
  }));

  outcomes.push_back(run_instances("gather_rows", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m = 2 + static_cast<std::size_t>(r.uniform_below(4));
    const std::size_t n = random_dim(r);
    ParamStore store;
    Parameter &a = store.create("a", random_tensor(m, n, r));
    std::vector<int> idx;
    const std::size_t picks = 1 + r.uniform_below(6);
    for (std::size_t i = 0; i < picks; ++i) {
      idx.push_back(static_cast<int>(r.uniform_below(m)));  // duplicates allowed
    }
    const Tensor w = random_tensor(idx.size(), n, r);
    return max_rel_error(store, [&](Tape &t) {
      return weighted_sum(t, t.gather_rows(t.param(a), idx), w);
    });
  }));

  outcomes.push_back(run_instances("scatter_rows_fill", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t n_rows = 3 + static_cast<std::size_t>(r.uniform_below(4));
    const std::size_t n = random_dim(r);
    const std::size_t src_rows = 1 + r.uniform_below(n_rows - 1);
    ParamStore store;
    Parameter &src = store.create("src", random_tensor(src_rows, n, r));
    Parameter &fill = store.create("fill", random_tensor(1, n, r));
    RngStream pick(r.next_u64());
    std::vector<int> dst =
        pick.sample_without_replacement(static_cast<int>(n_rows),
                                        static_cast<int>(src_rows));
    const Tensor w = random_tensor(n_rows, n, r);
    return max_rel_error(store, [&](Tape &t) {
      return weighted_sum(
          t, t.scatter_rows_fill(t.param(src), dst, n_rows, t.param(fill)), w);
    });
  }));

  outcomes.push_back(run_instances("sum_all", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m = random_dim(r), n = random_dim(r);
    ParamStore store;
    Parameter &a = store.create("a", random_tensor(m, n, r));
    return max_rel_error(store, [&](Tape &t) { return t.sum_all(t.param(a)); });
  }));

  outcomes.push_back(run_instances("trainable_batch_norm", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m = 2 + static_cast<std::size_t>(r.uniform_below(4));
    const std::size_t n = random_dim(r);
    ParamStore store;
    Parameter &x = store.create("x", random_tensor(m, n, r));
    Parameter &gamma = store.create("gamma", random_tensor(1, n, r));
    Parameter &beta = store.create("beta", random_tensor(1, n, r));
    const Tensor w = random_tensor(m, n, r);
    return max_rel_error(store, [&](Tape &t) {
      return weighted_sum(
          t, t.trainable_batch_norm(t.param(x), t.param(gamma), t.param(beta)), w);
    });
  }));

  outcomes.push_back(run_instances("layer_norm_rows", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m = random_dim(r);
    const std::size_t n = 2 + static_cast<std::size_t>(r.uniform_below(4));
    ParamStore store;
    Parameter &x = store.create("x", random_tensor(m, n, r));
    Parameter &gamma = store.create("gamma", random_tensor(1, n, r));
    Parameter &beta = store.create("beta", random_tensor(1, n, r));
    const Tensor w = random_tensor(m, n, r);
    return max_rel_error(store, [&](Tape &t) {
      return weighted_sum(
          t, t.layer_norm_rows(t.param(x), t.param(gamma), t.param(beta)), w);
    });
  }));

  outcomes.push_back(run_instances("mse_loss", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m = random_dim(r), n = random_dim(r);
    ParamStore store;
    Parameter &p = store.create("p", random_tensor(m, n, r));
    const Tensor target = random_tensor(m, n, r);
    return max_rel_error(store, [&](Tape &t) {
      return t.mse_loss(t.param(p), target);
    });
  }));

  outcomes.push_back(run_instances("cross_entropy", kOpInstances, kOpTol, rng, [](RngStream &r) {
    const std::size_t m = random_dim(r);
    const std::size_t k = 2 + static_cast<std::size_t>(r.uniform_below(4));
    ParamStore store;
    Parameter &p = store.create("p", random_tensor(m, k, r));
    std::vector<int> ids;
    for (std::size_t i = 0; i < m; ++i) {
      ids.push_back(static_cast<int>(r.uniform_below(k)));
    }
    return max_rel_error(store, [&](Tape &t) {
      return t.cross_entropy(t.param(p), ids);
    });
  }));

  for (const auto mode:
       {PoolMode::mean, PoolMode::sum, PoolMode::max}) {
    const std::string name =
        mode == PoolMode::mean ? "pool_rows_mean"
        : mode == PoolMode::sum ? "pool_rows_sum"
                                : "pool_rows_max";
    outcomes.push_back(run_instances(name, kOpInstances, kOpTol, rng, [mode](RngStream &r) {
      const std::size_t m = 3 + static_cast<std::size_t>(r.uniform_below(4));
      const std::size_t n = random_dim(r);
      ParamStore store;
      Parameter &z = store.create("z", random_tensor(m, n, r));
      std::vector<std::vector<int>> groups;
      const std::size_t g_count = 1 + r.uniform_below(3);
      for (std::size_t g = 0; g < g_count; ++g) {
        RngStream pick(r.next_u64());
        const int size = 1 + static_cast<int>(pick.uniform_below(m));
        groups.push_back(
            pick.sample_without_replacement(static_cast<int>(m), size));
      }
      const Tensor w = random_tensor(g_count, n, r);
      return max_rel_error(store, [&](Tape &t) {
        return weighted_sum(t, t.pool_rows(t.param(z), groups, mode), w);
      });
    }));
  }

  outcomes.push_back(run_instances("gin_forward", 10, kOpTol, rng, [](RngStream &r) {
    const molgraph::MolGraph mol = molgraph::parse_smiles("CC(=O)NCO");
    const std::size_t n = static_cast<std::size_t>(mol.node_count());
    const std::size_t d = 4;
    ParamStore store;
    Parameter &h = store.create("h", random_tensor(n, d, r));
    RngStream init(r.next_u64());
    nets::GinLayerParams layer;
    layer.w1 = &store.create("w1", random_tensor(d, 2 * d, init));
    layer.b1 = &store.create("b1", random_tensor(1, 2 * d, init, 0.1));
    layer.w2 = &store.create("w2", random_tensor(2 * d, d, init));
    layer.b2 = &store.create("b2", random_tensor(1, d, init, 0.1));
    layer.edge_embed = &store.create("ee", random_tensor(4, d, init));
    const Tensor w = random_tensor(n, d, r);
    return max_rel_error(store, [&](Tape &t) {
      return weighted_sum(
          t, nets::gin_forward(t, t.param(h), mol, layer, 0.0, true), w);
    });
  }));

  outcomes.push_back(run_instances("attn_forward", 10, kOpTol, rng, [](RngStream &r) {
    const std::size_t n = 5, d = 4;
    ParamStore store;
    Parameter &h = store.create("h", random_tensor(n, d, r));
    RngStream init(r.next_u64());
    nets::AttnLayerParams layer;
    layer.wq = &store.create("wq", random_tensor(d, d, init));
    layer.wk = &store.create("wk", random_tensor(d, d, init));
    layer.wv = &store.create("wv", random_tensor(d, d, init));
    layer.wo = &store.create("wo", random_tensor(d, d, init));
    layer.ln1_g = &store.create("ln1_g", random_tensor(1, d, init, 0.2));
    layer.ln1_b = &store.create("ln1_b", random_tensor(1, d, init, 0.2));
    layer.ln2_g = &store.create("ln2_g", random_tensor(1, d, init, 0.2));
    layer.ln2_b = &store.create("ln2_b", random_tensor(1, d, init, 0.2));
    layer.ff1_w = &store.create("ff1_w", random_tensor(d, 2 * d, init));
    layer.ff1_b = &store.create("ff1_b", random_tensor(1, 2 * d, init, 0.1));
    layer.ff2_w = &store.create("ff2_w", random_tensor(2 * d, d, init));
    layer.ff2_b = &store.create("ff2_b", random_tensor(1, d, init, 0.1));
    const std::vector<std::pair<int, int>> blocks{{0, 3}, {3, 5}};
    const Tensor w = random_tensor(n, d, r);
    return max_rel_error(store, [&](Tape &t) {
      return weighted_sum(t, nets::attn_forward(t, t.param(h), blocks, layer), w);
    });
  }));

  outcomes.push_back(run_instances("pipeline_none_mse", 3, kPipelineTol, rng,
                                   [](RngStream &r) {
                                     return pipeline_instance(r, nets::RemaskMode::none, false);
                                   }));
  outcomes.push_back(run_instances("pipeline_v1_mse", 3, kPipelineTol, rng,
                                   [](RngStream &r) {
                                     return pipeline_instance(r, nets::RemaskMode::v1, false);
                                   }));
  outcomes.push_back(run_instances("pipeline_v2_mse", 3, kPipelineTol, rng,
                                   [](RngStream &r) {
                                     return pipeline_instance(r, nets::RemaskMode::v2, false);
                                   }));
  outcomes.push_back(run_instances("pipeline_v2_cross_entropy", 3, kPipelineTol,
                                   rng, [](RngStream &r) {
                                     return pipeline_instance(r, nets::RemaskMode::v2, true);
                                   }));
  return outcomes;
}

bool all_ok(const std::vector<CheckOutcome> &outcomes) {
  return std::all_of(outcomes.begin(), outcomes.end(),
                     [](const CheckOutcome &o) { return o.ok; });
}

}  // namespace mgm::gradcheck
