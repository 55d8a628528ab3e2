//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/tensorcore/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "mgm/core/error.hpp"
#include "mgm/kernels/kernels.hpp"

namespace mgm::tensorcore {

namespace {

const kernels::KernelTable &K() {
  return kernels::active();
}

// c (m x n) += a (m x k) . b (k x n)
void mm_acc(Tensor &c, const Tensor &a, const Tensor &b) {
  K().matmul_acc(c.data(), a.data(), b.data(), a.rows(), a.cols(), b.cols());
}

}  // namespace

// --- ParamStore -----------------------------------------------------------

Parameter &ParamStore::create(const std::string &name, Tensor init) {
  if (index_.count(name) != 0) {
    throw DataError("duplicate parameter name: " + name);
  }
  params_.push_back(std::make_unique<Parameter>(name, std::move(init)));
  index_[name] = params_.size() - 1;
  return *params_.back();
}

Parameter *ParamStore::find(const std::string &name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

const Parameter *ParamStore::find(const std::string &name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

Parameter &ParamStore::at(const std::string &name) {
  Parameter *p = find(name);
  if (p == nullptr) {
    throw DataError("unknown parameter: " + name);
  }
  return *p;
}

void ParamStore::zero_all_grads() {
  for (auto &p: params_) {
    p->zero_grad();
  }
}

// --- Tape plumbing ---------------------------------------------------------

int Tape::push(Tensor value, std::function<void(Tape &)> backprop,
               const char *op_name) {
  if (!value.all_finite()) {
    throw NumericalError(std::string("non-finite result in op ") + op_name);
  }
  nodes_.push_back(Node{std::move(value), Tensor(), std::move(backprop), nullptr});
  return static_cast<int>(nodes_.size()) - 1;
}

Tensor &Tape::grad_buf(int id) {
  Node &n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty()) {
    n.grad = Tensor(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Tape::check_tape(Var v) const {
  if (v.tape != this || v.id < 0 ||
      static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw DataError("Var does not belong to this tape");
  }
}

Var Tape::constant(Tensor v) {
  const int id = push(std::move(v), nullptr, "constant");
  return Var{this, id};
}

Var Tape::param(Parameter &p) {
  const int id = push(p.value, nullptr, "param");
  nodes_[static_cast<std::size_t>(id)].parameter = &p;
  return Var{this, id};
}

const Tensor &Tape::value(Var v) const {
  check_tape(v);
  return nodes_[static_cast<std::size_t>(v.id)].value;
}

Tensor Tape::grad(Var v) const {
  check_tape(v);
  const Node &n = nodes_[static_cast<std::size_t>(v.id)];
  if (n.grad.empty()) {
    return Tensor(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  check_tape(loss);
  if (backward_done_) {
    throw DataError("backward called twice on the same tape");
  }
  backward_done_ = true;
  const Node &ln = nodes_[static_cast<std::size_t>(loss.id)];
  if (ln.value.rows() != 1 || ln.value.cols() != 1) {
    throw ShapeError("backward: loss must be scalar");
  }
  grad_buf(loss.id).at(0, 0) = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    Node &n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.empty()) {
      continue;  // no adjoint reached this node
    }
    if (n.backprop) {
      n.backprop(*this);
    }
    if (n.parameter != nullptr) {
      K().accumulate(n.parameter->grad.data(), n.grad.data(), n.grad.size());
    }
  }
}

// --- ops --------------------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
  check_tape(a);
  check_tape(b);
  const Tensor &va = val(a.id);
  const Tensor &vb = val(b.id);
  if (va.cols() != vb.rows()) {
    throw ShapeError("matmul: inner dimensions disagree");
  }
  Tensor out(va.rows(), vb.cols());
  mm_acc(out, va, vb);
  const int ia = a.id, ib = b.id;
  const int id = push(std::move(out), nullptr, "matmul");
  nodes_[static_cast<std::size_t>(id)].backprop = [ia, ib, id](Tape &t) {
    const Tensor &go = t.nodes_[static_cast<std::size_t>(id)].grad;
    const Tensor bt = t.val(ib).transposed();
    mm_acc(t.grad_buf(ia), go, bt);
    const Tensor at = t.val(ia).transposed();
    mm_acc(t.grad_buf(ib), at, go);
  };
  return Var{this, id};
}

Var Tape::matmul_nt(Var a, Var b) {
  check_tape(a);
  check_tape(b);
  const Tensor &va = val(a.id);
  const Tensor &vb = val(b.id);
  if (va.cols() != vb.cols()) {
    throw ShapeError("matmul_nt: inner dimensions disagree");
  }
  Tensor out(va.rows(), vb.rows());
  const Tensor bt = vb.transposed();
  mm_acc(out, va, bt);
  const int ia = a.id, ib = b.id;
  const int id = push(std::move(out), nullptr, "matmul_nt");
  nodes_[static_cast<std::size_t>(id)].backprop = [ia, ib, id](Tape &t) {
    const Tensor &go = t.nodes_[static_cast<std::size_t>(id)].grad;
    // out = a . b^T  =>  ga += go . b ; gb += go^T . a
    mm_acc(t.grad_buf(ia), go, t.val(ib));
    const Tensor got = go.transposed();
    mm_acc(t.grad_buf(ib), got, t.val(ia));
  };
  return Var{this, id};
}

Var Tape::add(Var a, Var b) {
  check_tape(a);
  check_tape(b);
  const Tensor &va = val(a.id);
  const Tensor &vb = val(b.id);
  const bool broadcast = !va.same_shape(vb);
  if (broadcast && (vb.rows() != 1 || vb.cols() != va.cols())) {
    throw ShapeError("add: shapes must match or b must be a 1xC row");
  }
  Tensor out(va.rows(), va.cols());
  if (broadcast) {
    for (std::size_t r = 0; r < va.rows(); ++r) {
      K().add(out.row_ptr(r), va.row_ptr(r), vb.data(), va.cols());
    }
  } else {
    K().add(out.data(), va.data(), vb.data(), va.size());
  }
  const int ia = a.id, ib = b.id;
  const int id = push(std::move(out), nullptr, "add");
  nodes_[static_cast<std::size_t>(id)].backprop = [ia, ib, id, broadcast](Tape &t) {
    const Tensor &go = t.nodes_[static_cast<std::size_t>(id)].grad;
    K().accumulate(t.grad_buf(ia).data(), go.data(), go.size());
    Tensor &gb = t.grad_buf(ib);
    if (broadcast) {
      for (std::size_t r = 0; r < go.rows(); ++r) {
        K().accumulate(gb.data(), go.row_ptr(r), go.cols());
      }
    } else {
      K().accumulate(gb.data(), go.data(), go.size());
    }
  };
  return Var{this, id};
}

Var Tape::sub(Var a, Var b) {
  check_tape(a);
  check_tape(b);
  const Tensor &va = val(a.id);
  const Tensor &vb = val(b.id);
  if (!va.same_shape(vb)) {
    throw ShapeError("sub: shapes must match");
  }
  Tensor out(va.rows(), va.cols());
  K().sub(out.data(), va.data(), vb.data(), va.size());
  const int ia = a.id, ib = b.id;
  const int id = push(std::move(out), nullptr, "sub");
  nodes_[static_cast<std::size_t>(id)].backprop = [ia, ib, id](Tape &t) {
    const Tensor &go = t.nodes_[static_cast<std::size_t>(id)].grad;
    K().accumulate(t.grad_buf(ia).data(), go.data(), go.size());
    K().axpy(t.grad_buf(ib).data(), -1.0, go.data(), go.size());
  };
  return Var{this, id};
}

Var Tape::mul(Var a, Var b) {
  check_tape(a);
  check_tape(b);
  const Tensor &va = val(a.id);
  const Tensor &vb = val(b.id);
  if (!va.same_shape(vb)) {
    throw ShapeError("mul: shapes must match");
  }
  Tensor out(va.rows(), va.cols());
  K().mul(out.data(), va.data(), vb.data(), va.size());
  const int ia = a.id, ib = b.id;
  const int id = push(std::move(out), nullptr, "mul");
  nodes_[static_cast<std::size_t>(id)].backprop = [ia, ib, id](Tape &t) {
    const Tensor &go = t.nodes_[static_cast<std::size_t>(id)].grad;
    Tensor tmp(go.rows(), go.cols());
    K().mul(tmp.data(), go.data(), t.val(ib).data(), go.size());
    K().accumulate(t.grad_buf(ia).data(), tmp.data(), go.size());
    K().mul(tmp.data(), go.data(), t.val(ia).data(), go.size());
    K().accumulate(t.grad_buf(ib).data(), tmp.data(), go.size());
  };
  return Var{this, id};
}

Var Tape::scale(Var a, double s) {
  check_tape(a);
  const Tensor &va = val(a.id);
  Tensor out(va.rows(), va.cols());
  K().scale(out.data(), va.data(), s, va.size());
  const int ia = a.id;
  const int id = push(std::move(out), nullptr, "scale");
  nodes_[static_cast<std::size_t>(id)].backprop = [ia, id, s](Tape &t) {
    const Tensor &go = t.nodes_[static_cast<std::size_t>(id)].grad;
    K().axpy(t.grad_buf(ia).data(), s, go.data(), go.size());
  };
  return Var{this, id};
}

Var Tape::relu(Var a) {
  check_tape(a);
  const Tensor &va = val(a.id);
  Tensor out(va.rows(), va.cols());
  K().relu(out.data(), va.data(), va.size());
  const int ia = a.id;
  const int id = push(std::move(out), nullptr, "relu");
  nodes_[static_cast<std::size_t>(id)].backprop = [ia, id](Tape &t) {
    const Tensor &go = t.nodes_[static_cast<std::size_t>(id)].grad;
    Tensor tmp(go.rows(), go.cols());
    K().relu_backward(tmp.data(), go.data(), t.val(ia).data(), go.size());
    K().accumulate(t.grad_buf(ia).data(), tmp.data(), go.size());
  };
  return Var{this, id};
}

Var Tape::softmax_rows(Var a) {
  check_tape(a);
  const Tensor &va = val(a.id);
  Tensor out(va.rows(), va.cols());
  for (std::size_t r = 0; r < va.rows(); ++r) {
    const double m = K().reduce_max(va.row_ptr(r), va.cols());
    double *orow = out.row_ptr(r);
    for (std::size_t c = 0; c < va.cols(); ++c) {
      orow[c] = std::exp(va.at(r, c) - m);
    }
    const double z = K().reduce_sum(orow, va.cols());
    K().scale(orow, orow, 1.0 / z, va.cols());
  }
  const int ia = a.id;
  const int id = push(std::move(out), nullptr, "softmax_rows");
  nodes_[static_cast<std::size_t>(id)].backprop = [ia, id](Tape &t) {
    const Tensor &go = t.nodes_[static_cast<std::size_t>(id)].grad;
    const Tensor &y = t.nodes_[static_cast<std::size_t>(id)].value;
    Tensor &ga = t.grad_buf(ia);
    const std::size_t cols = y.cols();
    Tensor tmp(1, cols);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const double dotgy = K().dot(go.row_ptr(r), y.row_ptr(r), cols);
      // ga_row += y * go - dot(go, y) * y
      K().mul(tmp.data(), go.row_ptr(r), y.row_ptr(r), cols);
      K().accumulate(ga.row_ptr(r), tmp.data(), cols);
      K().axpy(ga.row_ptr(r), -dotgy, y.row_ptr(r), cols);
    }
  };
  return Var{this, id};
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) {
    throw ShapeError("concat_cols: no inputs");
  }
  std::size_t total_cols = 0;
  const std::size_t rows = val(parts[0].id).rows();
  std::vector<int> ids;
  std::vector<std::size_t> offsets;
  for (const Var &p: parts) {
    check_tape(p);
    const Tensor &v = val(p.id);
    if (v.rows() != rows) {
      throw ShapeError("concat_cols: row counts disagree");
    }
    ids.push_back(p.id);
    offsets.push_back(total_cols);
    total_cols += v.cols();
  }
  Tensor out(rows, total_cols);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const Tensor &v = val(ids[k]);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(v.row_ptr(r), v.row_ptr(r) + v.cols(),
                out.row_ptr(r) + offsets[k]);
    }
  }
  const int id = push(std::move(out), nullptr, "concat_cols");
  nodes_[static_cast<std::size_t>(id)].backprop = [ids, offsets, id](Tape &t) {
    const Tensor &go = t.nodes_[static_cast<std::size_t>(id)].grad;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Tensor &g = t.grad_buf(ids[k]);
      for (std::size_t r = 0; r < go.rows(); ++r) {
        K().accumulate(g.row_ptr(r), go.row_ptr(r) + offsets[k], g.cols());
      }
    }
  };
  return Var{this, id};
}

Var Tape::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) {
    throw ShapeError("concat_rows: no inputs");
  }
  const std::size_t cols = val(parts[0].id).cols();
  std::size_t total_rows = 0;
  std::vector<int> ids;
  std::vector<std::size_t> offsets;
  for (const Var &p: parts) {
    check_tape(p);
    const Tensor &v = val(p.id);
    if (v.cols() != cols) {
      throw ShapeError("concat_rows: column counts disagree");
    }
    ids.push_back(p.id);
    offsets.push_back(total_rows);
    total_rows += v.rows();
  }
  Tensor out(total_rows, cols);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const Tensor &v = val(ids[k]);
    std::copy(v.data(), v.data() + v.size(), out.row_ptr(offsets[k]));
  }
  const int id = push(std::move(out), nullptr, "concat_rows");
  nodes_[static_cast<std::size_t>(id)].backprop = [ids, offsets, id](Tape &t) {
    const Tensor &go = t.nodes_[static_cast<std::size_t>(id)].grad;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Tensor &g = t.grad_buf(ids[k]);
      K().accumulate(g.data(), go.row_ptr(offsets[k]), g.size());
    }
  };
  return Var{this, id};
}

Var Tape::gather_rows(Var a, std::vector<int> idx) {
  check_tape(a);
  const Tensor &va = val(a.id);
  for (int i: idx) {
    if (i < 0 || static_cast<std::size_t>(i) >= va.rows()) {
      throw DataError("gather_rows: index out of range");
    }
  }
  Tensor out(idx.size(), va.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::copy(va.row_ptr(static_cast<std::size_t>(idx[r])),
              va.row_ptr(static_cast<std::size_t>(idx[r])) + va.cols(),
              out.row_ptr(r));
  }
  const int ia = a.id;
  const int id = push(std::move(out), nullptr, "gather_rows");
  nodes_[static_cast<std::size_t>(id)].backprop = [ia, id, idx = std::move(idx)](Tape &t) {
    const Tensor &go = t.nodes_[static_cast<std::size_t>(id)].grad;
    Tensor &g = t.grad_buf(ia);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      K().accumulate(g.row_ptr(static_cast<std::size_t>(idx[r])),
                     go.row_ptr(r), go.cols());
    }
  };
  return Var{this, id};
}

Var Tape::scatter_rows_fill(Var src, std::vector<int> dst_rows,
                            std::size_t n_rows, Var fill) {
  check_tape(src);
  check_tape(fill);
  const Tensor &vs = val(src.id);
  const Tensor &vf = val(fill.id);
  if (vs.rows() != dst_rows.size()) {
    throw ShapeError("scatter_rows_fill: src rows != index count");
  }
  if (vf.rows() != 1 || vf.cols() != vs.cols()) {
    throw ShapeError("scatter_rows_fill: fill must be a 1xC row");
  }
  std::vector<char> taken(n_rows, 0);
  for (int r: dst_rows) {
    if (r < 0 || static_cast<std::size_t>(r) >= n_rows || taken[static_cast<std::size_t>(r)]) {
      throw DataError("scatter_rows_fill: bad or duplicate destination row");
    }
    taken[static_cast<std::size_t>(r)] = 1;
  }
  Tensor out(n_rows, vs.cols());
  for (std::size_t r = 0; r < n_rows; ++r) {
    std::copy(vf.data(), vf.data() + vf.cols(), out.row_ptr(r));
  }
  for (std::size_t r = 0; r < dst_rows.size(); ++r) {
    std::copy(vs.row_ptr(r), vs.row_ptr(r) + vs.cols(),
              out.row_ptr(static_cast<std::size_t>(dst_rows[r])));
  }
  const int is = src.id, ifill = fill.id;
  const int id = push(std::move(out), nullptr, "scatter_rows_fill");
  nodes_[static_cast<std::size_t>(id)].backprop =
      [is, ifill, id, dst_rows = std::move(dst_rows), n_rows](Tape &t) {
        const Tensor &go = t.nodes_[static_cast<std::size_t>(id)].grad;
        Tensor &gs = t.grad_buf(is);
        for (std::size_t r = 0; r < dst_rows.size(); ++r) {
          K().accumulate(gs.row_ptr(r),
                         go.row_ptr(static_cast<std::size_t>(dst_rows[r])),
                         go.cols());
        }
        std::vector<char> taken(n_rows, 0);
        for (int r: dst_rows) {
          taken[static_cast<std::size_t>(r)] = 1;
        }
        Tensor &gf = t.grad_buf(ifill);
        for (std::size_t r = 0; r < n_rows; ++r) {
          if (!taken[r]) {
            K().accumulate(gf.data(), go.row_ptr(r), go.cols());
          }
        }
      };
  return Var{this, id};
}

Var Tape::sum_all(Var a) {
  check_tape(a);
  const Tensor &va = val(a.id);
  // Row partial sums first so the result is row-permutation independent
  // only in exact arithmetic; the order here is fixed row-major.
  double total = 0.0;
  for (std::size_t r = 0; r < va.rows(); ++r) {
    total += K().reduce_sum(va.row_ptr(r), va.cols());
  }
  const int ia = a.id;
  const int id = push(Tensor::scalar(total), nullptr, "sum_all");
  nodes_[static_cast<std::size_t>(id)].backprop = [ia, id](Tape &t) {
    const double g = t.nodes_[static_cast<std::size_t>(id)].grad.at(0, 0);
    Tensor &ga = t.grad_buf(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      ga.data()[i] += g;
    }
  };
  return Var{this, id};
}

Var Tape::embedding_lookup(Parameter &table, std::span<const int> ids) {
  Var tv = param(table);
  return gather_rows(tv, std::vector<int>(ids.begin(), ids.end()));
}

Var Tape::trainable_batch_norm(Var x, Var gamma, Var beta, double eps) {
  check_tape(x);
  check_tape(gamma);
  check_tape(beta);
  const Tensor &vx = val(x.id);
  const Tensor &vg = val(gamma.id);
  const Tensor &vb = val(beta.id);
  const std::size_t n = vx.rows(), d = vx.cols();
  if (vg.rows() != 1 || vg.cols() != d || vb.rows() != 1 || vb.cols() != d) {
    throw ShapeError("trainable_batch_norm: gamma/beta must be 1xD");
  }
  // Column statistics, population variance.
  Tensor mean(1, d), var(1, d), xhat(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    K().accumulate(mean.data(), vx.row_ptr(r), d);
  }
  K().scale(mean.data(), mean.data(), 1.0 / static_cast<double>(n), d);
  Tensor centered(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    K().sub(centered.row_ptr(r), vx.row_ptr(r), mean.data(), d);
  }
  Tensor sq(1, d);
  for (std::size_t r = 0; r < n; ++r) {
    K().mul(sq.data(), centered.row_ptr(r), centered.row_ptr(r), d);
    K().accumulate(var.data(), sq.data(), d);
  }
  K().scale(var.data(), var.data(), 1.0 / static_cast<double>(n), d);
  Tensor inv_std(1, d);
  for (std::size_t c = 0; c < d; ++c) {
    inv_std.at(0, c) = 1.0 / std::sqrt(var.at(0, c) + eps);
  }
  Tensor out(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    K().mul(xhat.row_ptr(r), centered.row_ptr(r), inv_std.data(), d);
    K().mul(out.row_ptr(r), xhat.row_ptr(r), vg.data(), d);
    K().add(out.row_ptr(r), out.row_ptr(r), vb.data(), d);
  }
  const int ix = x.id, ig = gamma.id, ib = beta.id;
  const int id = push(std::move(out), nullptr, "trainable_batch_norm");
  nodes_[static_cast<std::size_t>(id)].backprop =
      [ix, ig, ib, id, xhat = std::move(xhat), inv_std = std::move(inv_std),
       n, d](Tape &t) {
        const Tensor &go = t.nodes_[static_cast<std::size_t>(id)].grad;
        const Tensor &vg = t.val(ig);
        // gamma/beta grads
        Tensor &ggamma = t.grad_buf(ig);
        Tensor &gbeta = t.grad_buf(ib);
        Tensor tmp(1, d);
        for (std::size_t r = 0; r < n; ++r) {
          K().mul(tmp.data(), go.row_ptr(r), xhat.row_ptr(r), d);
          K().accumulate(ggamma.data(), tmp.data(), d);
          K().accumulate(gbeta.data(), go.row_ptr(r), d);
        }
        // x grad through mean and variance:
        // dxhat = go * gamma
        // dx = inv_std/n * (n*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
        Tensor sum_dxhat(1, d), sum_dxhat_xhat(1, d), dxhat(n, d);
        for (std::size_t r = 0; r < n; ++r) {
          K().mul(dxhat.row_ptr(r), go.row_ptr(r), vg.data(), d);
          K().accumulate(sum_dxhat.data(), dxhat.row_ptr(r), d);
          K().mul(tmp.data(), dxhat.row_ptr(r), xhat.row_ptr(r), d);
          K().accumulate(sum_dxhat_xhat.data(), tmp.data(), d);
        }
        Tensor &gx = t.grad_buf(ix);
        const double inv_n = 1.0 / static_cast<double>(n);
        Tensor row(1, d);
        for (std::size_t r = 0; r < n; ++r) {
          K().scale(row.data(), dxhat.row_ptr(r), static_cast<double>(n), d);
          K().sub(row.data(), row.data(), sum_dxhat.data(), d);
          K().mul(tmp.data(), xhat.row_ptr(r), sum_dxhat_xhat.data(), d);
          K().sub(row.data(), row.data(), tmp.data(), d);
          K().mul(row.data(), row.data(), inv_std.data(), d);
          K().scale(row.data(), row.data(), inv_n, d);
          K().accumulate(gx.row_ptr(r), row.data(), d);
        }
      };
  return Var{this, id};
}

Var Tape::layer_norm_rows(Var x, Var gamma, Var beta, double eps) {
  check_tape(x);
  check_tape(gamma);
  check_tape(beta);
  const Tensor &vx = val(x.id);
  const Tensor &vg = val(gamma.id);
  const Tensor &vb = val(beta.id);
  const std::size_t n = vx.rows(), d = vx.cols();
  if (vg.rows() != 1 || vg.cols() != d || vb.rows() != 1 || vb.cols() != d) {
    throw ShapeError("layer_norm_rows: gamma/beta must be 1xD");
  }
  Tensor xhat(n, d), inv_std(n, 1), out(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    const double mu = K().reduce_sum(vx.row_ptr(r), d) / static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double u = vx.at(r, c) - mu;
      xhat.at(r, c) = u;
      var += u * u;
    }
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std.at(r, 0) = is;
    for (std::size_t c = 0; c < d; ++c) {
      xhat.at(r, c) *= is;
      out.at(r, c) = xhat.at(r, c) * vg.at(0, c) + vb.at(0, c);
    }
  }
  const int ix = x.id, ig = gamma.id, ib = beta.id;
  const int id = push(std::move(out), nullptr, "layer_norm_rows");
  nodes_[static_cast<std::size_t>(id)].backprop =
      [ix, ig, ib, id, xhat = std::move(xhat), inv_std = std::move(inv_std),
       n, d](Tape &t) {
        const Tensor &go = t.nodes_[static_cast<std::size_t>(id)].grad;
        const Tensor &vg = t.val(ig);
        Tensor &ggamma = t.grad_buf(ig);
        Tensor &gbeta = t.grad_buf(ib);
        Tensor &gx = t.grad_buf(ix);
        Tensor tmp(1, d);
        for (std::size_t r = 0; r < n; ++r) {
          K().mul(tmp.data(), go.row_ptr(r), xhat.row_ptr(r), d);
          K().accumulate(ggamma.data(), tmp.data(), d);
          K().accumulate(gbeta.data(), go.row_ptr(r), d);
          // dxhat = go * gamma; per-row:
          // dx = inv_std/d * (d*dxhat - sum(dxhat) - xhat*sum(dxhat*xhat))
          Tensor dxhat(1, d);
          K().mul(dxhat.data(), go.row_ptr(r), vg.data(), d);
          const double s1 = K().reduce_sum(dxhat.data(), d);
          K().mul(tmp.data(), dxhat.data(), xhat.row_ptr(r), d);
          const double s2 = K().reduce_sum(tmp.data(), d);
          const double is = inv_std.at(r, 0);
          for (std::size_t c = 0; c < d; ++c) {
            gx.at(r, c) += is / static_cast<double>(d) *
                           (static_cast<double>(d) * dxhat.at(0, c) - s1 -
                            xhat.at(r, c) * s2);
          }
        }
      };
  return Var{this, id};
}

Var Tape::mse_loss(Var pred, const Tensor &target) {
  check_tape(pred);
  const Tensor &vp = val(pred.id);
  if (!vp.same_shape(target)) {
    throw ShapeError("mse_loss: prediction/target shapes disagree");
  }
  if (vp.size() == 0) {
    throw ShapeError("mse_loss: empty input");
  }
  Tensor diff(vp.rows(), vp.cols());
  K().sub(diff.data(), vp.data(), target.data(), vp.size());
  Tensor sq(vp.rows(), vp.cols());
  K().mul(sq.data(), diff.data(), diff.data(), vp.size());
  double total = 0.0;
  for (std::size_t r = 0; r < sq.rows(); ++r) {
    total += K().reduce_sum(sq.row_ptr(r), sq.cols());
  }
  const double inv_count = 1.0 / static_cast<double>(vp.size());
  const int ip = pred.id;
  const int id = push(Tensor::scalar(total * inv_count), nullptr, "mse_loss");
  nodes_[static_cast<std::size_t>(id)].backprop =
      [ip, id, diff = std::move(diff), inv_count](Tape &t) {
        const double g = t.nodes_[static_cast<std::size_t>(id)].grad.at(0, 0);
        Tensor &gp = t.grad_buf(ip);
        K().axpy(gp.data(), 2.0 * inv_count * g, diff.data(), diff.size());
      };
  return Var{this, id};
}

Var Tape::cross_entropy(Var logits, std::vector<int> ids) {
  check_tape(logits);
  const Tensor &vl = val(logits.id);
  const std::size_t m = vl.rows(), kk = vl.cols();
  if (m == 0) {
    throw ShapeError("cross_entropy: no rows");
  }
  if (ids.size() != m) {
    throw ShapeError("cross_entropy: id count != row count");
  }
  for (int c: ids) {
    if (c < 0 || static_cast<std::size_t>(c) >= kk) {
      throw DataError("cross_entropy: class id out of range");
    }
  }
  Tensor softmax(m, kk);
  double total = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const double mx = K().reduce_max(vl.row_ptr(r), kk);
    double *srow = softmax.row_ptr(r);
    for (std::size_t c = 0; c < kk; ++c) {
      srow[c] = std::exp(vl.at(r, c) - mx);
    }
    const double z = K().reduce_sum(srow, kk);
    K().scale(srow, srow, 1.0 / z, kk);
    total += -(vl.at(r, static_cast<std::size_t>(ids[r])) - mx - std::log(z));
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  const int il = logits.id;
  const int id = push(Tensor::scalar(total * inv_m), nullptr, "cross_entropy");
  nodes_[static_cast<std::size_t>(id)].backprop =
      [il, id, softmax = std::move(softmax), ids = std::move(ids), inv_m](Tape &t) {
        const double g = t.nodes_[static_cast<std::size_t>(id)].grad.at(0, 0);
        Tensor &gl = t.grad_buf(il);
        for (std::size_t r = 0; r < softmax.rows(); ++r) {
          K().axpy(gl.row_ptr(r), g * inv_m, softmax.row_ptr(r), softmax.cols());
          gl.at(r, static_cast<std::size_t>(ids[r])) -= g * inv_m;
        }
      };
  return Var{this, id};
}

Var Tape::custom_op(const char *name, std::span<const Var> inputs,
                    Tensor value, CustomBackward backward) {
  std::vector<int> in_ids;
  in_ids.reserve(inputs.size());
  for (const Var &v: inputs) {
    check_tape(v);
    in_ids.push_back(v.id);
  }
  const int id = push(std::move(value), nullptr, name);
  nodes_[static_cast<std::size_t>(id)].backprop =
      [id, in_ids = std::move(in_ids), backward = std::move(backward)](Tape &t) {
        std::vector<Tensor *> grads;
        grads.reserve(in_ids.size());
        for (int i: in_ids) {
          grads.push_back(&t.grad_buf(i));
        }
        backward(t.nodes_[static_cast<std::size_t>(id)].grad, grads);
      };
  return Var{this, id};
}

Var Tape::pool_rows(Var z, const std::vector<std::vector<int>> &groups,
                    PoolMode mode) {
  check_tape(z);
  const Tensor &vz = val(z.id);
  const std::size_t d = vz.cols();
  if (groups.empty()) {
    throw ShapeError("pool_rows: no groups");
  }
  Tensor out(groups.size(), d);
  std::vector<std::vector<int>> argmax;
  if (mode == PoolMode::max) {
    argmax.assign(groups.size(), std::vector<int>(d, -1));
  }
  for (std::size_t gidx = 0; gidx < groups.size(); ++gidx) {
    const auto &g = groups[gidx];
    if (g.empty()) {
      throw DataError("pool_rows: empty group");
    }
    for (int r: g) {
      if (r < 0 || static_cast<std::size_t>(r) >= vz.rows()) {
        throw DataError("pool_rows: row index out of range");
      }
    }
    double *orow = out.row_ptr(gidx);
    if (mode == PoolMode::max) {
      for (std::size_t c = 0; c < d; ++c) {
        double best = vz.at(static_cast<std::size_t>(g[0]), c);
        int best_r = g[0];
        for (std::size_t t = 1; t < g.size(); ++t) {
          const double v = vz.at(static_cast<std::size_t>(g[t]), c);
          if (v > best) {
            best = v;
            best_r = g[t];
          }
        }
        orow[c] = best;
        argmax[gidx][c] = best_r;
      }
    } else {
      for (int r: g) {
        K().accumulate(orow, vz.row_ptr(static_cast<std::size_t>(r)), d);
      }
      if (mode == PoolMode::mean) {
        K().scale(orow, orow, 1.0 / static_cast<double>(g.size()), d);
      }
    }
  }
  const int iz = z.id;
  const int id = push(std::move(out), nullptr, "pool_rows");
  nodes_[static_cast<std::size_t>(id)].backprop =
      [iz, id, groups, mode, argmax = std::move(argmax)](Tape &t) {
        const Tensor &go = t.nodes_[static_cast<std::size_t>(id)].grad;
        Tensor &gz = t.grad_buf(iz);
        for (std::size_t gidx = 0; gidx < groups.size(); ++gidx) {
          const auto &g = groups[gidx];
          switch (mode) {
          case PoolMode::sum:
            for (int r: g) {
              K().accumulate(gz.row_ptr(static_cast<std::size_t>(r)),
                             go.row_ptr(gidx), go.cols());
            }
            break;
          case PoolMode::mean: {
            const double w = 1.0 / static_cast<double>(g.size());
            for (int r: g) {
              K().axpy(gz.row_ptr(static_cast<std::size_t>(r)), w,
                       go.row_ptr(gidx), go.cols());
            }
            break;
          }
          case PoolMode::max:
            for (std::size_t c = 0; c < go.cols(); ++c) {
              gz.at(static_cast<std::size_t>(argmax[gidx][c]), c) +=
                  go.at(gidx, c);
            }
            break;
          }
        }
      };
  return Var{this, id};
}

}  // namespace mgm::tensorcore
