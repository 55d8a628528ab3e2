//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_TENSORCORE_TAPE_HPP_
#define MGM_TENSORCORE_TAPE_HPP_

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mgm/tensorcore/tensor.hpp"

namespace mgm::tensorcore {

/// A named trainable tensor with an accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string n, Tensor init)
      : name(std::move(n)), value(std::move(init)),
        grad(value.rows(), value.cols()) { }

  void zero_grad() { grad.fill(0.0); }
};

/// Owns parameters in a stable insertion order (checkpoints and the Adam
/// state both iterate it). Pointers stay valid for the store's lifetime.
class ParamStore {
 public:
  Parameter &create(const std::string &name, Tensor init);
  Parameter *find(const std::string &name);
  const Parameter *find(const std::string &name) const;
  Parameter &at(const std::string &name);

  std::size_t count() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_all_grads();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t> index_;
};

class Tape;

/// Handle to a tape node. Cheap to copy; only valid for its tape's lifetime.
struct Var {
  Tape *tape = nullptr;
  int id = -1;
};

enum class PoolMode { mean, sum, max };

/// Define-by-run reverse-mode tape. Rebuilt every step; single-threaded.
/// Every forward op checks its result for NaN/Inf and records a backward
/// closure; constants contribute no adjoint.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Var constant(Tensor v);
  Var param(Parameter &p);

  const Tensor &value(Var v) const;
  /// Gradient buffer of a node after backward(); zeros if unreached.
  Tensor grad(Var v) const;

  /// Reverse sweep from a scalar loss. Accumulates into Parameter::grad.
  /// Throws if called twice on the same tape.
  void backward(Var loss);

  // --- core ops ----------------------------------------------------------
  Var matmul(Var a, Var b);
  /// a . transpose(b)
  Var matmul_nt(Var a, Var b);
  /// Same shape, or b a 1xC row broadcast against a's rows.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  /// Elementwise product, shapes must match exactly.
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var relu(Var a);
  Var softmax_rows(Var a);
  Var concat_cols(std::span<const Var> parts);
  Var concat_rows(std::span<const Var> parts);
  /// Row gather; duplicate indices allowed (embedding-style lookup).
  Var gather_rows(Var a, std::vector<int> idx);
  /// N-row output: row dst_rows[r] = src row r, every other row = fill (1xC).
  Var scatter_rows_fill(Var src, std::vector<int> dst_rows, std::size_t n_rows,
                        Var fill);
  Var sum_all(Var a);

  Var embedding_lookup(Parameter &table, std::span<const int> ids);

  Var trainable_batch_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
  Var layer_norm_rows(Var x, Var gamma, Var beta, double eps = 1e-5);

  /// Mean over all entries of the squared difference.
  Var mse_loss(Var pred, const Tensor &target);
  /// Mean over rows of -log softmax(logits)[id].
  Var cross_entropy(Var logits, std::vector<int> ids);

  /// One pooled row per group of node indices.
  Var pool_rows(Var z, const std::vector<std::vector<int>> &groups,
                PoolMode mode);

  /// Hook for domain ops (e.g. graph aggregation): the backward callback
  /// receives the output adjoint and one lazily-allocated grad buffer per
  /// input, in the same order.
  using CustomBackward =
      std::function<void(const Tensor &grad_out, std::vector<Tensor *> &grad_inputs)>;
  Var custom_op(const char *name, std::span<const Var> inputs, Tensor value,
                CustomBackward backward);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;                      // sized lazily during backward
    std::function<void(Tape &)> backprop;  // empty for leaves/constants
    Parameter *parameter = nullptr;
  };

  int push(Tensor value, std::function<void(Tape &)> backprop,
           const char *op_name);
  Tensor &grad_buf(int id);
  const Tensor &val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  void check_tape(Var v) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;

  friend struct TapeAccess;
};

}  // namespace mgm::tensorcore

#endif  // MGM_TENSORCORE_TAPE_HPP_
