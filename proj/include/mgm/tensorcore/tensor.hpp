//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_TENSORCORE_TENSOR_HPP_
#define MGM_TENSORCORE_TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace mgm::tensorcore {

/// Dense row-major matrix of 64-bit reals. Every tensor in the lab is
/// logically two-dimensional; scalars are 1x1 and vectors are 1xN rows.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) { }

  /// Row-per-row literal, e.g. Tensor::of({{1, 2}, {3, 4}}).
  static Tensor of(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor scalar(double v);
  static Tensor row(std::initializer_list<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Tensor &other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double &at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  double *row_ptr(std::size_t r) { return data_.data() + r * cols_; }
  const double *row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

  /// Value of a 1x1 tensor; throws ShapeError otherwise.
  double scalar_value() const;

  bool all_finite() const;
  void fill(double v);

  /// Exact elementwise equality (bitwise for normal values).
  bool identical(const Tensor &other) const;

  Tensor transposed() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace mgm::tensorcore

#endif  // MGM_TENSORCORE_TENSOR_HPP_
