//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/tensorcore/tensor.hpp"

#include <cmath>

#include "mgm/core/error.hpp"

namespace mgm::tensorcore {

Tensor Tensor::of(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  if (r == 0) {
    return Tensor();
  }
  const std::size_t c = rows.begin()->size();
  Tensor t(r, c);
  std::size_t i = 0;
  for (const auto &row: rows) {
    if (row.size() != c) {
      throw ShapeError("Tensor::of: ragged initializer");
    }
    std::size_t j = 0;
    for (double v: row) {
      t.at(i, j++) = v;
    }
    ++i;
  }
  return t;
}

Tensor Tensor::scalar(double v) {
  Tensor t(1, 1);
  t.at(0, 0) = v;
  return t;
}

Tensor Tensor::row(std::initializer_list<double> values) {
  Tensor t(1, values.size());
  std::size_t j = 0;
  for (double v: values) {
    t.at(0, j++) = v;
  }
  return t;
}

double Tensor::scalar_value() const {
  if (rows_ != 1 || cols_ != 1) {
    throw ShapeError("scalar_value: tensor is not 1x1");
  }
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v: data_) {
    if (!std::isfinite(v)) {
      return false;
    }
  }
  return true;
}

void Tensor::fill(double v) {
  for (double &x: data_) {
    x = v;
  }
}

bool Tensor::identical(const Tensor &other) const {
  if (!same_shape(other)) {
    return false;
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i] != other.data_[i]) {
      return false;
    }
  }
  return true;
}

Tensor Tensor::transposed() const {
  Tensor t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) {
      t.at(c, r) = at(r, c);
    }
  }
  return t;
}

}  // namespace mgm::tensorcore
