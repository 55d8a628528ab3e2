//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MGM_KERNELS_KERNELS_HPP_
#define MGM_KERNELS_KERNELS_HPP_

#include <cstddef>
#include <string_view>

// Dense inner loops behind the tensor engine. Every kernel exists in a scalar
// reference lane and (on x86-64) an AVX2 lane; the lane is picked once at
// startup and can be forced via MGMLAB_KERNELS=scalar|avx2 or force_lane().
//
// The two lanes are bit-identical by construction, and the tests assert it:
//  - elementwise kernels round identically in any order;
//  - reductions fix a four-way partial-accumulator order (partial[j] gathers
//    elements with index ≡ j mod 4, combined as (p0+p1)+(p2+p3));
//  - matmul accumulates C[i,:] += A[i,k]*B[k,:] in ascending k, so every
//    C[i][j] sees the same addition order in both lanes.
// The build keeps -ffp-contract=off so the scalar mul+add is never fused.

namespace mgm::kernels {

enum class Lane { scalar, avx2 };

struct KernelTable {
  // dst[i] = a[i] op b[i]
  void (*add)(double *dst, const double *a, const double *b, std::size_t n);
  void (*sub)(double *dst, const double *a, const double *b, std::size_t n);
  void (*mul)(double *dst, const double *a, const double *b, std::size_t n);
  // dst[i] = a[i] * s
  void (*scale)(double *dst, const double *a, double s, std::size_t n);
  // dst[i] += a * x[i]
  void (*axpy)(double *dst, double a, const double *x, std::size_t n);
  // dst[i] += x[i]
  void (*accumulate)(double *dst, const double *x, std::size_t n);
  // dst[i] = max(a[i], 0)
  void (*relu)(double *dst, const double *a, std::size_t n);
  // dst[i] = g[i] * (act[i] > 0 ? 1 : 0)
  void (*relu_backward)(double *dst, const double *g, const double *act,
                        std::size_t n);
  double (*reduce_sum)(const double *a, std::size_t n);
  double (*reduce_max)(const double *a, std::size_t n);
  double (*dot)(const double *a, const double *b, std::size_t n);
  // c (m x n) += a (m x k) . b (k x n), all row-major, c pre-initialized
  void (*matmul_acc)(double *c, const double *a, const double *b,
                     std::size_t m, std::size_t k, std::size_t n);
};

/// Table for the lane selected at startup (or last force_lane call).
const KernelTable &active();
Lane active_lane();
std::string_view lane_name(Lane lane);

/// Table for an explicit lane; throws if the lane is unavailable on this host.
const KernelTable &table_for(Lane lane);

bool avx2_available();

/// Test hook: pin the dispatch to one lane.
void force_lane(Lane lane);

}  // namespace mgm::kernels

#endif  // MGM_KERNELS_KERNELS_HPP_
