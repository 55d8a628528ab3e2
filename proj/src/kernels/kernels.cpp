//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "mgm/kernels/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "mgm/core/error.hpp"

namespace mgm::kernels {

namespace scalar {

void add(double *dst, const double *a, const double *b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    dst[i] = a[i] + b[i];
  }
}

void sub(double *dst, const double *a, const double *b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    dst[i] = a[i] - b[i];
  }
}

void mul(double *dst, const double *a, const double *b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    dst[i] = a[i] * b[i];
  }
}

void scale(double *dst, const double *a, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    dst[i] = a[i] * s;
  }
}

void axpy(double *dst, double a, const double *x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    dst[i] = dst[i] + a * x[i];
  }
}

void accumulate(double *dst, const double *x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    dst[i] = dst[i] + x[i];
  }
}

void relu(double *dst, const double *a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    dst[i] = a[i] > 0.0 ? a[i] : 0.0;
  }
}

void relu_backward(double *dst, const double *g, const double *act,
                   std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    dst[i] = act[i] > 0.0 ? g[i] : 0.0;
  }
}

// Canonical four-way partial order; see kernels.hpp.
double reduce_sum(const double *a, std::size_t n) {
  double p0 = 0.0, p1 = 0.0, p2 = 0.0, p3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    p0 += a[i];
    p1 += a[i + 1];
    p2 += a[i + 2];
    p3 += a[i + 3];
  }
  if (i < n) p0 += a[i];
  if (i + 1 < n) p1 += a[i + 1];
  if (i + 2 < n) p2 += a[i + 2];
  return (p0 + p1) + (p2 + p3);
}

double reduce_max(const double *a, std::size_t n) {
  double m = a[0];
  for (std::size_t i = 1; i < n; ++i) {
    m = std::max(m, a[i]);
  }
  return m;
}

double dot(const double *a, const double *b, std::size_t n) {
  double p0 = 0.0, p1 = 0.0, p2 = 0.0, p3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    p0 += a[i] * b[i];
    p1 += a[i + 1] * b[i + 1];
    p2 += a[i + 2] * b[i + 2];
    p3 += a[i + 3] * b[i + 3];
  }
  if (i < n) p0 += a[i] * b[i];
  if (i + 1 < n) p1 += a[i + 1] * b[i + 1];
  if (i + 2 < n) p2 += a[i + 2] * b[i + 2];
  return (p0 + p1) + (p2 + p3);
}

void matmul_acc(double *c, const double *a, const double *b, std::size_t m,
                std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double *crow = c + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = a[i * k + kk];
      const double *brow = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) {
        crow[j] = crow[j] + aik * brow[j];
      }
    }
  }
}

}  // namespace scalar

namespace {

constexpr KernelTable kScalarTable = {
    scalar::add,        scalar::sub,        scalar::mul,
    scalar::scale,      scalar::axpy,       scalar::accumulate,
    scalar::relu,       scalar::relu_backward,
    scalar::reduce_sum, scalar::reduce_max, scalar::dot,
    scalar::matmul_acc,
};

Lane pick_startup_lane() {
  if (const char *env = std::getenv("MGMLAB_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") {
      return Lane::scalar;
    }
    if (want == "avx2") {
      if (!avx2_available()) {
        throw DataError("MGMLAB_KERNELS=avx2 but AVX2 is unavailable");
      }
      return Lane::avx2;
    }
    throw DataError("MGMLAB_KERNELS must be 'scalar' or 'avx2', got '" + want +
                    "'");
  }
  return avx2_available() ? Lane::avx2 : Lane::scalar;
}

Lane g_lane = pick_startup_lane();

}  // namespace

#if MGM_HAVE_AVX2
namespace avx2 {
extern const KernelTable kTable;
bool runtime_supported();
}  // namespace avx2

bool avx2_available() {
  static const bool ok = avx2::runtime_supported();
  return ok;
}
#else
bool avx2_available() {
  return false;
}
#endif

const KernelTable &table_for(Lane lane) {
  if (lane == Lane::scalar) {
    return kScalarTable;
  }
#if MGM_HAVE_AVX2
  if (avx2_available()) {
    return avx2::kTable;
  }
#endif
  throw DataError("AVX2 kernel lane unavailable on this host");
}

const KernelTable &active() {
  return table_for(g_lane);
}

Lane active_lane() {
  return g_lane;
}

std::string_view lane_name(Lane lane) {
  return lane == Lane::scalar ? "scalar" : "avx2";
}

void force_lane(Lane lane) {
  table_for(lane);  // validates availability
  g_lane = lane;
}

}  // namespace mgm::kernels
