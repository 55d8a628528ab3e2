//
// Project mgmlab - Copyright 2026 the mgmlab authors.
// SPDX-License-Identifier: Apache-2.0
//

// AVX2 lane. Mirrors the scalar lane's accumulation orders exactly: no FMA,
// reductions keep the four-way partial layout (vector lane j holds partial j),
// matmul broadcasts A[i,k] and accumulates along ascending k.

#include <immintrin.h>

#include <algorithm>
#include <cstddef>

#include "mgm/kernels/kernels.hpp"

namespace mgm::kernels::avx2 {

namespace {

void add(double *dst, const double *a, const double *b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) {
    dst[i] = a[i] + b[i];
  }
}

void sub(double *dst, const double *a, const double *b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) {
    dst[i] = a[i] - b[i];
  }
}

void mul(double *dst, const double *a, const double *b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                            _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) {
    dst[i] = a[i] * b[i];
  }
}

void scale(double *dst, const double *a, double s, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), vs));
  }
  for (; i < n; ++i) {
    dst[i] = a[i] * s;
  }
}

void axpy(double *dst, double a, const double *x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), prod));
  }
  for (; i < n; ++i) {
    dst[i] = dst[i] + a * x[i];
  }
}

void accumulate(double *dst, const double *x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i),
                                            _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) {
    dst[i] = dst[i] + x[i];
  }
}

void relu(double *dst, const double *a, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(dst + i, _mm256_max_pd(_mm256_loadu_pd(a + i), zero));
  }
  for (; i < n; ++i) {
    dst[i] = a[i] > 0.0 ? a[i] : 0.0;
  }
}

void relu_backward(double *dst, const double *g, const double *act,
                   std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(act + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(dst + i, _mm256_and_pd(_mm256_loadu_pd(g + i), mask));
  }
  for (; i < n; ++i) {
    dst[i] = act[i] > 0.0 ? g[i] : 0.0;
  }
}

double reduce_sum(const double *a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  }
  alignas(32) double p[4];
  _mm256_store_pd(p, acc);
  for (std::size_t t = 0; i + t < n; ++t) {
    p[t] += a[i + t];
  }
  return (p[0] + p[1]) + (p[2] + p[3]);
}

double reduce_max(const double *a, std::size_t n) {
  if (n < 8) {
    double m = a[0];
    for (std::size_t i = 1; i < n; ++i) {
      m = std::max(m, a[i]);
    }
    return m;
  }
  __m256d acc = _mm256_loadu_pd(a);
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_max_pd(acc, _mm256_loadu_pd(a + i));
  }
  alignas(32) double p[4];
  _mm256_store_pd(p, acc);
  double m = std::max(std::max(p[0], p[1]), std::max(p[2], p[3]));
  for (; i < n; ++i) {
    m = std::max(m, a[i]);
  }
  return m;
}

double dot(const double *a, const double *b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc,
                        _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  alignas(32) double p[4];
  _mm256_store_pd(p, acc);
  for (std::size_t t = 0; i + t < n; ++t) {
    p[t] += a[i + t] * b[i + t];
  }
  return (p[0] + p[1]) + (p[2] + p[3]);
}

void matmul_acc(double *c, const double *a, const double *b, std::size_t m,
                std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double *crow = c + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = a[i * k + kk];
      const double *brow = b + kk * n;
      const __m256d va = _mm256_set1_pd(aik);
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(brow + j));
        _mm256_storeu_pd(crow + j,
                         _mm256_add_pd(_mm256_loadu_pd(crow + j), prod));
      }
      for (; j < n; ++j) {
        crow[j] = crow[j] + aik * brow[j];
      }
    }
  }
}

}  // namespace

extern const KernelTable kTable = {
    add,        sub,        mul,  scale,      axpy, accumulate,
    relu,       relu_backward,
    reduce_sum, reduce_max, dot,  matmul_acc,
};

bool runtime_supported() {
  return __builtin_cpu_supports("avx2") != 0;
}

}  // namespace mgm::kernels::avx2
