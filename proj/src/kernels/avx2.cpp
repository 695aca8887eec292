// Copyright 2026 The wemg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma
// and is only entered after the dispatcher has checked the CPU flags.

#include <immintrin.h>

#include <cmath>

#include "wemg/kernels.hpp"

namespace wemg::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i];
  return s;
}

double sum_sq_dev_avx2(const double* x, std::size_t n, double mean) {
  const __m256d vm = _mm256_set1_pd(mean);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), vm);
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - mean;
    s += d * d;
  }
  return s;
}

void center_scale_avx2(const double* x, double* y, std::size_t n, double center, double scale) {
  const __m256d vs = _mm256_set1_pd(scale);
  const __m256d vc = _mm256_set1_pd(center);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(x + i), vc), vs));
  }
  for (; i < n; ++i) y[i] = (x[i] - center) * scale;
}

void mul_acc_avx2(const double* x, const double* z, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(z + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += x[i] * z[i];
}

// One row of C against 8 columns of B.
inline void gemm_row8(std::size_t k, const double* a, const double* b, std::size_t ldb, double* c) {
  __m256d c0 = _mm256_loadu_pd(c), c1 = _mm256_loadu_pd(c + 4);
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d ap = _mm256_broadcast_sd(a + p);
    c0 = _mm256_fmadd_pd(ap, _mm256_loadu_pd(b + p * ldb), c0);
    c1 = _mm256_fmadd_pd(ap, _mm256_loadu_pd(b + p * ldb + 4), c1);
  }
  _mm256_storeu_pd(c, c0);
  _mm256_storeu_pd(c + 4, c1);
}

// Four rows of C against 8 columns of B: 8 accumulators, 2 loads and
// 4 broadcasts per 8 FMAs.
inline void gemm_tile4x8(std::size_t k, const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c,
                         std::size_t ldc) {
  __m256d c00 = _mm256_loadu_pd(c), c01 = _mm256_loadu_pd(c + 4);
  __m256d c10 = _mm256_loadu_pd(c + ldc), c11 = _mm256_loadu_pd(c + ldc + 4);
  __m256d c20 = _mm256_loadu_pd(c + 2 * ldc), c21 = _mm256_loadu_pd(c + 2 * ldc + 4);
  __m256d c30 = _mm256_loadu_pd(c + 3 * ldc), c31 = _mm256_loadu_pd(c + 3 * ldc + 4);
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b + p * ldb);
    const __m256d b1 = _mm256_loadu_pd(b + p * ldb + 4);
    __m256d ap = _mm256_broadcast_sd(a + p);
    c00 = _mm256_fmadd_pd(ap, b0, c00);
    c01 = _mm256_fmadd_pd(ap, b1, c01);
    ap = _mm256_broadcast_sd(a + lda + p);
    c10 = _mm256_fmadd_pd(ap, b0, c10);
    c11 = _mm256_fmadd_pd(ap, b1, c11);
    ap = _mm256_broadcast_sd(a + 2 * lda + p);
    c20 = _mm256_fmadd_pd(ap, b0, c20);
    c21 = _mm256_fmadd_pd(ap, b1, c21);
    ap = _mm256_broadcast_sd(a + 3 * lda + p);
    c30 = _mm256_fmadd_pd(ap, b0, c30);
    c31 = _mm256_fmadd_pd(ap, b1, c31);
  }
  _mm256_storeu_pd(c, c00);
  _mm256_storeu_pd(c + 4, c01);
  _mm256_storeu_pd(c + ldc, c10);
  _mm256_storeu_pd(c + ldc + 4, c11);
  _mm256_storeu_pd(c + 2 * ldc, c20);
  _mm256_storeu_pd(c + 2 * ldc + 4, c21);
  _mm256_storeu_pd(c + 3 * ldc, c30);
  _mm256_storeu_pd(c + 3 * ldc + 4, c31);
}

// Columns past the last multiple of 8, one C element at a time.
inline void gemm_tail(std::size_t rows, std::size_t j0, std::size_t n, std::size_t k, const double* a,
                      std::size_t lda, const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = j0; j < n; ++j) {
      double acc = c[i * ldc + j];
      for (std::size_t p = 0; p < k; ++p) acc = std::fma(a[i * lda + p], b[p * ldb + j], acc);
      c[i * ldc + j] = acc;
    }
  }
}

void gemm_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
               std::size_t ldb, double* c, std::size_t ldc) {
  const std::size_t n8 = n - n % 8;
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    for (std::size_t j = 0; j < n8; j += 8) gemm_tile4x8(k, a + i * lda, lda, b + j, ldb, c + i * ldc + j, ldc);
  }
  for (; i < m; ++i) {
    for (std::size_t j = 0; j < n8; j += 8) gemm_row8(k, a + i * lda, b + j, ldb, c + i * ldc + j);
  }
  if (n8 < n) gemm_tail(m, n8, n, k, a, lda, b, ldb, c, ldc);
}

bool all_finite_avx2(const double* x, std::size_t n) {
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  const __m256d max = _mm256_set1_pd(1.7976931348623157e308);
  __m256d ok = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // NaN compares false, so it clears the lane.
    ok = _mm256_and_pd(ok, _mm256_cmp_pd(_mm256_and_pd(_mm256_loadu_pd(x + i), abs_mask), max, _CMP_LE_OQ));
  }
  if (_mm256_movemask_pd(ok) != 0xf) return false;
  for (; i < n; ++i) {
    if (!std::isfinite(x[i])) return false;
  }
  return true;
}

constexpr KernelTable kAvx2Table{
    Isa::kAvx2,   dot_avx2,     axpy_avx2,      sum_avx2,        sum_sq_dev_avx2, center_scale_avx2,
    mul_acc_avx2, gemm_avx2, all_finite_avx2,
};

}  // namespace

namespace detail {
const KernelTable* avx2_table_impl() noexcept { return &kAvx2Table; }
}  // namespace detail

}  // namespace wemg::kernels
