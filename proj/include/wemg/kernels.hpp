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

// Data-parallel inner loops used by the network layers, the normalizer and
// the metrics. Every kernel has a scalar reference implementation; SIMD
// variants are selected once at runtime from the CPU features and can be
// overridden with WEMG_KERNELS=scalar|avx2.

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace wemg::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // sum_i x[i]
  double (*sum)(const double* x, std::size_t n);
  // sum_i (x[i] - mean)^2
  double (*sum_sq_dev)(const double* x, std::size_t n, double mean);
  // y[i] = (x[i] - center) * scale  (x may alias y)
  void (*center_scale)(const double* x, double* y, std::size_t n, double center, double scale);
  // y[i] += x[i] * z[i]
  void (*mul_acc)(const double* x, const double* z, double* y, std::size_t n);
  // C += A * B, row-major with leading dimensions; A is m x k, B is k x n.
  // Each C element accumulates its k products in ascending k order.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
               std::size_t ldb, double* c, std::size_t ldc);
  // true iff no element is NaN or infinite
  bool (*all_finite)(const double* x, std::size_t n);
};

const KernelTable& scalar_table() noexcept;
/// nullptr when the variant was not compiled in.
const KernelTable* avx2_table() noexcept;

bool isa_available(Isa isa) noexcept;

/// The table used by the library. Chosen on first call.
const KernelTable& active() noexcept;
Isa active_isa() noexcept;

/// Switches the process-wide table. Intended for tests and benchmarks; must
/// not race with running computations. Returns false if `isa` is unavailable.
bool set_active_isa(Isa isa) noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }
inline double sum_sq_dev(std::span<const double> x, double mean) {
  return active().sum_sq_dev(x.data(), x.size(), mean);
}
inline void center_scale(std::span<const double> x, std::span<double> y, double center, double scale) {
  active().center_scale(x.data(), y.data(), x.size(), center, scale);
}
inline void mul_acc(std::span<const double> x, std::span<const double> z, std::span<double> y) {
  active().mul_acc(x.data(), z.data(), y.data(), x.size());
}
inline void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
                 std::size_t ldb, double* c, std::size_t ldc) {
  active().gemm(m, n, k, a, lda, b, ldb, c, ldc);
}
inline bool all_finite(std::span<const double> x) { return active().all_finite(x.data(), x.size()); }

}  // namespace wemg::kernels
