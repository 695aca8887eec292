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


// Every SIMD variant must agree with the scalar reference. Reductions may
// reassociate, so they are compared to a tolerance scaled by the sum of
// absolute terms; elementwise kernels without FMA must be bit-identical.

#include <cmath>
#include <vector>

#include "doctest.h"
#include "support/test_support.hpp"
#include "wemg/kernels.hpp"

using wemg::kernels::Isa;
using wemg::testing::random_vector;

namespace {

std::vector<const wemg::kernels::KernelTable*> simd_tables() {
  std::vector<const wemg::kernels::KernelTable*> out;
  if (wemg::kernels::isa_available(Isa::kAvx2)) out.push_back(wemg::kernels::avx2_table());
  return out;
}

constexpr double kEps = 2.220446049250313e-16;

}  // namespace

TEST_CASE("scalar reference kernels match naive loops") {
  const auto& ref = wemg::kernels::scalar_table();
  const auto a = random_vector(37, 1);
  const auto b = random_vector(37, 2);
  double want = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) want += a[i] * b[i];
  CHECK(ref.dot(a.data(), b.data(), a.size()) == want);
  CHECK(ref.sum(a.data(), 0) == 0.0);
  std::vector<double> y(4, 1.0);
  const std::vector<double> x{2.0, 4.0, 6.0, 8.0};
  ref.center_scale(x.data(), y.data(), 4, 5.0, 0.5);
  CHECK(y == std::vector<double>{-1.5, -0.5, 0.5, 1.5});
}

TEST_CASE("simd kernels agree with the scalar reference for all tail lengths") {
  const auto& ref = wemg::kernels::scalar_table();
  for (const auto* simd : simd_tables()) {
    CAPTURE(wemg::kernels::isa_name(simd->isa));
    for (std::size_t n = 0; n <= 67; ++n) {
      CAPTURE(n);
      const auto a = random_vector(n, 100 + n, -3.0, 3.0);
      const auto b = random_vector(n, 200 + n, -3.0, 3.0);
      const auto z = random_vector(n, 300 + n, -3.0, 3.0);
      double abs_dot = 0.0, abs_sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        abs_dot += std::abs(a[i] * b[i]);
        abs_sum += std::abs(a[i]);
      }
      const double tol = 4.0 * static_cast<double>(n + 1) * kEps;
      CHECK(std::abs(simd->dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= tol * abs_dot);
      CHECK(std::abs(simd->sum(a.data(), n) - ref.sum(a.data(), n)) <= tol * abs_sum);

      const double mean = 0.3;
      double abs_dev = 0.0;
      for (double v : a) abs_dev += (v - mean) * (v - mean);
      CHECK(std::abs(simd->sum_sq_dev(a.data(), n, mean) - ref.sum_sq_dev(a.data(), n, mean)) <= tol * abs_dev);

      std::vector<double> y_ref = b, y_simd = b;
      ref.axpy(0.7, a.data(), y_ref.data(), n);
      simd->axpy(0.7, a.data(), y_simd.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(std::abs(y_simd[i] - y_ref[i]) <= 4 * kEps * (std::abs(b[i]) + std::abs(0.7 * a[i])));
      }

      y_ref = b;
      y_simd = b;
      ref.mul_acc(a.data(), z.data(), y_ref.data(), n);
      simd->mul_acc(a.data(), z.data(), y_simd.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(std::abs(y_simd[i] - y_ref[i]) <= 4 * kEps * (std::abs(b[i]) + std::abs(a[i] * z[i])));
      }

      std::vector<double> c_ref(n), c_simd(n);
      ref.center_scale(a.data(), c_ref.data(), n, 0.25, 1.75);
      simd->center_scale(a.data(), c_simd.data(), n, 0.25, 1.75);
      CHECK(c_ref == c_simd);
      // in place
      std::vector<double> inplace = a;
      simd->center_scale(inplace.data(), inplace.data(), n, 0.25, 1.75);
      CHECK(inplace == c_ref);
    }
  }
}

TEST_CASE("dispatch can be switched and restored") {
  const Isa initial = wemg::kernels::active_isa();
  CHECK(wemg::kernels::set_active_isa(Isa::kScalar));
  CHECK(wemg::kernels::active_isa() == Isa::kScalar);
  CHECK(wemg::kernels::isa_name(Isa::kScalar) == "scalar");
  CHECK(wemg::kernels::set_active_isa(initial));
  CHECK(wemg::kernels::active_isa() == initial);
  if (!wemg::kernels::isa_available(Isa::kAvx2)) {
    CHECK_FALSE(wemg::kernels::set_active_isa(Isa::kAvx2));
  }
}
