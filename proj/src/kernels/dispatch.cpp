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

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "wemg/kernels.hpp"

namespace wemg::kernels {

#if defined(WEMG_HAVE_AVX2)
namespace detail {
const KernelTable* avx2_table_impl() noexcept;
}
#endif

namespace {

bool cpu_has_avx2() noexcept {
#if defined(WEMG_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* pick_default() noexcept {
  const char* env = std::getenv("WEMG_KERNELS");
  if (env != nullptr && std::string_view(env) == "scalar") return &scalar_table();
  if (const KernelTable* t = avx2_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() noexcept {
  static std::atomic<const KernelTable*> table{pick_default()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable* avx2_table() noexcept {
#if defined(WEMG_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? detail::avx2_table_impl() : nullptr;
#else
  return nullptr;
#endif
}

bool isa_available(Isa isa) noexcept {
  return isa == Isa::kScalar || (isa == Isa::kAvx2 && avx2_table() != nullptr);
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_relaxed); }

Isa active_isa() noexcept { return active().isa; }

bool set_active_isa(Isa isa) noexcept {
  if (!isa_available(isa)) return false;
  slot().store(isa == Isa::kAvx2 ? avx2_table() : &scalar_table(), std::memory_order_relaxed);
  return true;
}

}  // namespace wemg::kernels
