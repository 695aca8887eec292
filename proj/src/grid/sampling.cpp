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

#include <algorithm>
#include <string>

#include "wemg/error.hpp"
#include "wemg/grid.hpp"
#include "wemg/rng.hpp"

namespace wemg::grid {
namespace {

// Partial Fisher-Yates: the first n entries of `pool` become a uniform
// n-subset.
void draw_prefix(std::vector<int>& pool, std::size_t n, Rng& rng) {
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(pool[i], pool[i + uniform_index(rng, pool.size() - i)]);
  }
}

}  // namespace

ChannelSubset sample_subset(const ElectrodeLayout& layout, const SampleRequest& request) {
  if (request.max_attempts < 1) throw Error("max_attempts must be >= 1");
  if (request.density && layout.geometry() != Geometry::kGrid) {
    throw Error("density undefined for this layout");
  }
  const std::vector<int> region_ids = region_filter(layout, request.region).ids;
  if (request.n < 1 || request.n > region_ids.size()) {
    throw Error("cannot draw " + std::to_string(request.n) + " electrodes from " +
                std::to_string(region_ids.size()) + " in region '" + std::string(to_string(request.region)) + "'");
  }

  Rng rng(request.seed);
  std::vector<int> pool = region_ids;
  ChannelSubset candidate{layout.name(), {}};
  for (std::size_t attempt = 0; attempt < request.max_attempts; ++attempt) {
    // Restart from the canonical order so each attempt is a fresh uniform draw.
    std::copy(region_ids.begin(), region_ids.end(), pool.begin());
    draw_prefix(pool, request.n, rng);
    candidate.ids.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(request.n));
    std::sort(candidate.ids.begin(), candidate.ids.end());
    if (!request.density || classify_density(candidate, layout) == *request.density) return candidate;
  }
  throw Error("constraint unsatisfiable or attempts exhausted: no " +
              std::string(request.density ? to_string(*request.density) : "unconstrained") + " subset of " +
              std::to_string(request.n) + " electrodes after " + std::to_string(request.max_attempts) +
              " attempts");
}

ChannelSubset sample_split_subset(const ElectrodeLayout& layout, std::size_t n_extensor, std::size_t n_flexor,
                                  std::uint64_t seed) {
  ChannelSubset ext = sample_subset(
      layout, {.n = n_extensor, .density = std::nullopt, .region = RegionSelector::kExtensor, .seed = derive_seed(seed, {0})});
  ChannelSubset flex =
      sample_subset(layout, {.n = n_flexor, .density = std::nullopt, .region = RegionSelector::kFlexor, .seed = derive_seed(seed, {1})});
  ext.ids.insert(ext.ids.end(), flex.ids.begin(), flex.ids.end());
  std::sort(ext.ids.begin(), ext.ids.end());
  return ext;
}

}  // namespace wemg::grid
