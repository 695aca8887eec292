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


// Brute-force references for the grid metrics and density classes. These
// rebuild Maize coordinates from the id formula and never call into the
// library's geometry code.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "wemg/grid.hpp"

namespace wemg::testing {

struct GridCell {
  int x;
  int y;
  int grid;
};

/// Maize id (1-based) to lattice position with the given gap between grids.
inline GridCell maize_cell(int id, int grid_gap = 4) {
  const int k = id - 1;
  const int grid = k / 16;
  const int local = k % 16;
  return {(grid == 0 ? 0 : 4 + grid_gap) + local % 4, local / 4, grid};
}

inline double oracle_dist(const std::vector<int>& ids, int grid_gap = 4) {
  std::vector<double> d;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      const GridCell a = maize_cell(ids[i], grid_gap);
      const GridCell b = maize_cell(ids[j], grid_gap);
      const double dx = a.x - b.x;
      const double dy = a.y - b.y;
      d.push_back(std::sqrt(dx * dx + dy * dy));
    }
  }
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size();
  return m % 2 == 1 ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
}

inline grid::DensityClass oracle_density(const std::vector<int>& ids, int grid_gap = 4) {
  bool all_edge = true, all_corner = true, any_edge = false, any_close = false;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    bool has_edge = false, has_corner = false;
    for (std::size_t j = 0; j < ids.size(); ++j) {
      if (i == j) continue;
      const GridCell a = maize_cell(ids[i], grid_gap);
      const GridCell b = maize_cell(ids[j], grid_gap);
      if (a.grid != b.grid) continue;
      const int dx = std::abs(a.x - b.x);
      const int dy = std::abs(a.y - b.y);
      if (dx + dy == 1) has_edge = true;
      if (dx == 1 && dy == 1) has_corner = true;
      if (std::max(dx, dy) <= 1) any_close = true;
    }
    all_edge = all_edge && has_edge;
    all_corner = all_corner && has_corner;
    any_edge = any_edge || has_edge;
  }
  if (all_edge) return grid::DensityClass::kHigh;
  if (!any_edge && all_corner) return grid::DensityClass::kMedium;
  if (!any_close) return grid::DensityClass::kLow;
  return grid::DensityClass::kInvalid;
}

/// All n-subsets of `pool` (ascending ids) as bitmasks over id-1.
inline std::vector<std::uint32_t> enumerate_subsets(const std::vector<int>& pool, int n) {
  std::vector<std::uint32_t> out;
  const int m = static_cast<int>(pool.size());
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    if (std::popcount(mask) != n) continue;
    std::uint32_t ids = 0;
    for (int b = 0; b < m; ++b) {
      if (mask & (1u << b)) ids |= 1u << (pool[b] - 1);
    }
    out.push_back(ids);
  }
  return out;
}

inline std::vector<int> mask_to_ids(std::uint32_t mask) {
  std::vector<int> ids;
  for (int b = 0; b < 32; ++b) {
    if (mask & (1u << b)) ids.push_back(b + 1);
  }
  return ids;
}

inline std::uint32_t ids_to_mask(const std::vector<int>& ids) {
  std::uint32_t m = 0;
  for (int id : ids) m |= 1u << (id - 1);
  return m;
}

}  // namespace wemg::testing
