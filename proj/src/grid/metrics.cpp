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
#include <cmath>

#include "wemg/error.hpp"
#include "wemg/grid.hpp"

namespace wemg::grid {

std::vector<double> pairwise_distances(const ChannelSubset& subset, const ElectrodeLayout& layout) {
  validate_subset(subset, layout);
  if (subset.ids.size() < 2) throw Error("degenerate subset: Dist needs at least two electrodes");
  std::vector<double> out;
  out.reserve(subset.ids.size() * (subset.ids.size() - 1) / 2);
  for (std::size_t i = 0; i < subset.ids.size(); ++i) {
    const Point p = layout.electrode(subset.ids[i]).coord;
    for (std::size_t j = i + 1; j < subset.ids.size(); ++j) {
      const Point q = layout.electrode(subset.ids[j]).coord;
      out.push_back(std::hypot(p.x - q.x, p.y - q.y));
    }
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double dist_metric(const ChannelSubset& subset, const ElectrodeLayout& layout) {
  return median(pairwise_distances(subset, layout));
}

double fom(double accuracy, double dist) {
  if (!(dist > 0.0)) throw Error("degenerate geometry: FOM needs Dist > 0");
  return accuracy / dist;
}

DensityClass classify_density(const ChannelSubset& subset, const ElectrodeLayout& layout) {
  if (layout.geometry() != Geometry::kGrid) throw Error("density undefined for this layout");
  validate_subset(subset, layout);

  const std::size_t n = subset.ids.size();
  std::vector<int> edge_degree(n, 0);
  std::vector<int> corner_degree(n, 0);
  bool any_close_pair = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Electrode& a = layout.electrode(subset.ids[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      const Electrode& b = layout.electrode(subset.ids[j]);
      // The two grids are physically separate patches.
      if (a.grid_id != b.grid_id) continue;
      const double dx = std::abs(a.coord.x - b.coord.x);
      const double dy = std::abs(a.coord.y - b.coord.y);
      if (dx + dy == 1.0) {
        ++edge_degree[i];
        ++edge_degree[j];
      } else if (dx == 1.0 && dy == 1.0) {
        ++corner_degree[i];
        ++corner_degree[j];
      }
      if (std::max(dx, dy) < 2.0) any_close_pair = true;
    }
  }

  const bool every_has_edge = std::all_of(edge_degree.begin(), edge_degree.end(), [](int d) { return d > 0; });
  if (every_has_edge) return DensityClass::kHigh;
  const bool no_edges = std::all_of(edge_degree.begin(), edge_degree.end(), [](int d) { return d == 0; });
  const bool every_has_corner =
      std::all_of(corner_degree.begin(), corner_degree.end(), [](int d) { return d > 0; });
  if (no_edges && every_has_corner) return DensityClass::kMedium;
  if (!any_close_pair) return DensityClass::kLow;
  return DensityClass::kInvalid;
}

}  // namespace wemg::grid
