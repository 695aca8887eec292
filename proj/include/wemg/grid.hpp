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

// Electrode geometry for the two wrist sensors, channel-subset selection
// under region/count/density constraints, and the spatial metrics Dist
// (median pairwise distance) and FOM (accuracy / Dist).
//
// Coordinates are in pitch units: 1 unit = 5 mm inter-contact spacing.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wemg/matrix.hpp"

namespace wemg::grid {

enum class Region { kExtensor, kFlexor };
enum class RegionSelector { kExtensor, kFlexor, kAll };
enum class Scheme { kMonopolar, kBipolar };
/// kGrid layouts have integer lattice coordinates and support density
/// classification; kRing layouts are 1-D unwrapped circumference positions.
enum class Geometry { kGrid, kRing };
enum class DensityClass { kHigh, kMedium, kLow, kInvalid };

std::string_view to_string(Region r) noexcept;
std::string_view to_string(RegionSelector r) noexcept;
std::string_view to_string(Scheme s) noexcept;
std::string_view to_string(Geometry g) noexcept;
std::string_view to_string(DensityClass d) noexcept;
Region parse_region(std::string_view s);
RegionSelector parse_region_selector(std::string_view s);
Scheme parse_scheme(std::string_view s);
DensityClass parse_density(std::string_view s);

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

struct Electrode {
  int id = 0;
  Point coord;
  Region region = Region::kExtensor;
  int grid_id = 0;
  bool operator==(const Electrode&) const = default;
};

class ElectrodeLayout {
 public:
  /// Validates: ids unique and contiguous from 1, coordinates distinct.
  /// Electrodes are stored sorted by id.
  ElectrodeLayout(std::string name, Scheme scheme, Geometry geometry,
                  std::vector<Electrode> electrodes, nlohmann::json metadata = nlohmann::json::object());

  const std::string& name() const noexcept { return name_; }
  Scheme scheme() const noexcept { return scheme_; }
  Geometry geometry() const noexcept { return geometry_; }
  const std::vector<Electrode>& electrodes() const noexcept { return electrodes_; }
  const nlohmann::json& metadata() const noexcept { return metadata_; }
  std::size_t size() const noexcept { return electrodes_.size(); }

  /// 1-based id lookup; throws on unknown id.
  const Electrode& electrode(int id) const;
  bool contains(int id) const noexcept { return id >= 1 && static_cast<std::size_t>(id) <= electrodes_.size(); }

  bool operator==(const ElectrodeLayout&) const = default;

 private:
  std::string name_;
  Scheme scheme_;
  Geometry geometry_;
  std::vector<Electrode> electrodes_;
  nlohmann::json metadata_;
};

struct ChannelSubset {
  std::string layout;
  std::vector<int> ids;
  bool operator==(const ChannelSubset&) const = default;
};

/// Throws unless ids are non-empty, unique and present in `layout`.
void validate_subset(const ChannelSubset& subset, const ElectrodeLayout& layout);

/// Two 4x4 monopolar grids, 32 electrodes. Extensor ids 1-16 occupy
/// x,y in 0..3; flexor ids 17-32 occupy x in 4+gap..7+gap. Row-major ids.
ElectrodeLayout build_maize_layout(int grid_gap = 4);

/// 15 bipolar channels equally spaced along an unwrapped wrist ring (y = 0).
/// Channels with x < extensor_arc * circumference are extensor-side.
/// Sticks of 4, 4, 4 and 3 channels give the grid ids.
ElectrodeLayout build_quattro_layout(double circumference = 30.0, double extensor_arc = 0.5);

/// All N(N-1)/2 Euclidean distances, pairs (i, j) with i < j in subset order.
std::vector<double> pairwise_distances(const ChannelSubset& subset, const ElectrodeLayout& layout);

/// Median of the pairwise distances (mean of the two central values for an
/// even count).
double dist_metric(const ChannelSubset& subset, const ElectrodeLayout& layout);

double median(std::vector<double> values);

/// Figure of merit acc / dist.
double fom(double accuracy, double dist);

DensityClass classify_density(const ChannelSubset& subset, const ElectrodeLayout& layout);

ChannelSubset region_filter(const ElectrodeLayout& layout, RegionSelector region);

struct SampleRequest {
  std::size_t n = 1;
  std::optional<DensityClass> density;  // nullopt: unconstrained
  RegionSelector region = RegionSelector::kAll;
  std::uint64_t seed = 0;
  std::size_t max_attempts = 100000;
};

/// Uniform rejection sampling over n-subsets of the selected region until the
/// density class matches. Returned ids are sorted ascending.
ChannelSubset sample_subset(const ElectrodeLayout& layout, const SampleRequest& request);

/// Union of an unconstrained n_extensor-subset of the extensor electrodes and
/// an n_flexor-subset of the flexor electrodes (the 8 + 7 M-mono-15 scheme).
ChannelSubset sample_split_subset(const ElectrodeLayout& layout, std::size_t n_extensor,
                                  std::size_t n_flexor, std::uint64_t seed);

using ChannelPair = std::pair<int, int>;

/// (1,2), (3,4), ..., (31,32): odd-even pairing of the 32 Maize channels.
std::vector<ChannelPair> default_maize_pairing();

/// Row k of the result is row(i) - row(j) of the k-th pair. Pair indices are
/// 1-based channel numbers. Pairs must be in range and mutually disjoint.
template <class T>
Matrix<T> derive_bipolar(const Matrix<T>& signals, std::span<const ChannelPair> pairing);

/// Layout matching derive_bipolar: channel k sits at the midpoint of its pair
/// and keeps the pair's region and grid. Pairs must not span regions.
ElectrodeLayout derive_bipolar_layout(const ElectrodeLayout& layout, std::span<const ChannelPair> pairing);

nlohmann::json to_json(const ElectrodeLayout& layout);
ElectrodeLayout layout_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ChannelSubset& subset);
ChannelSubset subset_from_json(const nlohmann::json& j);

}  // namespace wemg::grid
