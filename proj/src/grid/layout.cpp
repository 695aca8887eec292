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
#include <set>
#include <string>

#include "wemg/error.hpp"
#include "wemg/grid.hpp"

namespace wemg::grid {

std::string_view to_string(Region r) noexcept { return r == Region::kExtensor ? "extensor" : "flexor"; }

std::string_view to_string(RegionSelector r) noexcept {
  switch (r) {
    case RegionSelector::kExtensor:
      return "extensor";
    case RegionSelector::kFlexor:
      return "flexor";
    case RegionSelector::kAll:
      return "all";
  }
  return "all";
}

std::string_view to_string(Scheme s) noexcept { return s == Scheme::kMonopolar ? "monopolar" : "bipolar"; }

std::string_view to_string(Geometry g) noexcept { return g == Geometry::kGrid ? "grid" : "ring"; }

std::string_view to_string(DensityClass d) noexcept {
  switch (d) {
    case DensityClass::kHigh:
      return "high";
    case DensityClass::kMedium:
      return "medium";
    case DensityClass::kLow:
      return "low";
    case DensityClass::kInvalid:
      return "invalid";
  }
  return "invalid";
}

Region parse_region(std::string_view s) {
  if (s == "extensor") return Region::kExtensor;
  if (s == "flexor") return Region::kFlexor;
  throw FormatError("unknown region '" + std::string(s) + "'");
}

RegionSelector parse_region_selector(std::string_view s) {
  if (s == "all") return RegionSelector::kAll;
  return parse_region(s) == Region::kExtensor ? RegionSelector::kExtensor : RegionSelector::kFlexor;
}

Scheme parse_scheme(std::string_view s) {
  if (s == "monopolar") return Scheme::kMonopolar;
  if (s == "bipolar") return Scheme::kBipolar;
  throw FormatError("unknown reference scheme '" + std::string(s) + "'");
}

DensityClass parse_density(std::string_view s) {
  if (s == "high") return DensityClass::kHigh;
  if (s == "medium") return DensityClass::kMedium;
  if (s == "low") return DensityClass::kLow;
  if (s == "invalid") return DensityClass::kInvalid;
  throw FormatError("unknown density class '" + std::string(s) + "'");
}

ElectrodeLayout::ElectrodeLayout(std::string name, Scheme scheme, Geometry geometry,
                                 std::vector<Electrode> electrodes, nlohmann::json metadata)
    : name_(std::move(name)),
      scheme_(scheme),
      geometry_(geometry),
      electrodes_(std::move(electrodes)),
      metadata_(std::move(metadata)) {
  if (electrodes_.empty()) throw Error("layout '" + name_ + "' has no electrodes");
  std::sort(electrodes_.begin(), electrodes_.end(),
            [](const Electrode& a, const Electrode& b) { return a.id < b.id; });
  std::set<std::pair<double, double>> coords;
  for (std::size_t i = 0; i < electrodes_.size(); ++i) {
    if (electrodes_[i].id != static_cast<int>(i) + 1) {
      throw Error("layout '" + name_ + "': electrode ids must be unique and contiguous from 1");
    }
    if (!coords.insert({electrodes_[i].coord.x, electrodes_[i].coord.y}).second) {
      throw Error("layout '" + name_ + "': electrode " + std::to_string(electrodes_[i].id) +
                  " shares a coordinate with another electrode");
    }
  }
}

const Electrode& ElectrodeLayout::electrode(int id) const {
  if (!contains(id)) {
    throw Error("electrode id " + std::to_string(id) + " not in layout '" + name_ + "'");
  }
  return electrodes_[static_cast<std::size_t>(id - 1)];
}

void validate_subset(const ChannelSubset& subset, const ElectrodeLayout& layout) {
  if (subset.ids.empty()) throw Error("channel subset is empty");
  if (!subset.layout.empty() && subset.layout != layout.name()) {
    throw Error("subset refers to layout '" + subset.layout + "' but '" + layout.name() + "' was given");
  }
  std::set<int> seen;
  for (int id : subset.ids) {
    if (!layout.contains(id)) {
      throw Error("subset id " + std::to_string(id) + " not in layout '" + layout.name() + "'");
    }
    if (!seen.insert(id).second) throw Error("subset contains duplicate id " + std::to_string(id));
  }
}

ElectrodeLayout build_maize_layout(int grid_gap) {
  if (grid_gap < 1) throw Error("grid_gap must be >= 1");
  std::vector<Electrode> electrodes;
  electrodes.reserve(32);
  for (int grid = 0; grid < 2; ++grid) {
    const int x0 = grid == 0 ? 0 : 4 + grid_gap;
    for (int row = 0; row < 4; ++row) {
      for (int col = 0; col < 4; ++col) {
        electrodes.push_back({
            .id = grid * 16 + row * 4 + col + 1,
            .coord = {static_cast<double>(x0 + col), static_cast<double>(row)},
            .region = grid == 0 ? Region::kExtensor : Region::kFlexor,
            .grid_id = grid + 1,
        });
      }
    }
  }
  nlohmann::json meta = {{"grid_gap", grid_gap}, {"pitch_mm", 5.0}, {"grid_shape", {4, 4}}};
  return ElectrodeLayout("maize", Scheme::kMonopolar, Geometry::kGrid, std::move(electrodes), std::move(meta));
}

ElectrodeLayout build_quattro_layout(double circumference, double extensor_arc) {
  if (!(circumference > 0.0)) throw Error("wrist circumference must be positive");
  if (!(extensor_arc > 0.0 && extensor_arc < 1.0)) throw Error("extensor_arc must be in (0, 1)");
  constexpr int kChannels = 15;
  constexpr int kStickSizes[] = {4, 4, 4, 3};
  const double spacing = circumference / kChannels;
  std::vector<Electrode> electrodes;
  int extensor_count = 0;
  int id = 1;
  for (int stick = 0; stick < 4; ++stick) {
    for (int k = 0; k < kStickSizes[stick]; ++k, ++id) {
      const double x = (id - 1) * spacing;
      const bool ext = x < extensor_arc * circumference;
      extensor_count += ext ? 1 : 0;
      electrodes.push_back({
          .id = id,
          .coord = {x, 0.0},
          .region = ext ? Region::kExtensor : Region::kFlexor,
          .grid_id = stick + 1,
      });
    }
  }
  nlohmann::json meta = {{"circumference", circumference},
                         {"spacing", spacing},
                         {"extensor_arc", extensor_arc},
                         {"extensor_count", extensor_count},
                         {"flexor_count", kChannels - extensor_count},
                         {"pitch_mm", 5.0}};
  return ElectrodeLayout("quattro", Scheme::kBipolar, Geometry::kRing, std::move(electrodes), std::move(meta));
}

ChannelSubset region_filter(const ElectrodeLayout& layout, RegionSelector region) {
  ChannelSubset out{layout.name(), {}};
  for (const Electrode& e : layout.electrodes()) {
    const bool keep = region == RegionSelector::kAll ||
                      (region == RegionSelector::kExtensor && e.region == Region::kExtensor) ||
                      (region == RegionSelector::kFlexor && e.region == Region::kFlexor);
    if (keep) out.ids.push_back(e.id);
  }
  return out;
}

std::vector<ChannelPair> default_maize_pairing() {
  std::vector<ChannelPair> pairs;
  for (int i = 1; i < 32; i += 2) pairs.emplace_back(i, i + 1);
  return pairs;
}

template <class T>
Matrix<T> derive_bipolar(const Matrix<T>& signals, std::span<const ChannelPair> pairing) {
  if (pairing.empty()) throw Error("bipolar pairing is empty");
  const auto rows = static_cast<int>(signals.rows());
  std::vector<bool> used(signals.rows(), false);
  for (const auto& [i, j] : pairing) {
    if (i < 1 || j < 1 || i > rows || j > rows) {
      throw Error("bipolar pair (" + std::to_string(i) + "," + std::to_string(j) + ") out of range 1.." +
                  std::to_string(rows));
    }
    if (i == j || used[i - 1] || used[j - 1]) {
      throw Error("bipolar pairs overlap at (" + std::to_string(i) + "," + std::to_string(j) + ")");
    }
    used[i - 1] = used[j - 1] = true;
  }
  Matrix<T> out(pairing.size(), signals.cols());
  for (std::size_t k = 0; k < pairing.size(); ++k) {
    const auto a = signals.row(static_cast<std::size_t>(pairing[k].first - 1));
    const auto b = signals.row(static_cast<std::size_t>(pairing[k].second - 1));
    auto dst = out.row(k);
    for (std::size_t t = 0; t < dst.size(); ++t) dst[t] = a[t] - b[t];
  }
  return out;
}

template Matrix<float> derive_bipolar(const Matrix<float>&, std::span<const ChannelPair>);
template Matrix<double> derive_bipolar(const Matrix<double>&, std::span<const ChannelPair>);

ElectrodeLayout derive_bipolar_layout(const ElectrodeLayout& layout, std::span<const ChannelPair> pairing) {
  if (layout.scheme() != Scheme::kMonopolar) throw Error("bipolar derivation needs a monopolar layout");
  // Same range and overlap checks as the signal derivation.
  derive_bipolar(MatrixD(layout.size(), 0), pairing);
  std::vector<Electrode> electrodes;
  for (std::size_t k = 0; k < pairing.size(); ++k) {
    const Electrode& a = layout.electrode(pairing[k].first);
    const Electrode& b = layout.electrode(pairing[k].second);
    if (a.region != b.region) throw Error("bipolar pair spans two regions");
    electrodes.push_back({.id = static_cast<int>(k) + 1,
                          .coord = {(a.coord.x + b.coord.x) / 2.0, (a.coord.y + b.coord.y) / 2.0},
                          .region = a.region,
                          .grid_id = a.grid_id});
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [i, j] : pairing) pairs.push_back({i, j});
  return ElectrodeLayout(layout.name() + "-bi-" + std::to_string(pairing.size()), Scheme::kBipolar,
                         layout.geometry(), std::move(electrodes), {{"source", layout.name()}, {"pairs", pairs}});
}

nlohmann::json to_json(const ElectrodeLayout& layout) {
  nlohmann::json electrodes = nlohmann::json::array();
  for (const Electrode& e : layout.electrodes()) {
    electrodes.push_back({{"id", e.id},
                          {"x", e.coord.x},
                          {"y", e.coord.y},
                          {"region", to_string(e.region)},
                          {"grid_id", e.grid_id}});
  }
  return {{"name", layout.name()},
          {"scheme", to_string(layout.scheme())},
          {"geometry", to_string(layout.geometry())},
          {"metadata", layout.metadata()},
          {"electrodes", std::move(electrodes)}};
}

ElectrodeLayout layout_from_json(const nlohmann::json& j) {
  try {
    std::vector<Electrode> electrodes;
    for (const auto& e : j.at("electrodes")) {
      electrodes.push_back({
          .id = e.at("id").get<int>(),
          .coord = {e.at("x").get<double>(), e.at("y").get<double>()},
          .region = parse_region(e.at("region").get<std::string>()),
          .grid_id = e.at("grid_id").get<int>(),
      });
    }
    const std::string geometry = j.value("geometry", std::string("grid"));
    if (geometry != "grid" && geometry != "ring") throw FormatError("unknown layout geometry '" + geometry + "'");
    return ElectrodeLayout(j.at("name").get<std::string>(), parse_scheme(j.at("scheme").get<std::string>()),
                           geometry == "grid" ? Geometry::kGrid : Geometry::kRing, std::move(electrodes),
                           j.value("metadata", nlohmann::json::object()));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid layout document: ") + e.what());
  }
}

nlohmann::json to_json(const ChannelSubset& subset) { return {{"layout", subset.layout}, {"ids", subset.ids}}; }

ChannelSubset subset_from_json(const nlohmann::json& j) {
  try {
    return {j.at("layout").get<std::string>(), j.at("ids").get<std::vector<int>>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid subset document: ") + e.what());
  }
}

}  // namespace wemg::grid
