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


#include <cmath>
#include <set>
#include <unordered_set>

#include "doctest.h"
#include "support/grid_oracle.hpp"
#include "support/test_support.hpp"
#include "wemg/error.hpp"
#include "wemg/grid.hpp"
#include "wemg/rng.hpp"

using namespace wemg;
using namespace wemg::grid;
using wemg::testing::maize_cell;

TEST_CASE("maize layout places two row-major 4x4 grids") {
  for (int gap : {1, 4, 7}) {
    const ElectrodeLayout layout = build_maize_layout(gap);
    REQUIRE(layout.size() == 32);
    CHECK(layout.geometry() == Geometry::kGrid);
    CHECK(layout.scheme() == Scheme::kMonopolar);
    for (const Electrode& e : layout.electrodes()) {
      const auto cell = maize_cell(e.id, gap);
      CHECK(e.coord.x == cell.x);
      CHECK(e.coord.y == cell.y);
      CHECK(e.grid_id == cell.grid + 1);
      CHECK(e.region == (e.id <= 16 ? Region::kExtensor : Region::kFlexor));
    }
  }
  CHECK(build_maize_layout().electrode(17).coord == Point{8.0, 0.0});
  CHECK_THROWS_AS(build_maize_layout(0), Error);
}

TEST_CASE("quattro layout splits 15 ring channels 8 extensor / 7 flexor") {
  const ElectrodeLayout layout = build_quattro_layout();
  REQUIRE(layout.size() == 15);
  CHECK(layout.geometry() == Geometry::kRing);
  CHECK(layout.scheme() == Scheme::kBipolar);
  int ext = 0;
  std::vector<int> stick_sizes(5, 0);
  for (const Electrode& e : layout.electrodes()) {
    CHECK(e.coord.y == 0.0);
    CHECK(e.coord.x == doctest::Approx((e.id - 1) * 2.0));
    ext += e.region == Region::kExtensor ? 1 : 0;
    ++stick_sizes[e.grid_id];
  }
  CHECK(ext == 8);
  CHECK(stick_sizes == std::vector<int>{0, 4, 4, 4, 3});
  CHECK(layout.metadata().at("spacing").get<double>() == doctest::Approx(2.0));
  CHECK_THROWS(classify_density({"quattro", {1, 2}}, layout));
}

TEST_CASE("layout validation rejects malformed electrode sets") {
  CHECK_THROWS_AS(ElectrodeLayout("x", Scheme::kMonopolar, Geometry::kGrid,
                                  {{1, {0, 0}, Region::kExtensor, 1}, {3, {1, 0}, Region::kExtensor, 1}}),
                  Error);
  CHECK_THROWS_AS(ElectrodeLayout("x", Scheme::kMonopolar, Geometry::kGrid,
                                  {{1, {0, 0}, Region::kExtensor, 1}, {2, {0, 0}, Region::kExtensor, 1}}),
                  Error);
  const ElectrodeLayout layout = build_maize_layout();
  CHECK_THROWS(validate_subset({"maize", {}}, layout));
  CHECK_THROWS(validate_subset({"maize", {1, 1}}, layout));
  CHECK_THROWS(validate_subset({"maize", {0, 2}}, layout));
  CHECK_THROWS(validate_subset({"maize", {33}}, layout));
  CHECK_THROWS(validate_subset({"quattro", {1, 2}}, layout));
  CHECK_NOTHROW(validate_subset({"maize", {32, 1}}, layout));
}

TEST_CASE("layout and subset JSON round-trip") {
  for (const ElectrodeLayout& layout : {build_maize_layout(3), build_quattro_layout(28.0, 0.45)}) {
    const ElectrodeLayout back = layout_from_json(nlohmann::json::parse(to_json(layout).dump()));
    CHECK(back == layout);
  }
  const ChannelSubset s{"maize", {3, 9, 27}};
  CHECK(subset_from_json(to_json(s)) == s);
}

TEST_CASE("unit square has Dist exactly 1") {
  const ElectrodeLayout layout = build_maize_layout();
  CHECK(dist_metric({"maize", {1, 2, 5, 6}}, layout) == 1.0);
  CHECK(fom(0.9, 1.0) == 0.9);
  CHECK(fom(0.9, 2.0) == 0.45);
  CHECK_THROWS(fom(0.9, 0.0));
  CHECK_THROWS(dist_metric({"maize", {4}}, layout));
}

TEST_CASE("median handles odd and even counts") {
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK_THROWS(median({}));
}

TEST_CASE("Dist matches the brute-force oracle on random subsets") {
  const ElectrodeLayout layout = build_maize_layout();
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 7;
    const ChannelSubset s = sample_subset(layout, {.n = n, .density = std::nullopt, .seed = rng()});
    const double want = wemg::testing::oracle_dist(s.ids);
    CHECK(wemg::testing::rel_err(dist_metric(s, layout), want) <= 1e-12);
    CHECK(wemg::testing::rel_err(fom(0.8, dist_metric(s, layout)), 0.8 / want) <= 1e-12);
  }
}

TEST_CASE("density classes on hand fixtures") {
  const ElectrodeLayout layout = build_maize_layout();
  auto cls = [&](std::vector<int> ids) { return classify_density({"maize", std::move(ids)}, layout); };
  CHECK(cls({1, 2}) == DensityClass::kHigh);
  CHECK(cls({1, 2, 5, 6}) == DensityClass::kHigh);
  CHECK(cls({1, 6}) == DensityClass::kMedium);
  CHECK(cls({1, 6, 11, 16}) == DensityClass::kMedium);
  CHECK(cls({1, 3}) == DensityClass::kLow);
  CHECK(cls({1, 3, 9, 11}) == DensityClass::kLow);
  CHECK(cls({7}) == DensityClass::kLow);
  CHECK(cls({1, 2, 4}) == DensityClass::kInvalid);
  CHECK(cls({1, 2, 7}) == DensityClass::kInvalid);
  // edges and corners on different grids never combine
  CHECK(cls({4, 17}) == DensityClass::kLow);
  CHECK(cls({1, 2, 17, 18}) == DensityClass::kHigh);
}

TEST_CASE("density classification matches the oracle on every small extensor subset") {
  const ElectrodeLayout layout = build_maize_layout();
  const std::vector<int> pool = region_filter(layout, RegionSelector::kExtensor).ids;
  for (int n = 1; n <= 4; ++n) {
    for (std::uint32_t mask : wemg::testing::enumerate_subsets(pool, n)) {
      const auto ids = wemg::testing::mask_to_ids(mask);
      CHECK(classify_density({"maize", ids}, layout) == wemg::testing::oracle_density(ids));
    }
  }
}

TEST_CASE("sampler is seeded, sorted and region-respecting") {
  const ElectrodeLayout layout = build_maize_layout();
  const SampleRequest req{.n = 6, .density = DensityClass::kMedium, .region = RegionSelector::kFlexor, .seed = 42};
  const ChannelSubset a = sample_subset(layout, req);
  CHECK(a == sample_subset(layout, req));
  CHECK(std::is_sorted(a.ids.begin(), a.ids.end()));
  for (int id : a.ids) CHECK(id >= 17);
  CHECK(classify_density(a, layout) == DensityClass::kMedium);
  // four is the largest low-density set on a 4x4 grid
  CHECK_THROWS_WITH_AS(sample_subset(layout, {.n = 5,
                                              .density = DensityClass::kLow,
                                              .region = RegionSelector::kExtensor,
                                              .seed = 1,
                                              .max_attempts = 2000}),
                       doctest::Contains("unsatisfiable"), Error);
  CHECK_THROWS(sample_subset(layout, {.n = 17, .density = std::nullopt, .region = RegionSelector::kExtensor}));
}

TEST_CASE("split subsets take 8 extensor and 7 flexor electrodes") {
  const ElectrodeLayout layout = build_maize_layout();
  std::set<std::vector<int>> distinct;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ChannelSubset s = sample_split_subset(layout, 8, 7, seed);
    REQUIRE(s.ids.size() == 15);
    CHECK(std::is_sorted(s.ids.begin(), s.ids.end()));
    CHECK(std::count_if(s.ids.begin(), s.ids.end(), [](int id) { return id <= 16; }) == 8);
    distinct.insert(s.ids);
  }
  CHECK(distinct.size() == 50);
}

TEST_CASE("bipolar derivation subtracts paired channels") {
  MatrixD mono(32, 3);
  for (std::size_t r = 0; r < 32; ++r) {
    for (std::size_t c = 0; c < 3; ++c) mono(r, c) = static_cast<double>(r * r) + 0.5 * c;
  }
  const auto pairs = default_maize_pairing();
  REQUIRE(pairs.size() == 16);
  CHECK(pairs.front() == ChannelPair{1, 2});
  CHECK(pairs.back() == ChannelPair{31, 32});
  const MatrixD bip = derive_bipolar(mono, std::span<const ChannelPair>(pairs));
  REQUIRE(bip.rows() == 16);
  for (std::size_t k = 0; k < 16; ++k) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(bip(k, c) == mono(2 * k, c) - mono(2 * k + 1, c));
  }
  const std::vector<ChannelPair> bad_range{{1, 33}};
  const std::vector<ChannelPair> overlapping{{1, 2}, {2, 3}};
  CHECK_THROWS(derive_bipolar(mono, std::span<const ChannelPair>(bad_range)));
  CHECK_THROWS(derive_bipolar(mono, std::span<const ChannelPair>(overlapping)));
}

TEST_CASE("enum names round-trip") {
  for (auto d : {DensityClass::kHigh, DensityClass::kMedium, DensityClass::kLow, DensityClass::kInvalid}) {
    CHECK(parse_density(to_string(d)) == d);
  }
  for (auto r : {RegionSelector::kExtensor, RegionSelector::kFlexor, RegionSelector::kAll}) {
    CHECK(parse_region_selector(to_string(r)) == r);
  }
  CHECK_THROWS(parse_density("dense"));
}

TEST_CASE("bipolar layout places each pair at its midpoint") {
  const ElectrodeLayout maize = build_maize_layout();
  const auto pairing = default_maize_pairing();
  const ElectrodeLayout bi = derive_bipolar_layout(maize, pairing);
  CHECK(bi.size() == 16);
  CHECK(bi.scheme() == Scheme::kBipolar);
  CHECK(bi.electrode(1).coord.x == 0.5);
  CHECK(bi.electrode(1).coord.y == 0.0);
  CHECK(bi.electrode(9).region == Region::kFlexor);
  CHECK(bi.electrode(8).region == Region::kExtensor);
  CHECK_THROWS(derive_bipolar_layout(bi, std::vector<ChannelPair>{{1, 2}}));
  CHECK_THROWS(derive_bipolar_layout(maize, std::vector<ChannelPair>{{16, 17}}));
  CHECK_THROWS(derive_bipolar_layout(maize, std::vector<ChannelPair>{{1, 2}, {2, 3}}));
}
