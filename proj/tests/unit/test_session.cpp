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


#include <fstream>

#include "doctest.h"
#include "support/session_fixture.hpp"
#include "support/test_support.hpp"
#include "wemg/dsp.hpp"
#include "wemg/error.hpp"
#include "wemg/session.hpp"

using namespace wemg;
using wemg::testing::make_noise_session;
using wemg::testing::TempDir;

TEST_CASE("gesture and sensor names round-trip") {
  for (int i = 0; i < kNumClasses; ++i) {
    const auto g = static_cast<Gesture>(i);
    CHECK(parse_gesture(to_string(g)) == g);
    CHECK(class_index(g) == i);
  }
  CHECK(parse_sensor("quattro") == Sensor::kQuattro);
  CHECK(nominal_fs(Sensor::kMaize) == 1000.0);
  CHECK(nominal_fs(Sensor::kQuattro) == 2000.0);
  CHECK_THROWS_AS(parse_gesture("wave"), FormatError);
}

TEST_CASE("validate_session accepts well-formed sessions") {
  CHECK_NOTHROW(validate_session(make_noise_session(2, 1, 1)));
  CHECK_NOTHROW(validate_session(make_noise_session(1, 6, 2), true));
  CHECK_NOTHROW(validate_session(make_noise_session(1, 1, 3, Sensor::kQuattro)));
  CHECK_THROWS(validate_session(make_noise_session(1, 1, 2), true));
}

TEST_CASE("validate_session rejects broken invariants") {
  SUBCASE("fs mismatch") {
    auto s = make_noise_session(1, 1, 1);
    s.fs = 2000.0;
    CHECK_THROWS(validate_session(s));
  }
  SUBCASE("wrong trial length") {
    auto s = make_noise_session(1, 1, 1);
    s.blocks[0].trials[2].samples = MatrixF(32, 3999);
    CHECK_THROWS_AS(validate_session(s), ShapeError);
  }
  SUBCASE("missing preparation trial") {
    auto s = make_noise_session(1, 1, 1);
    s.blocks[0].trials[0].is_preparation = false;
    CHECK_THROWS(validate_session(s));
  }
  SUBCASE("unequal repetitions") {
    auto s = make_noise_session(1, 2, 1);
    s.blocks[0].trials.pop_back();
    CHECK_THROWS(validate_session(s));
  }
  SUBCASE("duplicate block ids") {
    auto s = make_noise_session(2, 1, 1);
    s.blocks[1].block_id = 0;
    CHECK_THROWS(validate_session(s));
  }
}

TEST_CASE("sessions round-trip through f32 and csv trial files") {
  for (auto format : {TrialFileFormat::kF32, TrialFileFormat::kCsv}) {
    const RecordingSession s = make_noise_session(2, 1, 11);
    TempDir dir("session");
    write_session(s, dir.path(), format);
    CHECK(std::filesystem::exists(dir.path() / "session.json"));
    const RecordingSession back = read_session(dir.path());
    CHECK(back.subject_id == s.subject_id);
    CHECK(back.layout == s.layout);
    REQUIRE(back.blocks.size() == 2);
    for (std::size_t b = 0; b < 2; ++b) {
      REQUIRE(back.blocks[b].trials.size() == s.blocks[b].trials.size());
      for (std::size_t t = 0; t < s.blocks[b].trials.size(); ++t) {
        CHECK(back.blocks[b].trials[t].gesture == s.blocks[b].trials[t].gesture);
        CHECK(back.blocks[b].trials[t].samples == s.blocks[b].trials[t].samples);
      }
    }
  }
}

TEST_CASE("reading a truncated trial file fails") {
  const RecordingSession s = make_noise_session(1, 1, 5);
  TempDir dir("trunc");
  write_session(s, dir.path());
  std::filesystem::resize_file(dir.path() / (trial_file_stem(0, 3) + ".f32"), 100);
  CHECK_THROWS_AS(read_session(dir.path()), FormatError);
}

TEST_CASE("processing filters each block continuously across trials") {
  const RecordingSession s = make_noise_session(2, 1, 21);
  const dsp::WindowedDataset data = dsp::process_session(s);
  // 5 trials x 2 blocks, each with a movement and an idle segment
  REQUIRE(data.segments().size() == 20);
  CHECK(data.size() == 20 * 7);
  CHECK(data.block_ids() == std::vector<int>{0, 1});

  const auto coeffs = dsp::design_bandpass(1000.0);
  const Block& block = s.blocks[1];
  std::vector<double> row;
  for (const Trial& t : block.trials) {
    for (float v : t.samples.row(5)) row.push_back(v);
  }
  const std::vector<double> y = dsp::apply_filter(row, coeffs);
  // third trial of block 1 is its second gesture trial -> segments 12, 13
  const dsp::Segment& move = data.segments()[12];
  CHECK(move.label == block.trials[2].gesture);
  CHECK(move.block_id == 1);
  for (std::size_t k = 0; k < move.data.cols(); ++k) CHECK(move.data(5, k) == y[2 * 4000 + 500 + k]);
  const dsp::Segment& idle = data.segments()[13];
  CHECK(idle.label == Gesture::kIdle);
  for (std::size_t k = 0; k < idle.data.cols(); ++k) CHECK(idle.data(5, k) == y[2 * 4000 + 3400 + k]);
}
