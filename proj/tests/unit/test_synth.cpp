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
#include <complex>
#include <map>
#include <numbers>

#include "doctest.h"
#include "wemg/dsp.hpp"
#include "wemg/error.hpp"
#include "wemg/synth.hpp"

using namespace wemg;
using namespace wemg::synth;

namespace {

SynthSpec small(SynthSpec s, int blocks = 2) {
  s.n_blocks = blocks;
  return s;
}

bool same_session(const RecordingSession& a, const RecordingSession& b) {
  if (a.blocks.size() != b.blocks.size()) return false;
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    const auto& ta = a.blocks[i].trials;
    const auto& tb = b.blocks[i].trials;
    if (ta.size() != tb.size()) return false;
    for (std::size_t k = 0; k < ta.size(); ++k) {
      if (ta[k].gesture != tb[k].gesture || ta[k].is_preparation != tb[k].is_preparation) return false;
      if (!std::equal(ta[k].samples.data().begin(), ta[k].samples.data().end(), tb[k].samples.data().begin())) {
        return false;
      }
    }
  }
  return true;
}

double rms(std::span<const float> x, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t t = begin; t < end; ++t) s += double(x[t]) * x[t];
  return std::sqrt(s / double(end - begin));
}

// Direct DFT periodogram; returns power per bin k = 0..n/2.
std::vector<double> periodogram(std::span<const float> x) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (float v : x) mean += v;
  mean /= double(n);
  std::vector<double> p(n / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) {
    std::complex<double> acc = 0.0;
    const double w = -2.0 * std::numbers::pi * double(k) / double(n);
    for (std::size_t t = 0; t < n; ++t) acc += (x[t] - mean) * std::polar(1.0, w * double(t));
    p[k] = std::norm(acc);
  }
  return p;
}

}  // namespace

TEST_CASE("default spec satisfies the protocol invariants") {
  const SynthSpec spec = default_spec(Sensor::kMaize, 7);
  CHECK(spec.sources.size() == 8);
  const RecordingSession s = generate_session(spec);
  CHECK_NOTHROW(validate_session(s, true));
  REQUIRE(s.blocks.size() == 10);
  CHECK(s.trial_samples() == 4000);
  std::set<std::vector<Gesture>> orders;
  for (const Block& b : s.blocks) {
    REQUIRE(b.trials.size() == 31);
    CHECK(b.trials[0].is_preparation);
    CHECK(b.trials[0].gesture == Gesture::kSwipeUp);
    std::map<Gesture, int> counts;
    std::vector<Gesture> order;
    for (std::size_t k = 1; k < b.trials.size(); ++k) {
      CHECK_FALSE(b.trials[k].is_preparation);
      ++counts[b.trials[k].gesture];
      order.push_back(b.trials[k].gesture);
    }
    for (Gesture g : kDynamicGestures) CHECK(counts[g] == 6);
    orders.insert(order);
  }
  CHECK(orders.size() == 10);  // randomized independently per block

  const RecordingSession q = generate_session(small(default_spec(Sensor::kQuattro, 7)));
  CHECK_NOTHROW(validate_session(q, true));
  CHECK(q.trial_samples() == 8000);
  CHECK(q.channels() == 15);
}

TEST_CASE("generation is deterministic and independent of worker count") {
  const SynthSpec spec = small(default_spec(Sensor::kMaize, 3), 3);
  const RecordingSession a = generate_session(spec, 1);
  CHECK(same_session(a, generate_session(spec, 1)));
  CHECK(same_session(a, generate_session(spec, 3)));
  SynthSpec other = spec;
  other.seed = 4;
  CHECK_FALSE(same_session(a, generate_session(other, 1)));
}

TEST_CASE("common mode cancels in the bipolar derivation") {
  SynthSpec spec = small(default_spec(Sensor::kMaize, 1), 1);
  spec.sources.clear();
  spec.noise_std = 0.0;
  spec.common_mode_amplitude = 2.0;
  const RecordingSession s = generate_session(spec);
  const auto pairing = grid::default_maize_pairing();
  double mono = 0.0, bi = 0.0;
  std::size_t n_mono = 0, n_bi = 0;
  for (const Trial& t : s.blocks[0].trials) {
    for (float v : t.samples.data()) mono += double(v) * v;
    n_mono += t.samples.data().size();
    const MatrixF b = grid::derive_bipolar(t.samples, pairing);
    for (float v : b.data()) bi += double(v) * v;
    n_bi += b.data().size();
  }
  CHECK(mono / double(n_mono) == doctest::Approx(2.0 * 2.0 / 2.0).epsilon(1e-3));
  CHECK(bi / double(n_bi) < 1e-20);

  // Bipolar layouts never see the common mode.
  SynthSpec q = small(default_spec(Sensor::kQuattro, 1), 1);
  q.sources.clear();
  q.noise_std = 0.0;
  q.common_mode_amplitude = 2.0;
  const RecordingSession qs = generate_session(q);
  for (float v : qs.blocks[0].trials[3].samples.data()) REQUIRE(v == 0.0f);
}

TEST_CASE("dynamic segments keep their power inside the carrier band") {
  const RecordingSession s = generate_session(small(default_spec(Sensor::kMaize, 11), 1));
  const std::size_t n = 1500;
  std::vector<double> power(n / 2 + 1, 0.0);
  for (std::size_t k = 1; k < s.blocks[0].trials.size(); k += 3) {
    for (std::size_t c : {0, 9, 17, 30}) {
      const auto p = periodogram(s.blocks[0].trials[k].samples.row(c).first(n));
      for (std::size_t i = 0; i < p.size(); ++i) power[i] += p[i];
    }
  }
  double total = 0.0, outside = 0.0;
  for (std::size_t i = 0; i < power.size(); ++i) {
    const double f = double(i) * s.fs / double(n);
    total += power[i];
    if (f < 20.0 || f > 450.0) outside += power[i];
  }
  MESSAGE("out-of-band fraction " << outside / total);
  CHECK(outside / total < 0.05);
}

TEST_CASE("hold over idle RMS follows the configured envelope ratio") {
  SynthSpec spec = small(default_spec(Sensor::kMaize, 5), 2);
  spec.sources.resize(1);
  spec.sources[0].position = spec.layout.electrode(6).coord;
  spec.noise_std = 0.0;
  spec.common_mode_amplitude = 0.0;
  spec.common_mode_noise_std = 0.0;
  for (std::size_t g = 0; g < 5; ++g) spec.sources[0].envelope[g] = {0.5, 0.2 * double(g + 1), 0.3, 0.04};
  const RecordingSession s = generate_session(spec);
  const std::size_t row = 5;  // electrode 6
  std::map<Gesture, std::pair<double, double>> acc;  // sum of squares in hold, idle
  for (const Block& b : s.blocks) {
    for (const Trial& t : b.trials) {
      if (t.is_preparation) continue;
      const auto x = t.samples.row(row);
      const double h = rms(x, 600, 2000), i = rms(x, 2600, 4000);
      acc[t.gesture].first += h * h;
      acc[t.gesture].second += i * i;
    }
  }
  for (std::size_t g = 0; g < 5; ++g) {
    const auto [h, i] = acc[kDynamicGestures[g]];
    const double configured = 0.2 * double(g + 1) / 0.04;
    CHECK(std::sqrt(h / i) == doctest::Approx(configured).epsilon(0.2));
  }
}

TEST_CASE("envelope phases and ramps") {
  const PhaseLevels p{0.5, 1.0, 0.25, 0.1};
  CHECK(envelope_at(p, 0.0, 0.05) == doctest::Approx(0.1));
  CHECK(envelope_at(p, 0.025, 0.05) == doctest::Approx(0.3));
  CHECK(envelope_at(p, 0.3, 0.05) == 0.5);
  CHECK(envelope_at(p, 1.0, 0.05) == 1.0);
  CHECK(envelope_at(p, 2.025, 0.05) == doctest::Approx(0.625));
  CHECK(envelope_at(p, 2.2, 0.05) == 0.25);
  CHECK(envelope_at(p, 3.9, 0.05) == 0.1);
  CHECK(envelope_at(p, 0.0, 0.0) == 0.5);
}

TEST_CASE("gain matrix decays exponentially and becomes one-hot as lambda shrinks") {
  SynthSpec spec = default_spec(Sensor::kMaize, 0);
  spec.sources.clear();
  for (int id : {1, 6, 20}) spec.sources.push_back({spec.layout.electrode(id).coord, {}});
  spec.lambda = 2.0;
  const MatrixD g = gain_matrix(spec);
  const grid::Point a = spec.layout.electrode(2).coord, b = spec.layout.electrode(1).coord;
  CHECK(g(1, 0) == doctest::Approx(std::exp(-std::hypot(a.x - b.x, a.y - b.y) / 2.0)));
  CHECK(g(0, 0) == 1.0);

  spec.lambda = 1e-3;
  const MatrixD h = gain_matrix(spec);
  for (std::size_t s = 0; s < 3; ++s) {
    const int id = std::array{1, 6, 20}[s];
    for (std::size_t c = 0; c < h.rows(); ++c) {
      CHECK(std::abs(h(c, s) - (c + 1 == std::size_t(id) ? 1.0 : 0.0)) < 1e-12);
    }
  }

  // Ring distances wrap: channel 1 and channel 15 are one spacing apart.
  SynthSpec q = default_spec(Sensor::kQuattro, 0);
  q.sources = {{q.layout.electrodes()[0].coord, {}}};
  q.lambda = 1.0;
  const MatrixD r = gain_matrix(q);
  CHECK(std::abs(r(14, 0)) == doctest::Approx(std::abs(r(1, 0))));
  CHECK(std::abs(r(0, 0)) < 1e-15);  // symmetric contacts cancel
}

TEST_CASE("planted sources make only the targets class-informative") {
  const SynthSpec spec = small(planted_importance_spec({3}, Sensor::kMaize, 2), 2);
  REQUIRE(spec.sources.size() == 1);
  const RecordingSession s = generate_session(spec);
  // Spread of class-mean hold power across gestures, per channel.
  std::vector<double> spread(s.channels());
  for (std::size_t c = 0; c < s.channels(); ++c) {
    std::map<Gesture, double> power;
    for (const Block& b : s.blocks) {
      for (const Trial& t : b.trials) {
        if (!t.is_preparation) power[t.gesture] += std::pow(rms(t.samples.row(c), 600, 2000), 2);
      }
    }
    double lo = 1e300, hi = 0.0;
    for (const auto& [g, p] : power) {
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    spread[c] = hi - lo;
  }
  const auto top = std::max_element(spread.begin(), spread.end()) - spread.begin();
  CHECK(top == 2);
  std::vector<double> others = spread;
  others.erase(others.begin() + 2);
  CHECK(*std::max_element(others.begin(), others.end()) < 0.01 * spread[2]);

  CHECK(planted_importance_spec({}, Sensor::kMaize, 2).sources.empty());
  CHECK_THROWS(planted_importance_spec({99}, Sensor::kMaize, 2));
}

TEST_CASE("separable preset gives every dynamic gesture its own source") {
  const SynthSpec spec = separable_preset(Sensor::kMaize, 0);
  REQUIRE(spec.sources.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    for (std::size_t g = 0; g < 5; ++g) CHECK((spec.sources[k].envelope[g].hold > 0.5) == (k == g));
  }
  CHECK_NOTHROW(validate_session(generate_session(small(separable_preset(Sensor::kQuattro, 0), 1)), true));
}

TEST_CASE("spec JSON round trip and validation") {
  const SynthSpec spec = default_spec(Sensor::kMaize, 9);
  const SynthSpec back = synth_spec_from_json(to_json(spec));
  CHECK(to_json(back) == to_json(spec));
  CHECK(same_session(generate_session(small(spec, 1)), generate_session(small(back, 1))));

  auto bad = [&](auto mutate) {
    SynthSpec s = spec;
    mutate(s);
    return s;
  };
  CHECK_THROWS_AS(validate_spec(bad([](SynthSpec& s) { s.fs = 2000; })), Error);
  CHECK_THROWS_AS(validate_spec(bad([](SynthSpec& s) { s.lambda = 0; })), Error);
  CHECK_THROWS_AS(validate_spec(bad([](SynthSpec& s) { s.band_hi = 600; })), Error);
  CHECK_THROWS_AS(validate_spec(bad([](SynthSpec& s) { s.noise_std = -1; })), Error);
  CHECK_THROWS_AS(validate_spec(bad([](SynthSpec& s) { s.n_blocks = 0; })), Error);
  CHECK_THROWS_AS(validate_spec(bad([](SynthSpec& s) { s.sources[0].envelope[2].hold = -0.1; })), Error);
  CHECK_THROWS_AS(generate_session(bad([](SynthSpec& s) { s.reps_per_gesture = 0; })), Error);
  CHECK_THROWS_AS(synth_spec_from_json(nlohmann::json{{"fs", 1000}}), FormatError);
}
