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
#include <complex>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "support/test_support.hpp"
#include "wemg/dsp.hpp"
#include "wemg/error.hpp"

using namespace wemg;
using namespace wemg::dsp;
using wemg::testing::random_vector;

namespace {

// Bilinear-mapped analog Butterworth band-pass magnitude, written from the
// closed form |H(jW)|^2 = 1 / (1 + ((W^2 - W0^2) / (W * B))^(2N)).
double analytic_magnitude(double f, double fs, double lo, double hi, int prototype_order) {
  const double pi = std::numbers::pi;
  const double w = 2.0 * fs * std::tan(pi * f / fs);
  const double w1 = 2.0 * fs * std::tan(pi * lo / fs);
  const double w2 = 2.0 * fs * std::tan(pi * hi / fs);
  const double r = (w * w - w1 * w2) / (w * (w2 - w1));
  return 1.0 / std::sqrt(1.0 + std::pow(r * r, prototype_order));
}

std::complex<double> dft_at(const std::vector<double>& h, double f, double fs) {
  std::complex<double> acc = 0.0;
  for (std::size_t n = 0; n < h.size(); ++n) {
    acc += h[n] * std::polar(1.0, -2.0 * std::numbers::pi * f * static_cast<double>(n) / fs);
  }
  return acc;
}

// Direct-form I, one section at a time.
std::vector<double> reference_filter(std::vector<double> x, const FilterCoefficients& c) {
  for (const Biquad& s : c.sections) {
    std::vector<double> y(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) {
      const double x1 = n >= 1 ? x[n - 1] : 0.0, x2 = n >= 2 ? x[n - 2] : 0.0;
      const double y1 = n >= 1 ? y[n - 1] : 0.0, y2 = n >= 2 ? y[n - 2] : 0.0;
      y[n] = s.b0 * x[n] + s.b1 * x1 + s.b2 * x2 - s.a1 * y1 - s.a2 * y2;
    }
    x = std::move(y);
  }
  return x;
}

const double kFreqs[] = {5.0, 20.0, 60.0, 100.0, 250.0, 450.0, 480.0};

}  // namespace

TEST_CASE("band-pass order 4 gives two sections with the required gains") {
  const FilterCoefficients c = design_bandpass(1000.0);
  CHECK(c.sections.size() == 2);
  CHECK(std::abs(std::abs(frequency_response(c, 100.0)) - 1.0) < 0.05);
  CHECK(std::abs(frequency_response(c, 10.0)) < 0.5);
  CHECK(std::abs(frequency_response(c, 0.0)) < 1e-6);
  CHECK(std::abs(std::abs(frequency_response(c, 20.0)) - std::sqrt(0.5)) < 1e-9);
  CHECK(std::abs(std::abs(frequency_response(c, 450.0)) - std::sqrt(0.5)) < 1e-9);
  for (const auto& p : filter_poles(c)) CHECK(std::abs(p) < 1.0);
  CHECK(filter_poles(c).size() == 4);
}

TEST_CASE("magnitude matches the closed-form Butterworth response") {
  for (double fs : {1000.0, 2000.0}) {
    for (auto conv : {OrderConvention::kBandpassOrder, OrderConvention::kPrototypeOrder}) {
      const FilterCoefficients c = design_bandpass(fs, 20.0, 450.0, 4, conv);
      const int n_proto = conv == OrderConvention::kBandpassOrder ? 2 : 4;
      for (double f = 1.0; f < fs / 2; f += 7.3) {
        CAPTURE(f);
        CHECK(std::abs(std::abs(frequency_response(c, f)) - analytic_magnitude(f, fs, 20.0, 450.0, n_proto)) <
              1e-10);
      }
    }
  }
}

TEST_CASE("magnitude matches the scipy reference design") {
  // tests/oracles/filter_reference.txt
  struct Ref {
    double fs;
    OrderConvention conv;
    double mag[7];
  };
  const Ref refs[] = {
      {1000, OrderConvention::kBandpassOrder,
       {0.061071293836623443, 0.70710678118654247, 0.99583327433685531, 0.99978745493146803, 0.99995676826250701,
        0.70710678118654746, 0.15331402536625197}},
      {2000, OrderConvention::kBandpassOrder,
       {0.058118311722010589, 0.7071067811865589, 0.99859767092768015, 0.99999998354510022, 0.98411383582872247,
        0.70710678118654768, 0.63240265372108428}},
      {1000, OrderConvention::kPrototypeOrder,
       {0.0037436394582589985, 0.70710678118653314, 0.99996484080699521, 0.99999990959156315,
        0.99999999626154856, 0.7071067811865448, 0.024064012939517172}},
  };
  for (const Ref& r : refs) {
    const FilterCoefficients c = design_bandpass(r.fs, 20.0, 450.0, 4, r.conv);
    for (int i = 0; i < 7; ++i) {
      CAPTURE(kFreqs[i]);
      CHECK(std::abs(std::abs(frequency_response(c, kFreqs[i])) - r.mag[i]) < 1e-9);
    }
  }
}

TEST_CASE("DFT of the impulse response agrees with the transfer function") {
  for (double fs : {1000.0, 2000.0}) {
    const FilterCoefficients c = design_bandpass(fs);
    std::vector<double> impulse(16384, 0.0);
    impulse[0] = 1.0;
    const std::vector<double> h = apply_filter(impulse, c);
    CHECK(std::abs(h.back()) < 1e-14);
    for (double f : {0.0, 3.0, 20.0, 77.0, 100.0, 300.0, 449.0, 499.0}) {
      CAPTURE(f);
      CHECK(std::abs(dft_at(h, f, fs) - frequency_response(c, f)) < 1e-6);
    }
  }
}

TEST_CASE("cascade filtering matches a direct-form reference") {
  const FilterCoefficients c = design_bandpass(2000.0, 20.0, 450.0, 4, OrderConvention::kPrototypeOrder);
  const auto x = random_vector(3000, 9);
  const auto got = apply_filter(x, c);
  const auto want = reference_filter(x, c);
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);

  MatrixD m(2, 3000);
  std::copy(x.begin(), x.end(), m.row(1).begin());
  const MatrixD fm = apply_filter(m, c);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(fm(0, i) == 0.0);
    CHECK(fm(1, i) == got[i]);
  }
}

TEST_CASE("design and filtering reject bad input") {
  CHECK_THROWS(design_bandpass(1000.0, 20.0, 500.0));
  CHECK_THROWS(design_bandpass(1000.0, 0.0, 450.0));
  CHECK_THROWS(design_bandpass(1000.0, 450.0, 20.0));
  CHECK_THROWS(design_bandpass(1000.0, 20.0, 450.0, 3));
  const FilterCoefficients c = design_bandpass(1000.0);
  std::vector<double> x(10, 0.0);
  x[4] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(apply_filter(x, c), NumericError);
}

TEST_CASE("filter coefficients serialize the sections and application mode") {
  const auto j = to_json(design_bandpass(1000.0));
  CHECK(j.at("sos").size() == 2);
  CHECK(j.at("application") == "causal");
  CHECK(j.at("order") == 4);
}

TEST_CASE("window arithmetic") {
  CHECK(window_samples(1000.0) == 250);
  CHECK(window_hop(1000.0) == 125);
  CHECK(window_samples(2000.0) == 500);
  CHECK(window_count(1500, 1000.0) == 11);
  CHECK(window_count(500, 1000.0) == 3);
  CHECK(window_count(3000, 2000.0) == 11);
  CHECK(window_count(250, 1000.0) == 1);
  CHECK(window_count(374, 1000.0) == 1);
  CHECK(window_count(375, 1000.0) == 2);
  CHECK_THROWS(window_count(249, 1000.0));
  CHECK_THROWS(window_hop(1000.0, {250.0, 1.0}));
}

TEST_CASE("segments cover [0.5, 2.0) and [3.4, 3.9) seconds") {
  for (double fs : {1000.0, 2000.0}) {
    const std::size_t len = static_cast<std::size_t>(4 * fs);
    MatrixD trial(3, len);
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t t = 0; t < len; ++t) trial(r, t) = static_cast<double>(r * 100000 + t);
    }
    const auto segs = extract_segments(trial, Gesture::kTaps, false, fs, 7);
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].data.cols() == static_cast<std::size_t>(1.5 * fs));
    CHECK(segs[1].data.cols() == static_cast<std::size_t>(0.5 * fs));
    CHECK(segs[0].label == Gesture::kTaps);
    CHECK(segs[1].label == Gesture::kIdle);
    CHECK(segs[0].block_id == 7);
    CHECK(segs[0].data(2, 0) == trial(2, static_cast<std::size_t>(0.5 * fs)));
    CHECK(segs[0].data(1, segs[0].data.cols() - 1) == trial(1, static_cast<std::size_t>(2.0 * fs) - 1));
    CHECK(segs[1].data(0, 0) == trial(0, static_cast<std::size_t>(3.4 * fs)));
    CHECK(segs[1].data(0, segs[1].data.cols() - 1) == trial(0, static_cast<std::size_t>(3.9 * fs) - 1));
    CHECK(window(segs[0].data, fs).size() == 11);
    CHECK(window(segs[1].data, fs).size() == 3);
  }
  MatrixD trial(1, 4000);
  CHECK_THROWS_WITH(extract_segments(trial, Gesture::kSwipeUp, true, 1000.0), doctest::Contains("excluded"));
  CHECK_THROWS(extract_segments(MatrixD(1, 3800), Gesture::kSwipeUp, false, 1000.0));
}

TEST_CASE("windows are left-aligned views with 50% overlap") {
  MatrixD seg(2, 1500);
  for (std::size_t t = 0; t < 1500; ++t) {
    seg(0, t) = static_cast<double>(t);
    seg(1, t) = -static_cast<double>(t);
  }
  const auto ws = window(seg, 1000.0);
  WindowedDataset data({Segment{seg, Gesture::kOneTap, 3}}, 1000.0);
  REQUIRE(data.size() == 11);
  CHECK(data.channels() == 2);
  CHECK(data.window_length() == 250);
  for (std::size_t w = 0; w < 11; ++w) {
    CHECK(ws[w](0, 0) == static_cast<double>(125 * w));
    CHECK(data.window_matrix(w) == ws[w]);
    CHECK(data.label(w) == Gesture::kOneTap);
    CHECK(data.block_id(w) == 3);
  }
  const std::size_t swapped[] = {1, 0};
  const MatrixD m = data.window_matrix(4, swapped);
  CHECK(m(0, 0) == -500.0);
  CHECK(m(1, 0) == 500.0);
  CHECK_THROWS(data.relabel({Gesture::kIdle}));
}

TEST_CASE("normalizer pools mean and population std per channel") {
  std::vector<MatrixD> windows;
  for (int w = 0; w < 5; ++w) {
    MatrixD m(3, 40);
    const auto v = random_vector(80, 50 + w, -2.0, 5.0);
    for (std::size_t t = 0; t < 40; ++t) {
      m(0, t) = v[t];
      m(1, t) = 3.0 * v[40 + t] + 10.0;
      m(2, t) = 0.1;
    }
    windows.push_back(m);
  }
  const ChannelNormalizer n = fit_normalizer(windows);
  for (std::size_t c = 0; c < 2; ++c) {
    double s = 0.0, ss = 0.0;
    for (const auto& w : windows) {
      for (double x : w.row(c)) s += x;
    }
    const double mean = s / 200.0;
    for (const auto& w : windows) {
      for (double x : w.row(c)) ss += (x - mean) * (x - mean);
    }
    CHECK(wemg::testing::rel_err(n.mean[c], mean) < 1e-12);
    CHECK(wemg::testing::rel_err(n.stddev[c], std::sqrt(ss / 200.0)) < 1e-12);
  }
  CHECK(n.stddev[2] == kStdFloor);

  const auto out = apply_normalizer(n, windows);
  for (std::size_t c = 0; c < 2; ++c) {
    double s = 0.0, ss = 0.0;
    for (const auto& w : out) {
      for (double x : w.row(c)) {
        s += x;
        ss += x * x;
      }
    }
    CHECK(std::abs(s / 200.0) < 1e-12);
    CHECK(std::abs(ss / 200.0 - 1.0) < 1e-12);
  }
  for (const auto& w : out) {
    for (double x : w.row(2)) CHECK(std::abs(x) < 1e-6);
  }
  CHECK_THROWS(fit_normalizer(std::span<const MatrixD>{}));
}

TEST_CASE("dataset normalizer equals the matrix normalizer on the same windows") {
  MatrixD seg(4, 1500);
  const auto v = random_vector(4 * 1500, 77);
  std::copy(v.begin(), v.end(), seg.data().begin());
  WindowedDataset data({Segment{seg, Gesture::kSwipeLeft, 0}, Segment{seg, Gesture::kIdle, 1}}, 1000.0);
  const std::vector<std::size_t> idx = data.indices_for_blocks(std::vector<int>{1});
  CHECK(idx.size() == 11);
  const std::size_t rows[] = {3, 1};
  std::vector<MatrixD> mats;
  for (std::size_t i : idx) mats.push_back(data.window_matrix(i, rows));
  const ChannelNormalizer a = fit_normalizer(data, idx, rows);
  const ChannelNormalizer b = fit_normalizer(mats);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(wemg::testing::rel_err(a.mean[c], b.mean[c]) < 1e-12);
    CHECK(wemg::testing::rel_err(a.stddev[c], b.stddev[c]) < 1e-12);
  }
}
