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
#include <numbers>
#include <string>

#include "wemg/dsp.hpp"
#include "wemg/error.hpp"

namespace wemg::dsp {
namespace {

using cplx = std::complex<double>;

Biquad section_from_poles(cplx p1, cplx p2) {
  // Zeros at z = +1 and z = -1: numerator 1 - z^-2.
  Biquad s;
  s.b0 = 1.0;
  s.b1 = 0.0;
  s.b2 = -1.0;
  s.a1 = -(p1 + p2).real();
  s.a2 = (p1 * p2).real();
  return s;
}

cplx section_response(const Biquad& s, cplx zinv) {
  const cplx zinv2 = zinv * zinv;
  return (s.b0 + s.b1 * zinv + s.b2 * zinv2) / (1.0 + s.a1 * zinv + s.a2 * zinv2);
}

}  // namespace

FilterCoefficients design_bandpass(double fs, double lo, double hi, int order, OrderConvention convention) {
  if (!(fs > 0.0)) throw Error("sampling rate must be positive");
  if (!(lo > 0.0) || !(hi > lo)) throw Error("band edges must satisfy 0 < lo < hi");
  if (hi >= fs / 2.0) throw Error("band edge above Nyquist");
  if (order < 1) throw Error("filter order must be >= 1");
  if (convention == OrderConvention::kBandpassOrder && order % 2 != 0) {
    throw Error("band-pass order must be even under the band-pass order convention");
  }
  const int prototype_order = convention == OrderConvention::kBandpassOrder ? order / 2 : order;

  const double pi = std::numbers::pi;
  const double k = 2.0 * fs;
  const double w_lo = k * std::tan(pi * lo / fs);
  const double w_hi = k * std::tan(pi * hi / fs);
  const double bw = w_hi - w_lo;
  const double w0_sq = w_lo * w_hi;

  std::vector<cplx> upper;
  std::vector<double> real_poles;
  for (int i = 0; i < prototype_order; ++i) {
    const double theta = pi * (2.0 * i + prototype_order + 1.0) / (2.0 * prototype_order);
    const cplx proto(std::cos(theta), std::sin(theta));
    const cplx half = proto * (bw / 2.0);
    const cplx root = std::sqrt(half * half - w0_sq);
    for (const cplx s : {half + root, half - root}) {
      const cplx z = (k + s) / (k - s);
      if (std::abs(z.imag()) > 1e-12 * std::max(1.0, std::abs(z))) {
        if (z.imag() > 0.0) upper.push_back(z);
      } else {
        real_poles.push_back(z.real());
      }
    }
  }
  std::sort(upper.begin(), upper.end(), [](cplx a, cplx b) { return std::arg(a) < std::arg(b); });
  std::sort(real_poles.begin(), real_poles.end());
  if (real_poles.size() % 2 != 0) throw NumericError("unpaired real pole in band-pass design");

  FilterCoefficients out;
  out.fs = fs;
  out.lo = lo;
  out.hi = hi;
  out.order = order;
  out.convention = convention;
  for (const cplx p : upper) out.sections.push_back(section_from_poles(p, std::conj(p)));
  for (std::size_t i = 0; i < real_poles.size(); i += 2) {
    out.sections.push_back(section_from_poles(real_poles[i], real_poles[i + 1]));
  }

  // Unit gain at the digital image of the analog center frequency.
  const double w_center = 2.0 * std::atan(std::sqrt(w0_sq) / k);
  cplx h(1.0, 0.0);
  for (const Biquad& s : out.sections) h *= section_response(s, std::polar(1.0, -w_center));
  const double per_section = std::pow(1.0 / std::abs(h), 1.0 / static_cast<double>(out.sections.size()));
  for (Biquad& s : out.sections) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }

  for (const cplx p : filter_poles(out)) {
    if (!(std::abs(p) < 1.0)) throw NumericError("unstable band-pass design: pole on or outside the unit circle");
  }
  return out;
}

std::complex<double> frequency_response(const FilterCoefficients& coeffs, double freq_hz) {
  const double w = 2.0 * std::numbers::pi * freq_hz / coeffs.fs;
  const cplx zinv = std::polar(1.0, -w);
  cplx h(1.0, 0.0);
  for (const Biquad& s : coeffs.sections) h *= section_response(s, zinv);
  return h;
}

std::vector<std::complex<double>> filter_poles(const FilterCoefficients& coeffs) {
  std::vector<cplx> poles;
  for (const Biquad& s : coeffs.sections) {
    // z^2 + a1 z + a2 = 0
    const cplx disc = std::sqrt(cplx(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
    poles.push_back((-s.a1 + disc) / 2.0);
    poles.push_back((-s.a1 - disc) / 2.0);
  }
  return poles;
}

std::vector<double> apply_filter(std::span<const double> signal, const FilterCoefficients& coeffs) {
  std::vector<double> y(signal.begin(), signal.end());
  for (double v : y) {
    if (!std::isfinite(v)) throw NumericError("non-finite sample in filter input");
  }
  for (const Biquad& s : coeffs.sections) {
    double z1 = 0.0;
    double z2 = 0.0;
    for (double& v : y) {
      const double x = v;
      const double out = s.b0 * x + z1;
      z1 = s.b1 * x - s.a1 * out + z2;
      z2 = s.b2 * x - s.a2 * out;
      v = out;
    }
  }
  return y;
}

MatrixD apply_filter(const MatrixD& signals, const FilterCoefficients& coeffs) {
  MatrixD out(signals.rows(), signals.cols());
  for (std::size_t r = 0; r < signals.rows(); ++r) {
    const std::vector<double> y = apply_filter(signals.row(r), coeffs);
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

nlohmann::json to_json(const FilterCoefficients& coeffs) {
  nlohmann::json sections = nlohmann::json::array();
  for (const Biquad& s : coeffs.sections) sections.push_back({s.b0, s.b1, s.b2, 1.0, s.a1, s.a2});
  return {{"type", "butterworth-bandpass"},
          {"fs", coeffs.fs},
          {"lo", coeffs.lo},
          {"hi", coeffs.hi},
          {"order", coeffs.order},
          {"order_convention",
           coeffs.convention == OrderConvention::kBandpassOrder ? "bandpass-order" : "prototype-order"},
          {"application", "causal"},
          {"sos", std::move(sections)}};
}

}  // namespace wemg::dsp
