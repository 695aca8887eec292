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


#include "wemg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wemg/dsp.hpp"
#include "wemg/error.hpp"
#include "wemg/parallel.hpp"
#include "wemg/rng.hpp"

namespace wemg::synth {
namespace {

// Box-Muller on the portable uniform draw so sessions reproduce across
// standard libraries.
void fill_normal(std::span<double> out, double stddev, Rng& rng) {
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const double u1 = 1.0 - uniform_unit(rng);  // (0, 1]
    const double u2 = uniform_unit(rng);
    const double r = std::sqrt(-2.0 * std::log(u1)) * stddev;
    out[i] = r * std::cos(2.0 * std::numbers::pi * u2);
    if (i + 1 < out.size()) out[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
  }
}

double ring_circumference(const grid::ElectrodeLayout& layout) {
  if (layout.geometry() != grid::Geometry::kRing) return 0.0;
  const auto it = layout.metadata().find("circumference");
  return it != layout.metadata().end() && it->is_number() ? it->get<double>() : 0.0;
}

double distance(grid::Point a, grid::Point b, double circumference) {
  double dx = std::abs(a.x - b.x);
  if (circumference > 0.0) {
    dx = std::fmod(dx, circumference);
    dx = std::min(dx, circumference - dx);
  }
  return std::hypot(dx, a.y - b.y);
}

void check_levels(const PhaseLevels& p) {
  for (double v : {p.movement, p.hold, p.ret, p.idle}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("synth: envelope amplitudes must be finite and >= 0");
  }
}

// Electrodes at evenly spread positions of the id-ordered layout.
std::vector<grid::Point> spread_positions(const grid::ElectrodeLayout& layout, std::size_t count) {
  std::vector<grid::Point> out;
  const std::size_t n = layout.size();
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx = count == 1 ? 0 : (i * (n - 1) + (count - 1) / 2) / (count - 1);
    out.push_back(layout.electrodes()[idx].coord);
  }
  return out;
}

SynthSpec base_spec(Sensor sensor, std::uint64_t seed) {
  SynthSpec s;
  s.sensor = sensor;
  s.fs = nominal_fs(sensor);
  s.layout = sensor == Sensor::kMaize ? grid::build_maize_layout() : grid::build_quattro_layout();
  s.seed = seed;
  return s;
}

}  // namespace

void validate_spec(const SynthSpec& spec) {
  if (spec.fs != nominal_fs(spec.sensor)) {
    throw Error("synth: fs " + std::to_string(spec.fs) + " does not match sensor " +
                std::string(to_string(spec.sensor)));
  }
  if (spec.layout.size() == 0) throw Error("synth: empty layout");
  if (spec.n_blocks < 1) throw Error("synth: n_blocks must be >= 1");
  if (spec.reps_per_gesture < 1) throw Error("synth: reps_per_gesture must be >= 1");
  if (!(spec.lambda > 0.0)) throw Error("synth: lambda must be > 0");
  if (!(spec.band_lo > 0.0 && spec.band_lo < spec.band_hi && spec.band_hi < spec.fs / 2.0)) {
    throw Error("synth: carrier band must satisfy 0 < lo < hi < fs/2");
  }
  if (!(spec.ramp_s >= 0.0 && spec.ramp_s <= 0.25)) throw Error("synth: ramp_s must be in [0, 0.25]");
  for (double v : {spec.common_mode_amplitude, spec.common_mode_noise_std, spec.noise_std, spec.common_mode_hz}) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("synth: amplitudes and noise levels must be finite and >= 0");
  }
  for (const Source& s : spec.sources) {
    if (!std::isfinite(s.position.x) || !std::isfinite(s.position.y)) throw Error("synth: source position not finite");
    for (const PhaseLevels& p : s.envelope) check_levels(p);
  }
}

MatrixD gain_matrix(const SynthSpec& spec) {
  if (!(spec.lambda > 0.0)) throw Error("synth: lambda must be > 0");
  const double circ = ring_circumference(spec.layout);
  const bool bipolar = spec.layout.scheme() == grid::Scheme::kBipolar;
  MatrixD g(spec.layout.size(), spec.sources.size());
  for (std::size_t c = 0; c < spec.layout.size(); ++c) {
    const grid::Point p = spec.layout.electrodes()[c].coord;
    for (std::size_t s = 0; s < spec.sources.size(); ++s) {
      const grid::Point q = spec.sources[s].position;
      if (bipolar) {
        const double d1 = distance({p.x - 0.5, p.y}, q, circ);
        const double d2 = distance({p.x + 0.5, p.y}, q, circ);
        g(c, s) = std::exp(-d1 / spec.lambda) - std::exp(-d2 / spec.lambda);
      } else {
        g(c, s) = std::exp(-distance(p, q, circ) / spec.lambda);
      }
    }
  }
  return g;
}

double envelope_at(const PhaseLevels& levels, double t, double ramp_s) {
  // Phase starts, their levels and the level each transition starts from;
  // the trial opens from the idle level.
  const double starts[] = {0.0, kMovementEnd, kHoldEnd, kReturnEnd};
  const double level[] = {levels.movement, levels.hold, levels.ret, levels.idle};
  std::size_t phase = 3;
  while (phase > 0 && t < starts[phase]) --phase;
  const double from = phase == 0 ? levels.idle : level[phase - 1];
  const double into = t - starts[phase];
  if (ramp_s > 0.0 && into < ramp_s) return from + (level[phase] - from) * (into / ramp_s);
  return level[phase];
}

RecordingSession generate_session(const SynthSpec& spec, std::size_t workers) {
  validate_spec(spec);
  RecordingSession session;
  session.subject_id = spec.subject_id;
  session.sensor = spec.sensor;
  session.fs = spec.fs;
  session.layout = spec.layout;
  session.blocks.resize(static_cast<std::size_t>(spec.n_blocks));

  const std::size_t channels = spec.layout.size();
  const std::size_t n_src = spec.sources.size();
  const std::size_t trial_len = session.trial_samples();
  const MatrixD gain = gain_matrix(spec);
  const bool monopolar = spec.layout.scheme() == grid::Scheme::kMonopolar;
  const dsp::FilterCoefficients band = dsp::design_bandpass(spec.fs, spec.band_lo, spec.band_hi, spec.band_order);
  // Discarded lead-in so the shaping filter has settled at sample 0.
  const auto warmup = static_cast<std::size_t>(std::llround(0.5 * spec.fs));

  // env[g][s][t] for the five dynamic gestures.
  std::vector<std::vector<std::vector<double>>> env(5, std::vector<std::vector<double>>(n_src));
  for (std::size_t g = 0; g < 5; ++g) {
    for (std::size_t s = 0; s < n_src; ++s) {
      env[g][s].resize(trial_len);
      for (std::size_t t = 0; t < trial_len; ++t) {
        env[g][s][t] = envelope_at(spec.sources[s].envelope[g], static_cast<double>(t) / spec.fs, spec.ramp_s);
      }
    }
  }

  parallel_for(session.blocks.size(), workers, [&](std::size_t b) {
    Rng rng(derive_seed(spec.seed, {b}));
    Block& block = session.blocks[b];
    block.block_id = static_cast<int>(b);

    std::vector<Gesture> order;
    for (int r = 0; r < spec.reps_per_gesture; ++r) order.insert(order.end(), kDynamicGestures.begin(), kDynamicGestures.end());
    shuffle(std::span(order), rng);
    order.insert(order.begin(), Gesture::kSwipeUp);  // preparation trial
    const std::size_t total = order.size() * trial_len;

    std::vector<std::vector<double>> src(n_src);
    for (std::size_t s = 0; s < n_src; ++s) {
      std::vector<double> white(warmup + total);
      fill_normal(white, 1.0, rng);
      std::vector<double> shaped = dsp::apply_filter(white, band);
      shaped.erase(shaped.begin(), shaped.begin() + static_cast<std::ptrdiff_t>(warmup));
      double power = 0.0;
      for (double v : shaped) power += v * v;
      const double scale = power > 0.0 ? 1.0 / std::sqrt(power / static_cast<double>(total)) : 0.0;
      for (double& v : shaped) v *= scale;
      src[s] = std::move(shaped);
    }

    std::vector<double> common(total, 0.0);
    if (monopolar) {
      fill_normal(common, spec.common_mode_noise_std, rng);
      const double phase = 2.0 * std::numbers::pi * uniform_unit(rng);
      for (std::size_t t = 0; t < total; ++t) {
        common[t] += spec.common_mode_amplitude *
                     std::sin(2.0 * std::numbers::pi * spec.common_mode_hz * static_cast<double>(t) / spec.fs + phase);
      }
    }

    std::vector<double> noise(trial_len);
    std::vector<double> row(trial_len);
    for (std::size_t k = 0; k < order.size(); ++k) {
      Trial trial{order[k], MatrixF(channels, trial_len), k == 0};
      const std::size_t g = static_cast<std::size_t>(class_index(order[k]) - 1);
      const std::size_t off = k * trial_len;
      for (std::size_t c = 0; c < channels; ++c) {
        std::copy(common.begin() + static_cast<std::ptrdiff_t>(off),
                  common.begin() + static_cast<std::ptrdiff_t>(off + trial_len), row.begin());
        for (std::size_t s = 0; s < n_src; ++s) {
          const double gcs = gain(c, s);
          if (gcs == 0.0) continue;
          const double* e = env[g][s].data();
          const double* x = src[s].data() + off;
          for (std::size_t t = 0; t < trial_len; ++t) row[t] += gcs * e[t] * x[t];
        }
        fill_normal(noise, spec.noise_std, rng);
        auto out = trial.samples.row(c);
        for (std::size_t t = 0; t < trial_len; ++t) out[t] = static_cast<float>(row[t] + noise[t]);
      }
      block.trials.push_back(std::move(trial));
    }
  });

  validate_session(session, spec.reps_per_gesture == kRepsPerGesture);
  return session;
}

SynthSpec default_spec(Sensor sensor, std::uint64_t seed) {
  SynthSpec s = base_spec(sensor, seed);
  s.common_mode_amplitude = sensor == Sensor::kMaize ? 0.5 : 0.0;
  s.common_mode_noise_std = sensor == Sensor::kMaize ? 0.02 : 0.0;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& e : s.layout.electrodes()) {
    x0 = std::min(x0, e.coord.x);
    x1 = std::max(x1, e.coord.x);
    y0 = std::min(y0, e.coord.y);
    y1 = std::max(y1, e.coord.y);
  }
  Rng rng(derive_seed(seed, {0x5eed}));
  for (int k = 0; k < 8; ++k) {
    Source src;
    src.position = {x0 + (x1 - x0) * uniform_unit(rng), y0 + (y1 - y0) * uniform_unit(rng)};
    for (auto& p : src.envelope) {
      const double hold = 0.1 + 0.9 * uniform_unit(rng);
      p = {0.6 * hold, hold, 0.5 * hold, 0.05};
    }
    s.sources.push_back(src);
  }
  return s;
}

SynthSpec separable_preset(Sensor sensor, std::uint64_t seed) {
  SynthSpec s = base_spec(sensor, seed);
  s.lambda = 1.0;
  s.noise_std = 0.02;
  s.common_mode_amplitude = sensor == Sensor::kMaize ? 0.2 : 0.0;
  constexpr double rest = 0.03;
  const std::vector<grid::Point> pos = spread_positions(s.layout, 5);
  for (std::size_t k = 0; k < 5; ++k) {
    Source src;
    src.position = pos[k];
    for (std::size_t g = 0; g < 5; ++g) {
      src.envelope[g] = g == k ? PhaseLevels{0.6, 1.0, 0.6, rest} : PhaseLevels{rest, rest, rest, rest};
    }
    s.sources.push_back(src);
  }
  return s;
}

SynthSpec planted_importance_spec(const std::set<int>& target_ids, Sensor sensor, std::uint64_t seed) {
  SynthSpec s = base_spec(sensor, seed);
  s.lambda = 0.2;  // gain e^-5 one pitch away
  s.noise_std = 0.05;
  constexpr double rest = 0.03;
  std::size_t j = 0;
  for (int id : target_ids) {
    Source src;
    src.position = s.layout.electrode(id).coord;
    for (std::size_t g = 0; g < 5; ++g) {
      // Distinct hold level per gesture on every target.
      const double hold = 0.2 + 0.2 * static_cast<double>((g + j) % 5);
      src.envelope[g] = {0.6 * hold, hold, 0.5 * hold, rest};
    }
    s.sources.push_back(src);
    ++j;
  }
  return s;
}

namespace {

nlohmann::json to_json(const PhaseLevels& p) {
  return {{"movement", p.movement}, {"hold", p.hold}, {"return", p.ret}, {"idle", p.idle}};
}

PhaseLevels levels_from_json(const nlohmann::json& j) {
  return {j.at("movement").get<double>(), j.at("hold").get<double>(), j.at("return").get<double>(),
          j.at("idle").get<double>()};
}

}  // namespace

nlohmann::json to_json(const SynthSpec& spec) {
  nlohmann::json sources = nlohmann::json::array();
  for (const Source& s : spec.sources) {
    nlohmann::json env = nlohmann::json::object();
    for (std::size_t g = 0; g < 5; ++g) env[std::string(to_string(kDynamicGestures[g]))] = to_json(s.envelope[g]);
    sources.push_back({{"x", s.position.x}, {"y", s.position.y}, {"envelope", env}});
  }
  return {{"subject_id", spec.subject_id},
          {"sensor", to_string(spec.sensor)},
          {"layout", grid::to_json(spec.layout)},
          {"fs", spec.fs},
          {"n_blocks", spec.n_blocks},
          {"reps_per_gesture", spec.reps_per_gesture},
          {"sources", sources},
          {"lambda", spec.lambda},
          {"band", {spec.band_lo, spec.band_hi}},
          {"band_order", spec.band_order},
          {"ramp_s", spec.ramp_s},
          {"common_mode_amplitude", spec.common_mode_amplitude},
          {"common_mode_hz", spec.common_mode_hz},
          {"common_mode_noise_std", spec.common_mode_noise_std},
          {"noise_std", spec.noise_std},
          {"seed", spec.seed}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  try {
    SynthSpec s;
    s.subject_id = j.at("subject_id").get<std::string>();
    s.sensor = parse_sensor(j.at("sensor").get<std::string>());
    s.layout = grid::layout_from_json(j.at("layout"));
    s.fs = j.at("fs").get<double>();
    s.n_blocks = j.at("n_blocks").get<int>();
    s.reps_per_gesture = j.at("reps_per_gesture").get<int>();
    for (const auto& js : j.at("sources")) {
      Source src;
      src.position = {js.at("x").get<double>(), js.at("y").get<double>()};
      for (std::size_t g = 0; g < 5; ++g) {
        src.envelope[g] = levels_from_json(js.at("envelope").at(std::string(to_string(kDynamicGestures[g]))));
      }
      s.sources.push_back(src);
    }
    s.lambda = j.at("lambda").get<double>();
    s.band_lo = j.at("band").at(0).get<double>();
    s.band_hi = j.at("band").at(1).get<double>();
    s.band_order = j.at("band_order").get<int>();
    s.ramp_s = j.at("ramp_s").get<double>();
    s.common_mode_amplitude = j.at("common_mode_amplitude").get<double>();
    s.common_mode_hz = j.at("common_mode_hz").get<double>();
    s.common_mode_noise_std = j.at("common_mode_noise_std").get<double>();
    s.noise_std = j.at("noise_std").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    validate_spec(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid synth spec: ") + e.what());
  }
}

}  // namespace wemg::synth
