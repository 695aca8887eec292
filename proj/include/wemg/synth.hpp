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


// Synthetic wrist-sEMG sessions.
//
// Each source emits band-limited Gaussian noise, amplitude-modulated per
// trial by a gesture-specific envelope over the movement / hold / return /
// idle phases. A monopolar channel sees sum_s exp(-d(c, s) / lambda) * src_s
// plus a shared common-mode term and independent sensor noise. A bipolar
// channel is the difference of two contacts half a pitch either side of
// its position, so the common mode cancels.

#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "wemg/grid.hpp"
#include "wemg/session.hpp"

namespace wemg::synth {

/// Phase boundaries within a 4 s trial.
inline constexpr double kMovementEnd = 0.5;
inline constexpr double kHoldEnd = 2.0;
inline constexpr double kReturnEnd = 2.5;

struct PhaseLevels {
  double movement = 0.0;
  double hold = 0.0;
  double ret = 0.0;  // return phase
  double idle = 0.0;
};

struct Source {
  grid::Point position;
  /// Envelope per dynamic gesture, indexed by class_index(g) - 1.
  std::array<PhaseLevels, 5> envelope{};
};

struct SynthSpec {
  std::string subject_id = "synth";
  Sensor sensor = Sensor::kMaize;
  grid::ElectrodeLayout layout = grid::build_maize_layout();
  double fs = 1000.0;
  int n_blocks = 10;
  int reps_per_gesture = kRepsPerGesture;
  std::vector<Source> sources;
  double lambda = 1.5;  // gain decay length, pitch units
  double band_lo = 20.0;
  double band_hi = 450.0;
  int band_order = 8;  // band-pass order of the source-shaping filter
  double ramp_s = 0.05;  // linear transition at each phase boundary
  double common_mode_amplitude = 0.0;  // peak of the shared 50 Hz sinusoid
  double common_mode_hz = 50.0;
  double common_mode_noise_std = 0.0;  // shared broadband term
  double noise_std = 0.05;  // independent per channel
  std::uint64_t seed = 0;
};

/// Throws on an inconsistent spec (fs vs sensor, negative amplitudes,
/// non-positive lambda, empty layout, bad band).
void validate_spec(const SynthSpec& spec);

/// gain(c, s) as a channels x sources matrix. Ring layouts measure distance
/// around the circumference when the layout metadata records one.
MatrixD gain_matrix(const SynthSpec& spec);

/// Envelope value of `levels` at time t in [0, 4) within a trial.
double envelope_at(const PhaseLevels& levels, double t, double ramp_s);

/// Deterministic in (spec, seed); blocks use derived seeds and may be
/// generated on up to `workers` threads with identical output.
RecordingSession generate_session(const SynthSpec& spec, std::size_t workers = 1);

/// Moderate default: eight sources at seeded positions with seeded gesture
/// patterns, 50 Hz common mode on monopolar layouts.
SynthSpec default_spec(Sensor sensor = Sensor::kMaize, std::uint64_t seed = 0);

/// Five well-separated sources, one per dynamic gesture, low noise. With the
/// rest pattern of the idle segments this gives six distinct spatial
/// patterns.
SynthSpec separable_preset(Sensor sensor = Sensor::kMaize, std::uint64_t seed = 0);

/// Sources directly under the target electrodes (ids) with fast decay, so
/// only targets carry class information. Gestures differ by their amplitude
/// on the targets. Empty targets give a class-uninformative session.
SynthSpec planted_importance_spec(const std::set<int>& target_ids, Sensor sensor = Sensor::kMaize,
                                  std::uint64_t seed = 0);

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

}  // namespace wemg::synth
