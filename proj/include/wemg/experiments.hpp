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


#pragma once

// Experiment drivers: electrode-configuration studies over one or more
// subjects' sessions, each evaluated with block-wise cross-validation.
//
// Every experiment expands into independent (condition, subject, fold,
// subset) jobs. A job trains on one fold with one channel subset; seeds depend
// only on (config seed, subject, fold, subset index, condition label), so the
// report is identical for any worker count.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wemg/attribution.hpp"
#include "wemg/dsp.hpp"
#include "wemg/grid.hpp"
#include "wemg/nn/models.hpp"
#include "wemg/session.hpp"
#include "wemg/synth.hpp"
#include "wemg/train.hpp"

namespace wemg::exp {

inline constexpr std::string_view kSoftwareVersion = "0.1.0";

enum class Experiment { kRegion, kReference, kChannelCount, kDensity, kAttribution };
std::string_view to_string(Experiment e) noexcept;
Experiment parse_experiment(std::string_view s);

/// A recorded session directory or a synthetic session generated on load.
struct SessionSource {
  std::filesystem::path path;
  std::optional<synth::SynthSpec> synth;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::kRegion;
  /// One session per subject; all must share a layout.
  std::vector<SessionSource> sessions;
  /// Quattro sessions for the Q-bi-15 reference condition; optional.
  std::vector<SessionSource> quattro_sessions;
  nn::ModelSpec model;
  int epochs = 50;
  int batch_size = 64;
  int patience = 10;
  double learning_rate = 1e-3;
  dsp::ProcessOptions process;
  std::vector<std::size_t> counts{15, 12, 10, 8, 6, 4};
  std::vector<std::size_t> density_sizes{4, 6, 8};
  std::vector<grid::DensityClass> density_levels{grid::DensityClass::kHigh, grid::DensityClass::kMedium,
                                                 grid::DensityClass::kLow};
  grid::RegionSelector density_region = grid::RegionSelector::kAll;
  /// Random subsets drawn per fold for random-subset conditions.
  std::size_t subsets_per_fold = 10;
  /// CI mode: 2 subsets per fold. Recorded in the report.
  bool fast = false;
  /// Fold indices to run; empty runs all ten.
  std::vector<std::size_t> folds;
  std::size_t ig_steps = 32;
  /// Test windows per gesture and fold fed to integrated gradients.
  std::size_t ig_windows_per_class = 10;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  /// "auto", "scalar" or "avx2"; the resolved value is stored in reports.
  std::string isa = "auto";
  std::size_t workers = 1;
  std::filesystem::path out_dir;

  std::size_t effective_subsets_per_fold() const noexcept { return fast ? 2 : subsets_per_fold; }
};

/// Relative paths resolve against `base_dir`. Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& file);
/// Fully resolved: absolute paths and complete synthetic specs, so the result
/// reloads to the same experiment from any directory.
nlohmann::json to_json(const ExperimentConfig& cfg);

struct Evaluation {
  std::string condition;
  std::size_t subject = 0;
  std::size_t fold = 0;
  std::size_t subset_index = 0;
  grid::ChannelSubset subset;
  double accuracy = 0.0;
  /// Density experiment only.
  std::optional<double> dist;
  std::optional<double> fom;
  std::optional<grid::DensityClass> density;
  train::FoldResult detail;
};

struct ConditionSummary {
  std::string condition;
  std::size_t evaluations = 0;
  /// Pooled over every (subject, fold, subset) evaluation.
  double pooled_mean = 0.0;
  double pooled_std = 0.0;
  /// Mean of per-subject means; std across subjects (0 for one subject).
  std::vector<double> subject_means;
  double subject_mean = 0.0;
  double subject_std = 0.0;
};

struct ExperimentReport {
  Experiment experiment = Experiment::kRegion;
  std::vector<std::string> conditions;  // evaluation order
  std::vector<Evaluation> evaluations;  // sorted by (condition, subject, fold, subset)
  std::vector<ConditionSummary> summaries;
  /// Normality, ANOVA, Tukey and regression records.
  nlohmann::json statistics = nlohmann::json::object();
  /// Skipped conditions and other non-fatal notes.
  std::vector<std::string> warnings;
  /// Attribution experiment: one map per gesture, normalized per subject and
  /// averaged across subjects.
  std::vector<attr::ImportanceRow> importance;
  grid::ElectrodeLayout layout = grid::build_maize_layout();
  nlohmann::json provenance;
};

/// Progress events (job start/finish, epochs) as JSON objects.
using EventSink = std::function<void(const nlohmann::json&)>;

ExperimentReport run_experiment(const ExperimentConfig& cfg, const EventSink& events = {});

/// Reloads the embedded configuration of a report.
ExperimentConfig config_from_report(const nlohmann::json& report);

/// {"experiment", "results": {...}, "provenance": {...}}. Everything under
/// "results" is a pure function of provenance.config.
nlohmann::json to_json(const ExperimentReport& report);

/// report.json plus evaluations.csv, and density.csv or importance.csv.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// Loads sessions and checks they share a layout.
std::vector<RecordingSession> load_sessions(std::span<const SessionSource> sources, std::size_t workers = 1);

/// Bipolar derivation of every trial with the layout from
/// grid::derive_bipolar_layout.
RecordingSession derive_bipolar_session(const RecordingSession& session, std::span<const grid::ChannelPair> pairing);

}  // namespace wemg::exp
