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

// Recording sessions: subject/sensor metadata plus blocks of 4 s trials.
//
// On disk a session is a directory holding `session.json` and one matrix
// file per trial. Binary trial files (`b<block>_t<trial>.f32`) are raw
// little-endian float32, row-major channels x samples. CSV trial files have a
// header row of electrode ids and one row per time sample.

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wemg/grid.hpp"
#include "wemg/matrix.hpp"

namespace wemg {

enum class Gesture : int { kIdle = 0, kSwipeLeft, kSwipeRight, kSwipeUp, kOneTap, kTaps };

inline constexpr int kNumClasses = 6;
inline constexpr std::array<Gesture, 5> kDynamicGestures = {
    Gesture::kSwipeLeft, Gesture::kSwipeRight, Gesture::kSwipeUp, Gesture::kOneTap, Gesture::kTaps};

std::string_view to_string(Gesture g) noexcept;
Gesture parse_gesture(std::string_view s);
inline int class_index(Gesture g) noexcept { return static_cast<int>(g); }

enum class Sensor { kMaize, kQuattro };
std::string_view to_string(Sensor s) noexcept;
Sensor parse_sensor(std::string_view s);
/// 1000 Hz for Maize, 2000 Hz for Quattro.
double nominal_fs(Sensor s) noexcept;

inline constexpr double kTrialSeconds = 4.0;
inline constexpr int kTrialsPerFullBlock = 31;
inline constexpr int kRepsPerGesture = 6;

struct Trial {
  Gesture gesture = Gesture::kIdle;
  MatrixF samples;  // channels x (4 s * fs)
  bool is_preparation = false;
};

struct Block {
  int block_id = 0;
  std::vector<Trial> trials;
};

struct RecordingSession {
  std::string subject_id;
  Sensor sensor = Sensor::kMaize;
  double fs = 1000.0;
  grid::ElectrodeLayout layout = grid::build_maize_layout();
  std::vector<Block> blocks;

  std::size_t channels() const noexcept { return layout.size(); }
  std::size_t trial_samples() const noexcept;
};

/// Checks the session invariants: fs matches the sensor, every trial is
/// 4 s long with one row per layout channel, each block starts with a single
/// preparation trial followed by equal repetitions of the five dynamic
/// gestures, and block ids are unique. With `require_full_blocks` the blocks
/// must hold exactly 31 trials (6 repetitions).
void validate_session(const RecordingSession& session, bool require_full_blocks = false);

/// Trial file stem used on disk, e.g. "b3_t12".
std::string trial_file_stem(int block_id, std::size_t trial_index);

void write_session(const RecordingSession& session, const std::filesystem::path& dir);

enum class TrialFileFormat { kF32, kCsv };
void write_session(const RecordingSession& session, const std::filesystem::path& dir, TrialFileFormat format);

/// Reads a session directory; trial files may be .f32 or .csv.
RecordingSession read_session(const std::filesystem::path& dir);

nlohmann::json session_manifest(const RecordingSession& session, TrialFileFormat format = TrialFileFormat::kF32);

MatrixF read_f32_matrix(const std::filesystem::path& file, std::size_t rows, std::size_t cols);
void write_f32_matrix(const MatrixF& m, const std::filesystem::path& file);
/// CSV trial: header of electrode ids, one row per sample. Columns are
/// reordered to ascending id order.
MatrixF read_csv_trial(const std::filesystem::path& file, const grid::ElectrodeLayout& layout);
void write_csv_trial(const MatrixF& m, const grid::ElectrodeLayout& layout, const std::filesystem::path& file);

}  // namespace wemg
