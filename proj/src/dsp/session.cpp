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
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "wemg/error.hpp"
#include "wemg/session.hpp"

namespace wemg {
namespace {

constexpr int kFormatVersion = 1;

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

std::string where(const Block& block, std::size_t t) {
  return "block " + std::to_string(block.block_id) + " trial " + std::to_string(t);
}

}  // namespace

std::string_view to_string(Gesture g) noexcept {
  switch (g) {
    case Gesture::kIdle:
      return "idle";
    case Gesture::kSwipeLeft:
      return "swipe-left";
    case Gesture::kSwipeRight:
      return "swipe-right";
    case Gesture::kSwipeUp:
      return "swipe-up";
    case Gesture::kOneTap:
      return "one-tap";
    case Gesture::kTaps:
      return "taps";
  }
  return "idle";
}

Gesture parse_gesture(std::string_view s) {
  for (int i = 0; i < kNumClasses; ++i) {
    if (to_string(static_cast<Gesture>(i)) == s) return static_cast<Gesture>(i);
  }
  throw FormatError("unknown gesture '" + std::string(s) + "'");
}

std::string_view to_string(Sensor s) noexcept { return s == Sensor::kMaize ? "maize" : "quattro"; }

Sensor parse_sensor(std::string_view s) {
  if (s == "maize") return Sensor::kMaize;
  if (s == "quattro") return Sensor::kQuattro;
  throw FormatError("unknown sensor '" + std::string(s) + "'");
}

double nominal_fs(Sensor s) noexcept { return s == Sensor::kMaize ? 1000.0 : 2000.0; }

std::size_t RecordingSession::trial_samples() const noexcept {
  return static_cast<std::size_t>(std::llround(kTrialSeconds * fs));
}

void validate_session(const RecordingSession& session, bool require_full_blocks) {
  if (session.fs != nominal_fs(session.sensor)) {
    throw Error("session fs " + std::to_string(session.fs) + " Hz does not match the " +
                std::string(to_string(session.sensor)) + " sensor");
  }
  if (session.blocks.empty()) throw Error("session has no blocks");
  const std::size_t len = session.trial_samples();
  std::set<int> block_ids;
  for (const Block& block : session.blocks) {
    if (!block_ids.insert(block.block_id).second) {
      throw Error("duplicate block id " + std::to_string(block.block_id));
    }
    if (block.trials.size() < 2) throw Error("block " + std::to_string(block.block_id) + " has too few trials");
    if (require_full_blocks && block.trials.size() != static_cast<std::size_t>(kTrialsPerFullBlock)) {
      throw Error("block " + std::to_string(block.block_id) + " has " + std::to_string(block.trials.size()) +
                  " trials, expected 31");
    }
    std::map<Gesture, int> counts;
    for (std::size_t t = 0; t < block.trials.size(); ++t) {
      const Trial& trial = block.trials[t];
      if (trial.samples.rows() != session.channels() || trial.samples.cols() != len) {
        throw ShapeError(where(block, t) + " is " + std::to_string(trial.samples.rows()) + "x" +
                         std::to_string(trial.samples.cols()) + ", expected " + std::to_string(session.channels()) +
                         "x" + std::to_string(len));
      }
      if (trial.is_preparation != (t == 0)) {
        throw Error(where(block, t) + ": exactly the first trial of a block is the preparation trial");
      }
      if (trial.gesture == Gesture::kIdle) throw Error(where(block, t) + " has the static idle gesture");
      if (!trial.is_preparation) ++counts[trial.gesture];
    }
    const int reps = counts.empty() ? 0 : counts.begin()->second;
    if (counts.size() != kDynamicGestures.size() ||
        std::any_of(counts.begin(), counts.end(), [&](const auto& kv) { return kv.second != reps; })) {
      throw Error("block " + std::to_string(block.block_id) +
                  " does not hold equal repetitions of the five dynamic gestures");
    }
  }
}

std::string trial_file_stem(int block_id, std::size_t trial_index) {
  return "b" + std::to_string(block_id) + "_t" + std::to_string(trial_index);
}

MatrixF read_f32_matrix(const std::filesystem::path& file, std::size_t rows, std::size_t cols) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cannot open " + file.string());
  std::vector<std::uint32_t> raw(rows * cols);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t)));
  if (in.gcount() != static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t))) {
    throw FormatError(file.string() + " is shorter than " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " float32 values");
  }
  in.peek();
  if (!in.eof()) throw FormatError(file.string() + " has trailing data");
  MatrixF m(rows, cols);
  for (std::size_t i = 0; i < raw.size(); ++i) m.data()[i] = std::bit_cast<float>(to_little_endian(raw[i]));
  return m;
}

void write_f32_matrix(const MatrixF& m, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + file.string());
  std::vector<std::uint32_t> raw(m.data().size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = to_little_endian(std::bit_cast<std::uint32_t>(m.data()[i]));
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t)));
}

MatrixF read_csv_trial(const std::filesystem::path& file, const grid::ElectrodeLayout& layout) {
  std::ifstream in(file);
  if (!in) throw FormatError("cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(file.string() + " is empty");
  std::vector<int> ids;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) ids.push_back(std::stoi(cell));
  }
  if (ids.size() != layout.size()) {
    throw FormatError(file.string() + ": header has " + std::to_string(ids.size()) + " channels, layout has " +
                      std::to_string(layout.size()));
  }
  std::vector<std::vector<float>> columns(ids.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= ids.size()) throw FormatError(file.string() + ": row has too many values");
      columns[c++].push_back(std::stof(cell));
    }
    if (c != ids.size()) throw FormatError(file.string() + ": row has too few values");
  }
  MatrixF m(ids.size(), columns.front().size());
  std::set<int> seen;
  for (std::size_t c = 0; c < ids.size(); ++c) {
    if (!layout.contains(ids[c]) || !seen.insert(ids[c]).second) {
      throw FormatError(file.string() + ": bad channel id " + std::to_string(ids[c]) + " in header");
    }
    std::copy(columns[c].begin(), columns[c].end(), m.row(static_cast<std::size_t>(ids[c] - 1)).begin());
  }
  return m;
}

void write_csv_trial(const MatrixF& m, const grid::ElectrodeLayout& layout, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + file.string());
  for (std::size_t c = 0; c < m.rows(); ++c) out << (c ? "," : "") << layout.electrodes()[c].id;
  out << '\n';
  out.precision(9);
  for (std::size_t t = 0; t < m.cols(); ++t) {
    for (std::size_t c = 0; c < m.rows(); ++c) out << (c ? "," : "") << m(c, t);
    out << '\n';
  }
}

nlohmann::json session_manifest(const RecordingSession& session, TrialFileFormat format) {
  const char* ext = format == TrialFileFormat::kF32 ? ".f32" : ".csv";
  nlohmann::json blocks = nlohmann::json::array();
  for (const Block& block : session.blocks) {
    nlohmann::json trials = nlohmann::json::array();
    for (std::size_t t = 0; t < block.trials.size(); ++t) {
      trials.push_back({{"index", t},
                        {"gesture", to_string(block.trials[t].gesture)},
                        {"is_preparation", block.trials[t].is_preparation},
                        {"file", trial_file_stem(block.block_id, t) + ext}});
    }
    blocks.push_back({{"block_id", block.block_id}, {"trials", std::move(trials)}});
  }
  return {{"format_version", kFormatVersion},
          {"subject_id", session.subject_id},
          {"sensor", to_string(session.sensor)},
          {"fs", session.fs},
          {"channels", session.channels()},
          {"samples_per_trial", session.trial_samples()},
          {"trial_format", format == TrialFileFormat::kF32 ? "f32" : "csv"},
          {"layout", grid::to_json(session.layout)},
          {"blocks", std::move(blocks)}};
}

void write_session(const RecordingSession& session, const std::filesystem::path& dir) {
  write_session(session, dir, TrialFileFormat::kF32);
}

void write_session(const RecordingSession& session, const std::filesystem::path& dir, TrialFileFormat format) {
  validate_session(session);
  std::filesystem::create_directories(dir);
  const nlohmann::json manifest = session_manifest(session, format);
  for (std::size_t b = 0; b < session.blocks.size(); ++b) {
    const Block& block = session.blocks[b];
    for (std::size_t t = 0; t < block.trials.size(); ++t) {
      const std::filesystem::path file = dir / manifest["blocks"][b]["trials"][t]["file"].get<std::string>();
      if (format == TrialFileFormat::kF32) {
        write_f32_matrix(block.trials[t].samples, file);
      } else {
        write_csv_trial(block.trials[t].samples, session.layout, file);
      }
    }
  }
  std::ofstream out(dir / "session.json", std::ios::trunc);
  if (!out) throw FormatError("cannot write " + (dir / "session.json").string());
  out << manifest.dump(2) << '\n';
}

RecordingSession read_session(const std::filesystem::path& dir) {
  std::ifstream in(dir / "session.json");
  if (!in) throw FormatError("cannot open " + (dir / "session.json").string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("session.json: " + std::string(e.what()));
  }
  try {
    if (j.value("format_version", kFormatVersion) != kFormatVersion) {
      throw FormatError("unsupported session format version");
    }
    RecordingSession s;
    s.subject_id = j.at("subject_id").get<std::string>();
    s.sensor = parse_sensor(j.at("sensor").get<std::string>());
    s.fs = j.at("fs").get<double>();
    s.layout = grid::layout_from_json(j.at("layout"));
    const std::size_t channels = s.layout.size();
    if (j.contains("channels") && j["channels"].get<std::size_t>() != channels) {
      throw FormatError("session.json channel count disagrees with its layout");
    }
    const std::size_t len = s.trial_samples();
    for (const auto& jb : j.at("blocks")) {
      Block block;
      block.block_id = jb.at("block_id").get<int>();
      for (const auto& jt : jb.at("trials")) {
        Trial trial;
        trial.gesture = parse_gesture(jt.at("gesture").get<std::string>());
        trial.is_preparation = jt.at("is_preparation").get<bool>();
        const std::filesystem::path file = dir / jt.at("file").get<std::string>();
        if (file.extension() == ".csv") {
          trial.samples = read_csv_trial(file, s.layout);
        } else {
          trial.samples = read_f32_matrix(file, channels, len);
        }
        block.trials.push_back(std::move(trial));
      }
      s.blocks.push_back(std::move(block));
    }
    validate_session(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("session.json: " + std::string(e.what()));
  }
}

}  // namespace wemg
