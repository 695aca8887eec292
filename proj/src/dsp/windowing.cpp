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
#include <set>
#include <string>

#include "wemg/dsp.hpp"
#include "wemg/error.hpp"
#include "wemg/kernels.hpp"

namespace wemg::dsp {
namespace {

std::size_t at_seconds(double seconds, double fs) {
  return static_cast<std::size_t>(std::llround(seconds * fs));
}

Segment slice(const MatrixD& trial, std::size_t begin, std::size_t end, Gesture label, int block_id) {
  if (end > trial.cols()) throw Error("trial too short for segment extraction");
  Segment seg{MatrixD(trial.rows(), end - begin), label, block_id};
  for (std::size_t r = 0; r < trial.rows(); ++r) {
    const auto src = trial.row(r).subspan(begin, end - begin);
    std::copy(src.begin(), src.end(), seg.data.row(r).begin());
  }
  return seg;
}

}  // namespace

std::vector<Segment> extract_segments(const MatrixD& trial, Gesture gesture, bool is_preparation, double fs,
                                      int block_id) {
  if (is_preparation) throw Error("excluded trial: the preparation trial is not segmented");
  if (gesture == Gesture::kIdle) throw Error("trial gesture must be a dynamic gesture");
  std::vector<Segment> out;
  out.push_back(slice(trial, at_seconds(0.5, fs), at_seconds(2.0, fs), gesture, block_id));
  out.push_back(slice(trial, at_seconds(3.4, fs), at_seconds(3.9, fs), Gesture::kIdle, block_id));
  return out;
}

std::vector<Segment> extract_segments(const Trial& trial, double fs, int block_id) {
  MatrixD samples(trial.samples.rows(), trial.samples.cols());
  std::copy(trial.samples.data().begin(), trial.samples.data().end(), samples.data().begin());
  return extract_segments(samples, trial.gesture, trial.is_preparation, fs, block_id);
}

std::size_t window_samples(double fs, const WindowSpec& spec) {
  const auto n = static_cast<std::size_t>(std::llround(spec.window_ms / 1000.0 * fs));
  if (n < 1) throw Error("window shorter than one sample");
  return n;
}

std::size_t window_hop(double fs, const WindowSpec& spec) {
  if (!(spec.overlap >= 0.0 && spec.overlap < 1.0)) throw Error("window overlap must be in [0, 1)");
  const std::size_t n = window_samples(fs, spec);
  const auto hop = static_cast<std::size_t>(std::llround(static_cast<double>(n) * (1.0 - spec.overlap)));
  return std::max<std::size_t>(hop, 1);
}

std::size_t window_count(std::size_t total_samples, double fs, const WindowSpec& spec) {
  const std::size_t n = window_samples(fs, spec);
  if (total_samples < n) {
    throw Error("segment of " + std::to_string(total_samples) + " samples is shorter than one window (" +
                std::to_string(n) + ")");
  }
  return (total_samples - n) / window_hop(fs, spec) + 1;
}

std::vector<MatrixD> window(const MatrixD& segment, double fs, const WindowSpec& spec) {
  const std::size_t n = window_samples(fs, spec);
  const std::size_t hop = window_hop(fs, spec);
  const std::size_t count = window_count(segment.cols(), fs, spec);
  std::vector<MatrixD> out;
  out.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    MatrixD m(segment.rows(), n);
    for (std::size_t r = 0; r < segment.rows(); ++r) {
      const auto src = segment.row(r).subspan(w * hop, n);
      std::copy(src.begin(), src.end(), m.row(r).begin());
    }
    out.push_back(std::move(m));
  }
  return out;
}

WindowedDataset::WindowedDataset(std::vector<Segment> segments, double fs, WindowSpec spec)
    : segments_(std::move(segments)), fs_(fs), spec_(spec) {
  window_length_ = window_samples(fs_, spec_);
  const std::size_t hop = window_hop(fs_, spec_);
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    const MatrixD& data = segments_[s].data;
    if (s == 0) {
      channels_ = data.rows();
    } else if (data.rows() != channels_) {
      throw ShapeError("segments disagree on channel count");
    }
    const std::size_t count = window_count(data.cols(), fs_, spec_);
    for (std::size_t w = 0; w < count; ++w) {
      windows_.push_back({static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(w * hop)});
      labels_.push_back(segments_[s].label);
    }
  }
}

void WindowedDataset::copy_window(std::size_t i, std::span<const std::size_t> channel_rows,
                                  std::span<double> out) const {
  const WindowRef ref = windows_.at(i);
  const MatrixD& data = segments_[ref.segment].data;
  if (out.size() != channel_rows.size() * window_length_) throw ShapeError("window buffer has the wrong size");
  for (std::size_t k = 0; k < channel_rows.size(); ++k) {
    if (channel_rows[k] >= data.rows()) throw ShapeError("channel row out of range");
    const auto src = data.row(channel_rows[k]).subspan(ref.offset, window_length_);
    std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(k * window_length_));
  }
}

MatrixD WindowedDataset::window_matrix(std::size_t i, std::span<const std::size_t> channel_rows) const {
  MatrixD m(channel_rows.size(), window_length_);
  copy_window(i, channel_rows, m.data());
  return m;
}

MatrixD WindowedDataset::window_matrix(std::size_t i) const {
  std::vector<std::size_t> rows(channels_);
  for (std::size_t r = 0; r < channels_; ++r) rows[r] = r;
  return window_matrix(i, rows);
}

std::vector<std::size_t> WindowedDataset::indices_for_blocks(std::span<const int> block_ids) const {
  const std::set<int> wanted(block_ids.begin(), block_ids.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < windows_.size(); ++i) {
    if (wanted.contains(block_id(i))) out.push_back(i);
  }
  return out;
}

std::vector<int> WindowedDataset::block_ids() const {
  std::set<int> ids;
  for (const Segment& s : segments_) ids.insert(s.block_id);
  return {ids.begin(), ids.end()};
}

void WindowedDataset::relabel(std::vector<Gesture> labels) {
  if (labels.size() != windows_.size()) throw Error("relabel: label count does not match window count");
  labels_ = std::move(labels);
}

WindowedDataset process_session(const RecordingSession& session, const ProcessOptions& options) {
  validate_session(session);
  std::optional<FilterCoefficients> coeffs;
  if (options.filter) {
    coeffs = design_bandpass(session.fs, options.lo, options.hi, options.order, options.convention);
  }
  const std::size_t channels = session.channels();
  const std::size_t trial_len = session.trial_samples();

  std::vector<Segment> segments;
  for (const Block& block : session.blocks) {
    // The block is one continuous recording: filter across trial boundaries
    // with zero state at the start of the block.
    const std::size_t total = trial_len * block.trials.size();
    MatrixD filtered(channels, total);
    std::vector<double> row(total);
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t t = 0; t < block.trials.size(); ++t) {
        const auto src = block.trials[t].samples.row(c);
        std::copy(src.begin(), src.end(), row.begin() + static_cast<std::ptrdiff_t>(t * trial_len));
      }
      if (coeffs) {
        const std::vector<double> y = apply_filter(row, *coeffs);
        std::copy(y.begin(), y.end(), filtered.row(c).begin());
      } else {
        std::copy(row.begin(), row.end(), filtered.row(c).begin());
      }
    }
    for (std::size_t t = 0; t < block.trials.size(); ++t) {
      const Trial& trial = block.trials[t];
      if (trial.is_preparation) continue;
      MatrixD trial_data(channels, trial_len);
      for (std::size_t c = 0; c < channels; ++c) {
        const auto src = filtered.row(c).subspan(t * trial_len, trial_len);
        std::copy(src.begin(), src.end(), trial_data.row(c).begin());
      }
      for (Segment& s : extract_segments(trial_data, trial.gesture, false, session.fs, block.block_id)) {
        segments.push_back(std::move(s));
      }
    }
  }
  return WindowedDataset(std::move(segments), session.fs, options.window);
}

nlohmann::json to_json(const ProcessOptions& options) {
  return {{"filter", options.filter},
          {"lo", options.lo},
          {"hi", options.hi},
          {"order", options.order},
          {"order_convention",
           options.convention == OrderConvention::kBandpassOrder ? "bandpass-order" : "prototype-order"},
          {"application", "causal, zero state per block"},
          {"window_ms", options.window.window_ms},
          {"overlap", options.window.overlap}};
}

ChannelNormalizer fit_normalizer(std::span<const MatrixD> train_windows) {
  if (train_windows.empty()) throw Error("cannot fit a normalizer on an empty training set");
  const std::size_t channels = train_windows.front().rows();
  ChannelNormalizer n{std::vector<double>(channels, 0.0), std::vector<double>(channels, 0.0)};
  std::size_t count = 0;
  for (const MatrixD& w : train_windows) {
    if (w.rows() != channels) throw ShapeError("training windows disagree on channel count");
    count += w.cols();
    for (std::size_t c = 0; c < channels; ++c) n.mean[c] += kernels::sum(w.row(c));
  }
  for (double& m : n.mean) m /= static_cast<double>(count);
  for (const MatrixD& w : train_windows) {
    for (std::size_t c = 0; c < channels; ++c) n.stddev[c] += kernels::sum_sq_dev(w.row(c), n.mean[c]);
  }
  for (double& s : n.stddev) s = std::max(std::sqrt(s / static_cast<double>(count)), kStdFloor);
  return n;
}

ChannelNormalizer fit_normalizer(const WindowedDataset& data, std::span<const std::size_t> window_indices,
                                 std::span<const std::size_t> channel_rows) {
  if (window_indices.empty()) throw Error("cannot fit a normalizer on an empty training set");
  const std::size_t channels = channel_rows.size();
  const std::size_t len = data.window_length();
  ChannelNormalizer n{std::vector<double>(channels, 0.0), std::vector<double>(channels, 0.0)};
  std::vector<double> buf(channels * len);
  for (std::size_t i : window_indices) {
    data.copy_window(i, channel_rows, buf);
    for (std::size_t c = 0; c < channels; ++c) n.mean[c] += kernels::sum({buf.data() + c * len, len});
  }
  const double count = static_cast<double>(window_indices.size() * len);
  for (double& m : n.mean) m /= count;
  for (std::size_t i : window_indices) {
    data.copy_window(i, channel_rows, buf);
    for (std::size_t c = 0; c < channels; ++c) {
      n.stddev[c] += kernels::sum_sq_dev({buf.data() + c * len, len}, n.mean[c]);
    }
  }
  for (double& s : n.stddev) s = std::max(std::sqrt(s / count), kStdFloor);
  return n;
}

void apply_normalizer(const ChannelNormalizer& normalizer, std::span<double> window, std::size_t samples) {
  const std::size_t channels = normalizer.mean.size();
  if (window.size() != channels * samples) throw ShapeError("normalizer channel count does not match window");
  for (std::size_t c = 0; c < channels; ++c) {
    const double inv = 1.0 / normalizer.stddev[c];
    const std::span<double> row = window.subspan(c * samples, samples);
    kernels::center_scale(row, row, normalizer.mean[c], inv);
  }
}

std::vector<MatrixD> apply_normalizer(const ChannelNormalizer& normalizer, std::span<const MatrixD> windows) {
  std::vector<MatrixD> out(windows.begin(), windows.end());
  for (MatrixD& w : out) {
    if (w.rows() != normalizer.mean.size()) throw ShapeError("normalizer channel count does not match window");
    apply_normalizer(normalizer, w.data(), w.cols());
  }
  return out;
}

}  // namespace wemg::dsp
