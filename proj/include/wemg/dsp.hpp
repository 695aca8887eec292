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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "wemg/matrix.hpp"
#include "wemg/session.hpp"

namespace wemg::dsp {

// ---------------------------------------------------------------------------
// Band-pass filtering

/// How the `order` argument of design_bandpass is read.
///   kBandpassOrder:  order of the realized band-pass (order/2 analog
///                    low-pass prototype poles; order 4 -> two sections).
///   kPrototypeOrder: order of the analog low-pass prototype (order 4 ->
///                    eighth-order band-pass, four sections).
enum class OrderConvention { kBandpassOrder, kPrototypeOrder };

/// One second-order section, a0 normalized to 1:
///   H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct FilterCoefficients {
  std::vector<Biquad> sections;
  double fs = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int order = 0;
  OrderConvention convention = OrderConvention::kBandpassOrder;
};

/// Butterworth band-pass as cascaded biquads via the bilinear transform with
/// prewarped band edges. Gain is 1 at the geometric band center. Throws if
/// the band is invalid or any pole is not strictly inside the unit circle.
FilterCoefficients design_bandpass(double fs, double lo = 20.0, double hi = 450.0, int order = 4,
                                   OrderConvention convention = OrderConvention::kBandpassOrder);

std::complex<double> frequency_response(const FilterCoefficients& coeffs, double freq_hz);
std::vector<std::complex<double>> filter_poles(const FilterCoefficients& coeffs);

/// Causal cascade, zero initial state, output length == input length.
std::vector<double> apply_filter(std::span<const double> signal, const FilterCoefficients& coeffs);
/// Row-wise application.
MatrixD apply_filter(const MatrixD& signals, const FilterCoefficients& coeffs);

nlohmann::json to_json(const FilterCoefficients& coeffs);

// ---------------------------------------------------------------------------
// Segmentation and windowing

struct Segment {
  MatrixD data;  // channels x samples
  Gesture label = Gesture::kIdle;
  int block_id = 0;
};

/// Movement segment [0.5 s, 2.0 s) with the trial's label and idle segment
/// [3.4 s, 3.9 s). Throws for the preparation trial.
std::vector<Segment> extract_segments(const MatrixD& trial, Gesture gesture, bool is_preparation, double fs,
                                      int block_id = 0);
std::vector<Segment> extract_segments(const Trial& trial, double fs, int block_id = 0);

struct WindowSpec {
  double window_ms = 250.0;
  double overlap = 0.5;
};

std::size_t window_samples(double fs, const WindowSpec& spec = {});
std::size_t window_hop(double fs, const WindowSpec& spec = {});
/// floor((T - N_p) / hop) + 1; throws if T < N_p.
std::size_t window_count(std::size_t total_samples, double fs, const WindowSpec& spec = {});

/// Left-aligned, non-jittered windows; trailing partial windows dropped.
std::vector<MatrixD> window(const MatrixD& segment, double fs, const WindowSpec& spec = {});

struct WindowRef {
  std::uint32_t segment = 0;
  std::uint32_t offset = 0;
};

/// Filtered segments plus the window index over them. Windows are views into
/// the segments so overlapping windows share storage.
class WindowedDataset {
 public:
  WindowedDataset() = default;
  WindowedDataset(std::vector<Segment> segments, double fs, WindowSpec spec = {});

  std::size_t size() const noexcept { return windows_.size(); }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t window_length() const noexcept { return window_length_; }
  double fs() const noexcept { return fs_; }
  const WindowSpec& spec() const noexcept { return spec_; }

  Gesture label(std::size_t i) const { return labels_[i]; }
  int block_id(std::size_t i) const { return segments_[windows_[i].segment].block_id; }
  const std::vector<Segment>& segments() const noexcept { return segments_; }
  const std::vector<WindowRef>& windows() const noexcept { return windows_; }

  /// Copies window i restricted to `channel_rows` (0-based rows, in the given
  /// order) into `out`, which must hold channel_rows.size() * window_length().
  void copy_window(std::size_t i, std::span<const std::size_t> channel_rows, std::span<double> out) const;
  MatrixD window_matrix(std::size_t i, std::span<const std::size_t> channel_rows) const;
  MatrixD window_matrix(std::size_t i) const;

  std::vector<std::size_t> indices_for_blocks(std::span<const int> block_ids) const;
  std::vector<int> block_ids() const;

  const std::vector<Gesture>& labels() const noexcept { return labels_; }
  /// Replaces the per-window labels (window order). Used for the
  /// permuted-label control.
  void relabel(std::vector<Gesture> labels);

 private:
  std::vector<Segment> segments_;
  std::vector<WindowRef> windows_;
  std::vector<Gesture> labels_;
  double fs_ = 0.0;
  WindowSpec spec_;
  std::size_t channels_ = 0;
  std::size_t window_length_ = 0;
};

struct ProcessOptions {
  bool filter = true;
  double lo = 20.0;
  double hi = 450.0;
  int order = 4;
  OrderConvention convention = OrderConvention::kBandpassOrder;
  WindowSpec window;
};

/// Filters each block continuously (zero state at block start), then extracts
/// segments from every non-preparation trial and windows them.
WindowedDataset process_session(const RecordingSession& session, const ProcessOptions& options = {});

nlohmann::json to_json(const ProcessOptions& options);

// ---------------------------------------------------------------------------
// Normalization

inline constexpr double kStdFloor = 1e-8;

struct ChannelNormalizer {
  std::vector<double> mean;
  std::vector<double> stddev;
};

/// Per-channel mean and population std pooled over all windows and samples.
ChannelNormalizer fit_normalizer(std::span<const MatrixD> train_windows);
/// Same statistics computed directly from dataset windows.
ChannelNormalizer fit_normalizer(const WindowedDataset& data, std::span<const std::size_t> window_indices,
                                 std::span<const std::size_t> channel_rows);

std::vector<MatrixD> apply_normalizer(const ChannelNormalizer& normalizer, std::span<const MatrixD> windows);
/// In-place on a channels x samples buffer.
void apply_normalizer(const ChannelNormalizer& normalizer, std::span<double> window, std::size_t samples);

}  // namespace wemg::dsp
