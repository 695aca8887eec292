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


// Integrated-gradients attribution and its aggregation into per-electrode
// importance maps.
//
// Inputs live in normalized-signal space, so the default all-zero baseline is
// the per-channel training mean of the raw signal.

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wemg/grid.hpp"
#include "wemg/matrix.hpp"
#include "wemg/nn/models.hpp"
#include "wemg/session.hpp"

namespace wemg::attr {

/// Differentiable map from a B x C x T batch to B x K pre-softmax logits.
/// Must treat batch rows independently (models run in eval mode).
using LogitFn = std::function<nn::Tensor(const nn::Tensor&)>;

/// Eval-mode forward of `model`.
LogitFn logits_of(nn::Model& model);

struct IgOptions {
  std::size_t steps = 64;
  /// Path points evaluated per forward/backward pass.
  std::size_t chunk = 64;
};

/// IG_i = (x_i - x'_i) / m * sum_{k=1..m} dF_c(x' + (k - 1/2)/m (x - x'))/dx_i,
/// the midpoint rule on the straight path from baseline x' to x, where F_c
/// is the target logit. x and baseline are C x T.
MatrixD integrated_gradients(const LogitFn& f, const MatrixD& x, int target, const MatrixD& baseline,
                             const IgOptions& options = {});
/// Zero baseline.
MatrixD integrated_gradients(const LogitFn& f, const MatrixD& x, int target, const IgOptions& options = {});

/// F_c of a single C x T input.
double target_logit(const LogitFn& f, const MatrixD& x, int target);

/// |sum IG - (F_c(x) - F_c(x'))| / |F_c(x) - F_c(x')|.
double completeness_residual(const LogitFn& f, const MatrixD& x, int target, const MatrixD& baseline,
                             const MatrixD& attributions);

/// score_c = mean over windows of sum_t |IG[c, t]|.
std::vector<double> electrode_importance(std::span<const MatrixD> attributions);

/// Per-gesture electrode_importance; labels[i] is the gesture of window i.
std::map<Gesture, std::vector<double>> electrode_importance_by_gesture(std::span<const MatrixD> attributions,
                                                                       std::span<const Gesture> labels);

/// Min-max to [0, 1]; a constant vector maps to all 0.5.
std::vector<double> min_max_normalize(std::span<const double> scores);

/// Normalizes each subject's scores then averages element-wise.
std::vector<double> normalize_and_average(std::span<const std::vector<double>> per_subject);

/// Indices of the k largest scores, ties to the lower index.
std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k);

struct ImportanceRow {
  std::string gesture;  // gesture name or "all"
  std::vector<double> scores;  // one per layout electrode, id order
};

/// CSV with header electrode_id,x,y,region,gesture,score.
void write_importance_csv(const std::filesystem::path& file, const grid::ElectrodeLayout& layout,
                          std::span<const ImportanceRow> rows);

}  // namespace wemg::attr
