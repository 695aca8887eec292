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


#include "wemg/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <utility>

#include "wemg/error.hpp"
#include "wemg/nn/ops.hpp"

namespace wemg::attr {

LogitFn logits_of(nn::Model& model) {
  return [&model](const nn::Tensor& x) { return model.forward(x, {}); };
}

namespace {

void check_same_shape(const MatrixD& a, const MatrixD& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + " shape " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) +
                     " does not match input " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

void check_target(const nn::Tensor& logits, std::size_t batch, int target) {
  if (logits.rank() != 2 || logits.dim(0) != batch) throw ShapeError("logit function must return B x K");
  if (target < 0 || static_cast<std::size_t>(target) >= logits.dim(1)) {
    throw Error("target class " + std::to_string(target) + " out of range");
  }
}

}  // namespace

MatrixD integrated_gradients(const LogitFn& f, const MatrixD& x, int target, const MatrixD& baseline,
                             const IgOptions& options) {
  check_same_shape(x, baseline, "baseline");
  if (options.steps < 1) throw Error("integrated gradients needs steps >= 1");
  if (options.chunk < 1) throw Error("integrated gradients needs chunk >= 1");
  const std::size_t n = x.data().size();
  const auto xv = x.data();
  const auto bv = baseline.data();
  std::vector<double> grad_sum(n, 0.0);
  const double m = static_cast<double>(options.steps);

  for (std::size_t k0 = 0; k0 < options.steps; k0 += options.chunk) {
    const std::size_t count = std::min(options.chunk, options.steps - k0);
    std::vector<double> path(count * n);
    for (std::size_t j = 0; j < count; ++j) {
      const double alpha = (static_cast<double>(k0 + j) + 0.5) / m;
      for (std::size_t i = 0; i < n; ++i) path[j * n + i] = bv[i] + alpha * (xv[i] - bv[i]);
    }
    nn::Tensor input = nn::Tensor::from({count, x.rows(), x.cols()}, std::move(path), true);
    const nn::Tensor logits = f(input);
    check_target(logits, count, target);
    const std::vector<int> targets(count, target);
    const nn::Tensor picked = nn::pick_sum(logits, targets);
    // A logit that does not depend on the input has zero gradient.
    if (!picked.requires_grad()) continue;
    nn::backward(picked);
    const auto g = std::as_const(input).grad();
    // Summed in step order so the result does not depend on the chunk size.
    for (std::size_t j = 0; j < count; ++j) {
      for (std::size_t i = 0; i < n; ++i) grad_sum[i] += g[j * n + i];
    }
  }

  MatrixD out(x.rows(), x.cols());
  auto ov = out.data();
  for (std::size_t i = 0; i < n; ++i) ov[i] = (xv[i] - bv[i]) * grad_sum[i] / m;
  return out;
}

MatrixD integrated_gradients(const LogitFn& f, const MatrixD& x, int target, const IgOptions& options) {
  return integrated_gradients(f, x, target, MatrixD(x.rows(), x.cols(), 0.0), options);
}

double target_logit(const LogitFn& f, const MatrixD& x, int target) {
  nn::NoGradGuard no_grad;
  const nn::Tensor logits =
      f(nn::Tensor::from({1, x.rows(), x.cols()}, std::vector<double>(x.data().begin(), x.data().end())));
  check_target(logits, 1, target);
  return logits.value()[static_cast<std::size_t>(target)];
}

double completeness_residual(const LogitFn& f, const MatrixD& x, int target, const MatrixD& baseline,
                             const MatrixD& attributions) {
  check_same_shape(x, baseline, "baseline");
  check_same_shape(x, attributions, "attribution");
  const double delta = target_logit(f, x, target) - target_logit(f, baseline, target);
  const double total = std::accumulate(attributions.data().begin(), attributions.data().end(), 0.0);
  if (delta == 0.0) throw NumericError("completeness undefined: F(x) equals F(baseline)");
  return std::abs(total - delta) / std::abs(delta);
}

std::vector<double> electrode_importance(std::span<const MatrixD> attributions) {
  if (attributions.empty()) throw Error("electrode importance needs at least one window");
  const std::size_t channels = attributions.front().rows();
  std::vector<double> score(channels, 0.0);
  for (const MatrixD& a : attributions) {
    if (a.rows() != channels) throw ShapeError("attributions disagree on channel count");
    for (std::size_t c = 0; c < channels; ++c) {
      double s = 0.0;
      for (double v : a.row(c)) s += std::abs(v);
      score[c] += s;
    }
  }
  for (double& s : score) s /= static_cast<double>(attributions.size());
  return score;
}

std::map<Gesture, std::vector<double>> electrode_importance_by_gesture(std::span<const MatrixD> attributions,
                                                                       std::span<const Gesture> labels) {
  if (labels.size() != attributions.size()) throw Error("one gesture label per attribution is required");
  std::map<Gesture, std::vector<MatrixD>> groups;
  for (std::size_t i = 0; i < attributions.size(); ++i) groups[labels[i]].push_back(attributions[i]);
  std::map<Gesture, std::vector<double>> out;
  for (const auto& [g, maps] : groups) out[g] = electrode_importance(maps);
  return out;
}

std::vector<double> min_max_normalize(std::span<const double> scores) {
  if (scores.empty()) throw Error("cannot normalize an empty score vector");
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size(), 0.5);
  if (*hi > *lo) {
    const double range = *hi - *lo;
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - *lo) / range;
  }
  return out;
}

std::vector<double> normalize_and_average(std::span<const std::vector<double>> per_subject) {
  if (per_subject.empty()) throw Error("group map needs at least one subject");
  const std::size_t n = per_subject.front().size();
  std::vector<double> mean(n, 0.0);
  for (const auto& s : per_subject) {
    if (s.size() != n) throw ShapeError("subjects disagree on electrode count");
    const std::vector<double> norm = min_max_normalize(s);
    for (std::size_t i = 0; i < n; ++i) mean[i] += norm[i];
  }
  for (double& v : mean) v /= static_cast<double>(per_subject.size());
  return mean;
}

std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

void write_importance_csv(const std::filesystem::path& file, const grid::ElectrodeLayout& layout,
                          std::span<const ImportanceRow> rows) {
  std::ofstream out(file);
  if (!out) throw Error("cannot open " + file.string() + " for writing");
  out.precision(17);
  out << "electrode_id,x,y,region,gesture,score\n";
  for (const ImportanceRow& row : rows) {
    if (row.scores.size() != layout.size()) throw ShapeError("importance row does not cover the layout");
    for (std::size_t c = 0; c < layout.size(); ++c) {
      const grid::Electrode& e = layout.electrodes()[c];
      out << e.id << ',' << e.coord.x << ',' << e.coord.y << ',' << grid::to_string(e.region) << ',' << row.gesture
          << ',' << row.scores[c] << '\n';
    }
  }
  if (!out) throw Error("failed writing " + file.string());
}

}  // namespace wemg::attr
