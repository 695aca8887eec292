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


// Central finite-difference gradient checks against reverse-mode results.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "wemg/nn/tensor.hpp"

namespace wemg::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// `loss` rebuilds the graph from the current leaf values and returns a
/// scalar. Every element of every leaf is perturbed by +-h unless
/// `max_per_leaf` limits it to an evenly strided sample. The relative error
/// of an element is |analytic - numeric| / max(|analytic|, |numeric|, f),
/// where f = rel_floor * max|analytic| over the leaf keeps elements that are
/// zero up to rounding from dominating, and abs_floor covers gradients that
/// vanish identically (a bias in front of batch normalization).
inline GradCheckResult grad_check(const std::function<nn::Tensor()>& loss, std::vector<nn::Tensor> leaves,
                                  double h = 1e-6, std::size_t max_per_leaf = 0, double rel_floor = 1e-3,
                                  double abs_floor = 1e-6) {
  for (auto& l : leaves) l.zero_grad();
  nn::backward(loss());
  std::vector<std::vector<double>> analytic;
  for (auto& l : leaves) analytic.emplace_back(l.grad().begin(), l.grad().end());

  GradCheckResult r;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto values = leaves[li].value();
    const std::size_t n = values.size();
    const std::size_t step = max_per_leaf == 0 || n <= max_per_leaf ? 1 : n / max_per_leaf;
    double leaf_scale = 0.0;
    for (double a : analytic[li]) leaf_scale = std::max(leaf_scale, std::abs(a));
    const double floor = std::max(rel_floor * leaf_scale, abs_floor);
    for (std::size_t i = 0; i < n; i += step) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss().value()[0];
      values[i] = saved - h;
      const double down = loss().value()[0];
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[li][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      r.max_rel_error = std::max(r.max_rel_error, std::abs(a - numeric) / denom);
      ++r.checked;
    }
  }
  return r;
}

inline nn::Tensor random_tensor(nn::Shape shape, std::mt19937_64& rng, bool requires_grad = true,
                                double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(nn::numel(shape));
  for (double& x : v) x = u(rng);
  return nn::Tensor::from(std::move(shape), std::move(v), requires_grad);
}

inline std::vector<double> random_weights(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

}  // namespace wemg::testing
