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


#include <cmath>

#include "wemg/error.hpp"
#include "wemg/kernels.hpp"
#include "wemg/train.hpp"

namespace wemg::train {

AdamState make_adam_state(std::span<const std::vector<double>> params, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const auto& p : params) {
    s.m.emplace_back(p.size(), 0.0);
    s.v.emplace_back(p.size(), 0.0);
  }
  return s;
}

AdamState make_adam_state(const nn::Model& model, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const auto& p : model.parameters()) {
    s.m.emplace_back(p.tensor.size(), 0.0);
    s.v.emplace_back(p.tensor.size(), 0.0);
  }
  return s;
}

namespace {

void check_shapes(std::size_t count, const AdamState& state) {
  if (state.m.size() != count || state.v.size() != count) {
    throw ShapeError("adam: state has " + std::to_string(state.m.size()) + " slots for " + std::to_string(count) +
                     " parameters");
  }
}

// theta -= lr * mhat / (sqrt(vhat) + eps) with mhat = m / (1 - b1^t),
// vhat = v / (1 - b2^t).
void update(std::span<double> theta, std::span<const double> g, std::vector<double>& m, std::vector<double>& v,
            const AdamConfig& c, double bc1, double bc2) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    theta[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
}

}  // namespace

void adam_step(std::span<std::vector<double>> params, std::span<const std::vector<double>> grads, AdamState& state) {
  check_shapes(params.size(), state);
  if (grads.size() != params.size()) throw ShapeError("adam: gradient count does not match parameter count");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].size() != params[k].size() || state.m[k].size() != params[k].size()) {
      throw ShapeError("adam: shape mismatch in parameter " + std::to_string(k));
    }
    if (!kernels::all_finite(grads[k])) throw NumericError("divergence detected");
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(state.config.beta1, t);
  const double bc2 = 1.0 - std::pow(state.config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    update(params[k], grads[k], state.m[k], state.v[k], state.config, bc1, bc2);
  }
}

void adam_step(nn::Model& model, AdamState& state) {
  const auto& params = model.parameters();
  check_shapes(params.size(), state);
  for (std::size_t k = 0; k < params.size(); ++k) {
    nn::Tensor p = params[k].tensor;
    if (state.m[k].size() != p.size()) throw ShapeError("adam: shape mismatch in " + params[k].name);
    if (p.has_grad() && !kernels::all_finite(p.grad())) throw NumericError("divergence detected");
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(state.config.beta1, t);
  const double bc2 = 1.0 - std::pow(state.config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    nn::Tensor p = params[k].tensor;
    update(p.value(), p.grad(), state.m[k], state.v[k], state.config, bc1, bc2);
  }
}

}  // namespace wemg::train
