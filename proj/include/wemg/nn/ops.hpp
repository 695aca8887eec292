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


// Differentiable ops. Activations are laid out batch-first: B x C x T for
// sequences, B x N for features. Every op validates shapes and rejects
// non-finite outputs.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wemg/nn/tensor.hpp"
#include "wemg/rng.hpp"

namespace wemg::nn {

enum class Mode { kTrain, kEval };

struct Conv1dParams {
  std::size_t stride = 1;
  std::size_t padding = 0;  // zeros on both ends
  std::size_t dilation = 1;
};

std::size_t conv1d_output_length(std::size_t t, std::size_t kernel, const Conv1dParams& p);

/// Cross-correlation. x: B x C_in x T, weight: C_out x C_in x K,
/// bias: C_out or undefined.
Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv1dParams& params = {});

/// Drops the last p time steps of B x C x T.
Tensor chomp(const Tensor& x, std::size_t p);

struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNormState(std::size_t channels = 0)
      : running_mean(channels, 0.0), running_var(channels, 1.0) {}
};

/// Per-channel normalization of B x C x T (or B x C). Train mode uses the
/// biased batch statistics and folds the unbiased variance into the running
/// estimate; eval mode uses the running estimate. Train mode needs B >= 2.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state, Mode mode);

/// w[o] = g[o] * v[o] / ||v[o]|| for every slice along the first axis.
Tensor weight_norm(const Tensor& v, const Tensor& g);

Tensor leaky_relu(const Tensor& x, double slope = 0.2);
Tensor relu(const Tensor& x);

/// Window k, stride s, no padding: T' = (T - k) / s + 1.
Tensor maxpool1d(const Tensor& x, std::size_t kernel = 3, std::size_t stride = 3);
/// B x C x T -> B x C.
Tensor global_avg_pool(const Tensor& x);
/// B x ... -> B x N.
Tensor flatten(const Tensor& x);
/// x: B x N, weight: M x N, bias: M -> B x M.
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor add(const Tensor& a, const Tensor& b);

/// Inverted dropout: train mode zeroes with probability p and scales the
/// survivors by 1/(1-p); eval mode returns x unchanged.
Tensor dropout(const Tensor& x, double p, Mode mode, Rng* rng);

/// Mean over the batch of -log softmax(logits)[label]. logits: B x K.
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

/// sum_b logits[b, targets[b]] as a scalar.
Tensor pick_sum(const Tensor& logits, std::span<const int> targets);

/// sum_i x[i] * weights[i] as a scalar.
Tensor weighted_sum(const Tensor& x, std::span<const double> weights);

/// Row-wise softmax of a rows x cols buffer, max-shifted.
std::vector<double> softmax(std::span<const double> logits, std::size_t cols);

}  // namespace wemg::nn
