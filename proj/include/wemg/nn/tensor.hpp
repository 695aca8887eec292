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


// Reverse-mode differentiation over batched float64 tensors.
//
// A Tensor is a shared handle to a graph node. Ops record their inputs and a
// backward closure when gradient recording is on and some input requires a
// gradient; backward() then replays the closures in reverse topological
// order, accumulating into each node's grad buffer.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wemg::nn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
  std::string op;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<double> value() { return node_->value; }
  std::span<const double> value() const { return node_->value; }
  /// Zero-filled on first access so callers never see an empty buffer.
  std::span<double> grad();
  std::span<const double> grad() const;
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad() { node_->grad.clear(); }

  Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Gradient recording is on by default; off inside a NoGradGuard scope.
/// The flag is thread-local so independent workers do not interfere.
bool grad_enabled() noexcept;

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Backpropagates from a scalar root (seed 1).
void backward(const Tensor& root);
/// Backpropagates with an explicit seed gradient of the root's shape.
void backward(const Tensor& root, std::span<const double> seed);

/// Throws NumericError naming `what` if any value is NaN or infinite.
void check_finite(std::span<const double> values, const std::string& what);

// Used by op implementations.
namespace detail {
/// New output node. Parents are attached only when recording is on and some
/// parent requires a gradient.
Tensor make_result(Shape shape, std::vector<double> value, std::string op, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward);
std::vector<double>& grad_buffer(Node& node);
}  // namespace detail

}  // namespace wemg::nn
