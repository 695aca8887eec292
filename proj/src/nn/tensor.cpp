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


#include "wemg/nn/tensor.hpp"

#include <unordered_set>

#include "wemg/error.hpp"
#include "wemg/kernels.hpp"

namespace wemg::nn {
namespace {

thread_local bool t_grad_enabled = true;

}  // namespace

std::size_t numel(const Shape& shape) noexcept {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
  return s;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value.assign(numel(shape), 0.0);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  node->op = "leaf";
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (values.size() != numel(shape)) {
    throw ShapeError("tensor of shape " + shape_string(shape) + " needs " + std::to_string(numel(shape)) +
                     " values, got " + std::to_string(values.size()));
  }
  check_finite(values, "tensor data");
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  node->op = "leaf";
  return Tensor(std::move(node));
}

std::span<double> Tensor::grad() { return detail::grad_buffer(*node_); }

std::span<const double> Tensor::grad() const { return detail::grad_buffer(*node_); }

bool grad_enabled() noexcept { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

void check_finite(std::span<const double> values, const std::string& what) {
  if (!kernels::all_finite(values)) throw NumericError("non-finite value in " + what);
}

namespace detail {

std::vector<double>& grad_buffer(Node& node) {
  if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
  return node.grad;
}

Tensor make_result(Shape shape, std::vector<double> value, std::string op, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward) {
  check_finite(value, op + " output");
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = std::move(op);
  if (t_grad_enabled) {
    for (const Tensor& p : parents) {
      if (p.defined() && p.requires_grad()) node->requires_grad = true;
    }
  }
  if (node->requires_grad) {
    for (Tensor& p : parents) {
      if (p.defined()) node->parents.push_back(p.node_ptr());
    }
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

}  // namespace detail

void backward(const Tensor& root) {
  if (root.size() != 1) throw ShapeError("backward() without a seed needs a scalar root, got " +
                                         shape_string(root.shape()));
  const double one = 1.0;
  backward(root, std::span<const double>(&one, 1));
}

void backward(const Tensor& root, std::span<const double> seed) {
  if (seed.size() != root.size()) throw ShapeError("backward seed does not match the root shape");
  if (!root.requires_grad()) throw Error("backward() on a tensor that does not require a gradient");

  // Iterative post-order DFS gives a topological order without recursion.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node(), 0}};
  visited.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  std::vector<double>& g = detail::grad_buffer(*root.node());
  for (std::size_t i = 0; i < seed.size(); ++i) g[i] += seed[i];
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (!node->backward) continue;
    detail::grad_buffer(*node);
    node->backward(*node);
    check_finite(node->grad, node->op + " gradient");
  }
}

}  // namespace wemg::nn
