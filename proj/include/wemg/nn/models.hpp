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


// The two gesture classifiers. Both map B x N_c x N_p windows to B x 6 logits;
// softmax is applied only at loss and prediction time.

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "wemg/nn/ops.hpp"
#include "wemg/nn/tensor.hpp"

namespace wemg::nn {

struct CnnConfig {
  std::size_t in_channels = 32;
  std::size_t input_length = 250;
  std::vector<std::size_t> filters = {32, 64};
  std::size_t kernel = 3;
  double leaky_slope = 0.2;
  std::size_t pool_kernel = 3;
  std::size_t pool_stride = 3;
  double dropout = 0.2;
  std::size_t hidden = 256;
  std::size_t classes = 6;
};

struct TcnConfig {
  std::size_t in_channels = 32;
  std::size_t input_length = 250;
  /// Output channels per temporal block; block i uses dilation 2^i.
  std::vector<std::size_t> channels = {32};
  std::size_t kernel = 3;
  double dropout = 0.2;
  std::size_t pool_kernel = 3;
  std::size_t pool_stride = 3;
  std::size_t classes = 6;
};

nlohmann::json to_json(const CnnConfig& c);
nlohmann::json to_json(const TcnConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
CnnConfig cnn_config_from_json(const nlohmann::json& j, CnnConfig base = {});
TcnConfig tcn_config_from_json(const nlohmann::json& j, TcnConfig base = {});

/// Named intermediate activations recorded during a forward pass.
struct TraceEntry {
  std::string name;
  Tensor tensor;
};
using ForwardTrace = std::vector<TraceEntry>;

struct ForwardContext {
  Mode mode = Mode::kEval;
  Rng* rng = nullptr;             // dropout source, train mode only
  ForwardTrace* trace = nullptr;  // optional
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct NamedBuffer {
  std::string name;
  std::vector<double>* values;
};

/// Snapshot of every parameter and buffer value, in declaration order.
struct ModelState {
  std::vector<std::vector<double>> params;
  std::vector<std::vector<double>> buffers;
};

class Model {
 public:
  virtual ~Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  virtual std::string arch() const = 0;
  virtual nlohmann::json config_json() const = 0;
  virtual Tensor forward(const Tensor& x, const ForwardContext& ctx) = 0;

  /// Trainable tensors in declaration order.
  const std::vector<NamedTensor>& parameters() const noexcept { return params_; }
  /// Non-trainable state (batch-norm running statistics).
  std::vector<NamedBuffer> buffers();
  std::size_t parameter_count() const;
  std::uint64_t init_seed() const noexcept { return seed_; }

  ModelState state() const;
  void load_state(const ModelState& s);
  void zero_grad();

 protected:
  explicit Model(std::uint64_t seed) : seed_(seed) {}
  Tensor add_param(std::string name, Shape shape);
  void add_buffer(std::string name, std::vector<double>* values);
  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  void init_uniform(Tensor& t, std::size_t fan_in, Rng& rng);

 private:
  std::uint64_t seed_;
  std::vector<NamedTensor> params_;
  std::vector<NamedBuffer> buffers_;
};

class Cnn final : public Model {
 public:
  Cnn(CnnConfig config, std::uint64_t seed);
  std::string arch() const override { return "cnn"; }
  nlohmann::json config_json() const override { return to_json(config_); }
  Tensor forward(const Tensor& x, const ForwardContext& ctx) override;
  const CnnConfig& config() const noexcept { return config_; }
  /// Width of the flattened feature vector after the conv blocks.
  std::size_t flat_features() const noexcept { return flat_; }

 private:
  struct Block {
    Tensor weight, bias, gamma, beta;
    std::unique_ptr<BatchNormState> bn;
  };
  CnnConfig config_;
  std::vector<Block> blocks_;
  Tensor fc1_w_, fc1_b_, fc2_w_, fc2_b_;
  std::size_t flat_ = 0;
};

class Tcn final : public Model {
 public:
  Tcn(TcnConfig config, std::uint64_t seed);
  std::string arch() const override { return "tcn"; }
  nlohmann::json config_json() const override { return to_json(config_); }
  Tensor forward(const Tensor& x, const ForwardContext& ctx) override;
  const TcnConfig& config() const noexcept { return config_; }

 private:
  struct WnConv {
    Tensor v, g, bias;
  };
  struct Block {
    WnConv conv1, conv2;
    Tensor down_w, down_b;  // undefined when channels already match
    std::size_t dilation = 1;
  };
  TcnConfig config_;
  std::vector<Block> blocks_;
  Tensor fc_w_, fc_b_;
};

enum class Arch { kCnn, kTcn };
std::string_view to_string(Arch a) noexcept;
Arch parse_arch(std::string_view s);

struct ModelSpec {
  Arch arch = Arch::kCnn;
  CnnConfig cnn;
  TcnConfig tcn;
};

nlohmann::json to_json(const ModelSpec& spec);
/// {"arch": ..., "cnn": {...}, "tcn": {...}}, all keys optional.
ModelSpec model_spec_from_json(const nlohmann::json& j);

/// Builds the model with in_channels/input_length taken from the arguments.
std::unique_ptr<Model> make_model(const ModelSpec& spec, std::size_t in_channels, std::size_t input_length,
                                  std::uint64_t seed);

}  // namespace wemg::nn
