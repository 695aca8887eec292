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


#include "wemg/nn/models.hpp"

#include <cmath>
#include <set>

#include "wemg/error.hpp"

namespace wemg::nn {
namespace {

void trace(const ForwardContext& ctx, const char* name, const Tensor& t) {
  if (ctx.trace) ctx.trace->push_back({name, t});
}

void trace(const ForwardContext& ctx, const std::string& name, const Tensor& t) {
  if (ctx.trace) ctx.trace->push_back({name, t});
}

void check_input(const Tensor& x, std::size_t channels, const char* arch) {
  if (!x.defined() || x.rank() != 3) throw ShapeError(std::string(arch) + ": input must be B x N_c x N_p");
  if (x.dim(1) != channels) {
    throw ShapeError(std::string(arch) + ": input has " + std::to_string(x.dim(1)) + " channels, model expects " +
                     std::to_string(channels));
  }
}


void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const char* what) {
  if (!j.is_object()) throw FormatError(std::string(what) + " config must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw FormatError(std::string("unknown ") + what + " config key '" + k + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Config serialization

nlohmann::json to_json(const CnnConfig& c) {
  return {{"in_channels", c.in_channels}, {"input_length", c.input_length}, {"filters", c.filters},
          {"kernel", c.kernel},           {"leaky_slope", c.leaky_slope},   {"pool_kernel", c.pool_kernel},
          {"pool_stride", c.pool_stride}, {"dropout", c.dropout},           {"hidden", c.hidden},
          {"classes", c.classes}};
}

nlohmann::json to_json(const TcnConfig& c) {
  return {{"in_channels", c.in_channels}, {"input_length", c.input_length}, {"channels", c.channels},
          {"kernel", c.kernel},           {"dropout", c.dropout},           {"pool_kernel", c.pool_kernel},
          {"pool_stride", c.pool_stride}, {"classes", c.classes}};
}

CnnConfig cnn_config_from_json(const nlohmann::json& j, CnnConfig c) {
  reject_unknown(j,
                 {"in_channels", "input_length", "filters", "kernel", "leaky_slope", "pool_kernel", "pool_stride",
                  "dropout", "hidden", "classes"},
                 "cnn");
  c.in_channels = j.value("in_channels", c.in_channels);
  c.input_length = j.value("input_length", c.input_length);
  c.filters = j.value("filters", c.filters);
  c.kernel = j.value("kernel", c.kernel);
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
  c.pool_kernel = j.value("pool_kernel", c.pool_kernel);
  c.pool_stride = j.value("pool_stride", c.pool_stride);
  c.dropout = j.value("dropout", c.dropout);
  c.hidden = j.value("hidden", c.hidden);
  c.classes = j.value("classes", c.classes);
  return c;
}

TcnConfig tcn_config_from_json(const nlohmann::json& j, TcnConfig c) {
  reject_unknown(j,
                 {"in_channels", "input_length", "channels", "kernel", "dropout", "pool_kernel", "pool_stride",
                  "classes"},
                 "tcn");
  c.in_channels = j.value("in_channels", c.in_channels);
  c.input_length = j.value("input_length", c.input_length);
  c.channels = j.value("channels", c.channels);
  c.kernel = j.value("kernel", c.kernel);
  c.dropout = j.value("dropout", c.dropout);
  c.pool_kernel = j.value("pool_kernel", c.pool_kernel);
  c.pool_stride = j.value("pool_stride", c.pool_stride);
  c.classes = j.value("classes", c.classes);
  return c;
}

// ---------------------------------------------------------------------------
// Model base

Tensor Model::add_param(std::string name, Shape shape) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  params_.push_back({std::move(name), t});
  return t;
}

void Model::add_buffer(std::string name, std::vector<double>* values) { buffers_.push_back({std::move(name), values}); }

std::vector<NamedBuffer> Model::buffers() { return buffers_; }

void Model::init_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& v : t.value()) v = u(rng);
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

ModelState Model::state() const {
  ModelState s;
  for (const auto& p : params_) s.params.emplace_back(p.tensor.value().begin(), p.tensor.value().end());
  for (const auto& b : buffers_) s.buffers.push_back(*b.values);
  return s;
}

void Model::load_state(const ModelState& s) {
  if (s.params.size() != params_.size() || s.buffers.size() != buffers_.size()) {
    throw ShapeError("model state does not match the model's parameter list");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto dst = params_[i].tensor.value();
    if (s.params[i].size() != dst.size()) throw ShapeError("model state size mismatch for " + params_[i].name);
    std::copy(s.params[i].begin(), s.params[i].end(), dst.begin());
  }
  for (std::size_t i = 0; i < buffers_.size(); ++i) {
    if (s.buffers[i].size() != buffers_[i].values->size()) {
      throw ShapeError("model state size mismatch for " + buffers_[i].name);
    }
    *buffers_[i].values = s.buffers[i];
  }
}

void Model::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

// ---------------------------------------------------------------------------
// CNN

Cnn::Cnn(CnnConfig config, std::uint64_t seed) : Model(seed), config_(std::move(config)) {
  const CnnConfig& c = config_;
  if (c.filters.empty()) throw Error("cnn: at least one conv block is required");
  if (c.kernel % 2 == 0) throw Error("cnn: same padding needs an odd kernel");
  if (c.classes < 2) throw Error("cnn: at least two classes are required");
  Rng rng(seed);
  std::size_t in = c.in_channels;
  std::size_t t = c.input_length;
  for (std::size_t i = 0; i < c.filters.size(); ++i) {
    const std::string p = "block" + std::to_string(i + 1) + ".";
    Block b;
    b.weight = add_param(p + "conv.weight", {c.filters[i], in, c.kernel});
    b.bias = add_param(p + "conv.bias", {c.filters[i]});
    init_uniform(b.weight, in * c.kernel, rng);
    init_uniform(b.bias, in * c.kernel, rng);
    b.gamma = add_param(p + "bn.gamma", {c.filters[i]});
    b.beta = add_param(p + "bn.beta", {c.filters[i]});
    std::fill(b.gamma.value().begin(), b.gamma.value().end(), 1.0);
    b.bn = std::make_unique<BatchNormState>(c.filters[i]);
    add_buffer(p + "bn.running_mean", &b.bn->running_mean);
    add_buffer(p + "bn.running_var", &b.bn->running_var);
    if (t < c.pool_kernel) throw ShapeError("cnn: input_length too short for the pooling stages");
    t = (t - c.pool_kernel) / c.pool_stride + 1;
    in = c.filters[i];
    blocks_.push_back(std::move(b));
  }
  flat_ = in * t;
  fc1_w_ = add_param("fc1.weight", {c.hidden, flat_});
  fc1_b_ = add_param("fc1.bias", {c.hidden});
  init_uniform(fc1_w_, flat_, rng);
  init_uniform(fc1_b_, flat_, rng);
  fc2_w_ = add_param("fc2.weight", {c.classes, c.hidden});
  fc2_b_ = add_param("fc2.bias", {c.classes});
  init_uniform(fc2_w_, c.hidden, rng);
  init_uniform(fc2_b_, c.hidden, rng);
}

Tensor Cnn::forward(const Tensor& x, const ForwardContext& ctx) {
  const CnnConfig& c = config_;
  check_input(x, c.in_channels, "cnn");
  if (x.dim(2) != c.input_length) {
    throw ShapeError("cnn: input has " + std::to_string(x.dim(2)) + " samples, model expects " +
                     std::to_string(c.input_length));
  }
  Tensor h = x;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    Block& b = blocks_[i];
    const std::string p = "block" + std::to_string(i + 1) + ".";
    h = conv1d(h, b.weight, b.bias, {.stride = 1, .padding = c.kernel / 2, .dilation = 1});
    trace(ctx, p + "conv", h);
    h = batch_norm(h, b.gamma, b.beta, *b.bn, ctx.mode);
    h = leaky_relu(h, c.leaky_slope);
    h = maxpool1d(h, c.pool_kernel, c.pool_stride);
    trace(ctx, p + "pool", h);
    h = dropout(h, c.dropout, ctx.mode, ctx.rng);
  }
  h = flatten(h);
  trace(ctx, "flatten", h);
  h = leaky_relu(dense(h, fc1_w_, fc1_b_), c.leaky_slope);
  trace(ctx, "fc1", h);
  h = dense(h, fc2_w_, fc2_b_);
  trace(ctx, "logits", h);
  return h;
}

// ---------------------------------------------------------------------------
// TCN

Tcn::Tcn(TcnConfig config, std::uint64_t seed) : Model(seed), config_(std::move(config)) {
  const TcnConfig& c = config_;
  if (c.channels.empty()) throw Error("tcn: at least one temporal block is required");
  if (c.kernel < 2) throw Error("tcn: kernel must be >= 2");
  if (c.classes < 2) throw Error("tcn: at least two classes are required");
  Rng rng(seed);
  auto make_wn = [&](const std::string& name, std::size_t out, std::size_t in) {
    WnConv w;
    w.v = add_param(name + ".v", {out, in, c.kernel});
    w.g = add_param(name + ".g", {out});
    w.bias = add_param(name + ".bias", {out});
    init_uniform(w.v, in * c.kernel, rng);
    init_uniform(w.bias, in * c.kernel, rng);
    // g = ||v|| so the initial effective weight equals v
    const std::size_t per = in * c.kernel;
    for (std::size_t o = 0; o < out; ++o) {
      double ss = 0.0;
      for (std::size_t k = 0; k < per; ++k) ss += w.v.value()[o * per + k] * w.v.value()[o * per + k];
      w.g.value()[o] = std::sqrt(ss);
    }
    return w;
  };
  std::size_t in = c.in_channels;
  for (std::size_t i = 0; i < c.channels.size(); ++i) {
    const std::string p = "block" + std::to_string(i) + ".";
    Block b;
    b.dilation = std::size_t{1} << i;
    b.conv1 = make_wn(p + "conv1", c.channels[i], in);
    b.conv2 = make_wn(p + "conv2", c.channels[i], c.channels[i]);
    if (in != c.channels[i]) {
      b.down_w = add_param(p + "downsample.weight", {c.channels[i], in, 1});
      b.down_b = add_param(p + "downsample.bias", {c.channels[i]});
      init_uniform(b.down_w, in, rng);
      init_uniform(b.down_b, in, rng);
    }
    in = c.channels[i];
    blocks_.push_back(std::move(b));
  }
  fc_w_ = add_param("fc.weight", {c.classes, in});
  fc_b_ = add_param("fc.bias", {c.classes});
  init_uniform(fc_w_, in, rng);
  init_uniform(fc_b_, in, rng);
}

Tensor Tcn::forward(const Tensor& x, const ForwardContext& ctx) {
  const TcnConfig& c = config_;
  check_input(x, c.in_channels, "tcn");
  if (x.dim(2) < c.pool_kernel) throw ShapeError("tcn: input shorter than the pooling window");
  Tensor h = x;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    Block& b = blocks_[i];
    const std::string p = "block" + std::to_string(i) + ".";
    // Pad (K-1)*d on both sides, then chomp the right end: causal output.
    const std::size_t pad = (c.kernel - 1) * b.dilation;
    const Conv1dParams cp{.stride = 1, .padding = pad, .dilation = b.dilation};
    Tensor y = conv1d(h, weight_norm(b.conv1.v, b.conv1.g), b.conv1.bias, cp);
    trace(ctx, p + "conv1.prechomp", y);
    y = dropout(relu(chomp(y, pad)), c.dropout, ctx.mode, ctx.rng);
    y = conv1d(y, weight_norm(b.conv2.v, b.conv2.g), b.conv2.bias, cp);
    trace(ctx, p + "conv2.prechomp", y);
    y = dropout(relu(chomp(y, pad)), c.dropout, ctx.mode, ctx.rng);
    const Tensor res = b.down_w.defined() ? conv1d(h, b.down_w, b.down_b, {}) : h;
    h = relu(add(y, res));
    trace(ctx, p + "out", h);
  }
  h = maxpool1d(h, c.pool_kernel, c.pool_stride);
  trace(ctx, "pool", h);
  h = global_avg_pool(h);
  trace(ctx, "gap", h);
  h = dense(h, fc_w_, fc_b_);
  trace(ctx, "logits", h);
  return h;
}

// ---------------------------------------------------------------------------
// Factory

std::string_view to_string(Arch a) noexcept { return a == Arch::kCnn ? "cnn" : "tcn"; }

Arch parse_arch(std::string_view s) {
  if (s == "cnn") return Arch::kCnn;
  if (s == "tcn") return Arch::kTcn;
  throw FormatError("unknown architecture '" + std::string(s) + "' (expected cnn or tcn)");
}

nlohmann::json to_json(const ModelSpec& spec) {
  return {{"arch", to_string(spec.arch)}, {"cnn", to_json(spec.cnn)}, {"tcn", to_json(spec.tcn)}};
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  if (j.contains("arch")) s.arch = parse_arch(j["arch"].get<std::string>());
  if (j.contains("cnn")) s.cnn = cnn_config_from_json(j["cnn"]);
  if (j.contains("tcn")) s.tcn = tcn_config_from_json(j["tcn"]);
  return s;
}

std::unique_ptr<Model> make_model(const ModelSpec& spec, std::size_t in_channels, std::size_t input_length,
                                  std::uint64_t seed) {
  if (spec.arch == Arch::kCnn) {
    CnnConfig c = spec.cnn;
    c.in_channels = in_channels;
    c.input_length = input_length;
    return std::make_unique<Cnn>(std::move(c), seed);
  }
  TcnConfig c = spec.tcn;
  c.in_channels = in_channels;
  c.input_length = input_length;
  return std::make_unique<Tcn>(std::move(c), seed);
}

}  // namespace wemg::nn
