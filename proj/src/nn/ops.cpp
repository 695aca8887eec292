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


#include "wemg/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wemg/error.hpp"
#include "wemg/kernels.hpp"

namespace wemg::nn {
namespace {

using detail::grad_buffer;
using detail::make_result;

void require_rank(const Tensor& x, std::size_t rank, const char* op, const char* what) {
  if (!x.defined()) throw ShapeError(std::string(op) + ": " + what + " is undefined");
  if (x.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got " +
                     shape_string(x.shape()));
  }
}

void require_dim(std::size_t got, std::size_t want, const char* op, const std::string& what) {
  if (got != want) {
    throw ShapeError(std::string(op) + ": " + what + " is " + std::to_string(got) + ", expected " +
                     std::to_string(want));
  }
}

std::span<double> slice(std::vector<double>& v, std::size_t offset, std::size_t n) { return {v.data() + offset, n}; }
std::span<const double> slice(const std::vector<double>& v, std::size_t offset, std::size_t n) {
  return {v.data() + offset, n};
}

// Valid output range [lo, hi) for tap k at stride 1: t + k*d - pad in [0, T).
struct TapRange {
  std::size_t lo;
  std::size_t hi;
};

TapRange tap_range(std::size_t t_in, std::size_t t_out, std::size_t shift_plus, std::size_t pad) {
  // input index = t + shift_plus - pad
  const std::size_t lo = pad > shift_plus ? pad - shift_plus : 0;
  const std::size_t end = t_in + pad > shift_plus ? t_in + pad - shift_plus : 0;
  return {std::min(lo, t_out), std::min(end, t_out)};
}

}  // namespace

std::size_t conv1d_output_length(std::size_t t, std::size_t kernel, const Conv1dParams& p) {
  if (p.stride < 1 || p.dilation < 1 || kernel < 1) throw ShapeError("conv1d: stride, dilation and K must be >= 1");
  const std::size_t span = p.dilation * (kernel - 1) + 1;
  if (t + 2 * p.padding < span) {
    throw ShapeError("conv1d: time dimension " + std::to_string(t) + " with padding " + std::to_string(p.padding) +
                     " is shorter than the dilated kernel span " + std::to_string(span));
  }
  return (t + 2 * p.padding - span) / p.stride + 1;
}

namespace {

struct ConvGeometry {
  std::size_t cin, t, k, t_out, stride, dilation, pad;
  std::size_t rows() const { return cin * k; }
  // Input time index feeding output t through tap kk, or -1 in the padding.
  std::ptrdiff_t source(std::size_t t_o, std::size_t kk) const {
    const auto i = static_cast<std::ptrdiff_t>(t_o * stride + kk * dilation) - static_cast<std::ptrdiff_t>(pad);
    return i >= 0 && static_cast<std::size_t>(i) < t ? i : -1;
  }
};

// cols[(ci*K + kk) * T' + t'] = x[ci, t'*s + kk*d - pad], zero in the padding.
void im2col(const double* x, const ConvGeometry& g, double* cols) {
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    for (std::size_t kk = 0; kk < g.k; ++kk) {
      double* row = cols + (ci * g.k + kk) * g.t_out;
      const double* xr = x + ci * g.t;
      if (g.stride == 1) {
        const TapRange r = tap_range(g.t, g.t_out, kk * g.dilation, g.pad);
        std::fill(row, row + r.lo, 0.0);
        if (r.hi > r.lo) std::copy_n(xr + r.lo + kk * g.dilation - g.pad, r.hi - r.lo, row + r.lo);
        std::fill(row + std::max(r.lo, r.hi), row + g.t_out, 0.0);
      } else {
        for (std::size_t t = 0; t < g.t_out; ++t) {
          const std::ptrdiff_t i = g.source(t, kk);
          row[t] = i >= 0 ? xr[i] : 0.0;
        }
      }
    }
  }
}

// Adjoint of im2col: dx[ci, src] += cols[(ci*K + kk) * T' + t'].
void col2im_add(const double* cols, const ConvGeometry& g, double* dx) {
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    for (std::size_t kk = 0; kk < g.k; ++kk) {
      const double* row = cols + (ci * g.k + kk) * g.t_out;
      double* xr = dx + ci * g.t;
      if (g.stride == 1) {
        const TapRange r = tap_range(g.t, g.t_out, kk * g.dilation, g.pad);
        if (r.hi > r.lo) kernels::axpy(1.0, {row + r.lo, r.hi - r.lo}, {xr + r.lo + kk * g.dilation - g.pad, r.hi - r.lo});
      } else {
        for (std::size_t t = 0; t < g.t_out; ++t) {
          const std::ptrdiff_t i = g.source(t, kk);
          if (i >= 0) xr[i] += row[t];
        }
      }
    }
  }
}

// dst (cols x rows) = transpose of src (rows x cols).
void transpose(const double* src, std::size_t rows, std::size_t cols, double* dst) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
  }
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv1dParams& params) {
  require_rank(x, 3, "conv1d", "input");
  require_rank(weight, 3, "conv1d", "weight");
  const std::size_t B = x.dim(0), Cin = x.dim(1), T = x.dim(2);
  const std::size_t Cout = weight.dim(0), K = weight.dim(2);
  require_dim(weight.dim(1), Cin, "conv1d", "weight input-channel dimension");
  if (bias.defined()) {
    require_rank(bias, 1, "conv1d", "bias");
    require_dim(bias.dim(0), Cout, "conv1d", "bias length");
  }
  const std::size_t To = conv1d_output_length(T, K, params);
  const ConvGeometry geo{Cin, T, K, To, params.stride, params.dilation, params.padding};
  const std::size_t R = geo.rows();

  // Per sample: out_b (Cout x T') = W (Cout x R) * cols_b (R x T').
  const auto& xv = x.node()->value;
  const auto& wv = weight.node()->value;
  std::vector<double> out(B * Cout * To);
  std::vector<double> cols(R * To);
  for (std::size_t b = 0; b < B; ++b) {
    double* ob = out.data() + b * Cout * To;
    for (std::size_t co = 0; co < Cout; ++co) {
      std::fill(ob + co * To, ob + (co + 1) * To, bias.defined() ? bias.value()[co] : 0.0);
    }
    im2col(xv.data() + b * Cin * T, geo, cols.data());
    kernels::gemm(Cout, To, R, wv.data(), R, cols.data(), To, ob, To);
  }

  Tensor xc = x, wc = weight, bc = bias;
  return make_result({B, Cout, To}, std::move(out), "conv1d", {x, weight, bias},
                     [xc, wc, bc, B, Cout, geo](Node& node) mutable {
                       const std::size_t To = geo.t_out, R = geo.rows();
                       const auto& g = node.grad;
                       if (bc.defined() && bc.requires_grad()) {
                         auto& gb = grad_buffer(*bc.node());
                         for (std::size_t b = 0; b < B; ++b) {
                           for (std::size_t co = 0; co < Cout; ++co) {
                             gb[co] += kernels::sum(slice(g, (b * Cout + co) * To, To));
                           }
                         }
                       }
                       const bool need_x = xc.requires_grad();
                       const bool need_w = wc.requires_grad();
                       if (!need_x && !need_w) return;
                       const auto& xv = xc.node()->value;
                       std::vector<double> cols(R * To), cols_t(R * To), w_t;
                       if (need_x) {
                         w_t.resize(Cout * R);
                         transpose(wc.node()->value.data(), Cout, R, w_t.data());
                       }
                       for (std::size_t b = 0; b < B; ++b) {
                         const double* gb = g.data() + b * Cout * To;
                         if (need_w) {
                           // dW (Cout x R) += dOut_b (Cout x T') * cols_b^T (T' x R)
                           im2col(xv.data() + b * geo.cin * geo.t, geo, cols.data());
                           transpose(cols.data(), R, To, cols_t.data());
                           kernels::gemm(Cout, R, To, gb, To, cols_t.data(), R, grad_buffer(*wc.node()).data(), R);
                         }
                         if (need_x) {
                           // dcols (R x T') = W^T (R x Cout) * dOut_b (Cout x T')
                           std::fill(cols.begin(), cols.end(), 0.0);
                           kernels::gemm(R, To, Cout, w_t.data(), Cout, gb, To, cols.data(), To);
                           col2im_add(cols.data(), geo, grad_buffer(*xc.node()).data() + b * geo.cin * geo.t);
                         }
                       }
                     });
}

Tensor chomp(const Tensor& x, std::size_t p) {
  require_rank(x, 3, "chomp", "input");
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2);
  if (p >= T) throw ShapeError("chomp: cannot drop " + std::to_string(p) + " of " + std::to_string(T) + " steps");
  const std::size_t To = T - p;
  std::vector<double> out(B * C * To);
  const auto& xv = x.node()->value;
  for (std::size_t r = 0; r < B * C; ++r) std::copy_n(xv.begin() + r * T, To, out.begin() + r * To);
  Tensor xc = x;
  return make_result({B, C, To}, std::move(out), "chomp", {x}, [xc, B, C, T, To](Node& node) mutable {
    auto& gx = grad_buffer(*xc.node());
    for (std::size_t r = 0; r < B * C; ++r) {
      kernels::axpy(1.0, slice(node.grad, r * To, To), slice(gx, r * T, To));
    }
  });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state, Mode mode) {
  if (!x.defined() || (x.rank() != 2 && x.rank() != 3)) throw ShapeError("batch_norm: input must be B x C [x T]");
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.rank() == 3 ? x.dim(2) : 1;
  require_rank(gamma, 1, "batch_norm", "gamma");
  require_rank(beta, 1, "batch_norm", "beta");
  require_dim(gamma.dim(0), C, "batch_norm", "gamma length");
  require_dim(beta.dim(0), C, "batch_norm", "beta length");
  require_dim(state.running_mean.size(), C, "batch_norm", "running statistics length");
  if (mode == Mode::kTrain && B < 2) throw ShapeError("batch_norm: train mode needs a batch of at least 2");

  const auto& xv = x.node()->value;
  const auto& gv = gamma.node()->value;
  const auto& bv = beta.node()->value;
  const double n = static_cast<double>(B * T);
  std::vector<double> mean(C), inv_std(C);
  if (mode == Mode::kTrain) {
    for (std::size_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::size_t b = 0; b < B; ++b) s += kernels::sum(slice(xv, (b * C + c) * T, T));
      mean[c] = s / n;
      double ss = 0.0;
      for (std::size_t b = 0; b < B; ++b) ss += kernels::sum_sq_dev(slice(xv, (b * C + c) * T, T), mean[c]);
      const double var = ss / n;
      inv_std[c] = 1.0 / std::sqrt(var + state.eps);
      state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mean[c];
      state.running_var[c] =
          (1.0 - state.momentum) * state.running_var[c] + state.momentum * ss / std::max(n - 1.0, 1.0);
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = state.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + state.eps);
    }
  }

  std::vector<double> xhat(xv.size());
  std::vector<double> out(xv.size());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t off = (b * C + c) * T;
      kernels::center_scale(slice(xv, off, T), slice(xhat, off, T), mean[c], inv_std[c]);
      for (std::size_t t = 0; t < T; ++t) out[off + t] = gv[c] * xhat[off + t] + bv[c];
    }
  }

  Tensor xc = x, gc = gamma, bc = beta;
  const bool train = mode == Mode::kTrain;
  return make_result(x.shape(), std::move(out), "batch_norm", {x, gamma, beta},
                     [xc, gc, bc, B, C, T, n, train, xhat = std::move(xhat), inv_std](Node& node) mutable {
                       const auto& g = node.grad;
                       const auto& gv = gc.node()->value;
                       std::vector<double> sum_g(C, 0.0), sum_gx(C, 0.0);
                       for (std::size_t b = 0; b < B; ++b) {
                         for (std::size_t c = 0; c < C; ++c) {
                           const std::size_t off = (b * C + c) * T;
                           sum_g[c] += kernels::sum(slice(g, off, T));
                           sum_gx[c] += kernels::dot(slice(g, off, T), slice(xhat, off, T));
                         }
                       }
                       if (gc.requires_grad()) {
                         auto& gg = grad_buffer(*gc.node());
                         for (std::size_t c = 0; c < C; ++c) gg[c] += sum_gx[c];
                       }
                       if (bc.requires_grad()) {
                         auto& gb = grad_buffer(*bc.node());
                         for (std::size_t c = 0; c < C; ++c) gb[c] += sum_g[c];
                       }
                       if (!xc.requires_grad()) return;
                       auto& gx = grad_buffer(*xc.node());
                       for (std::size_t b = 0; b < B; ++b) {
                         for (std::size_t c = 0; c < C; ++c) {
                           const std::size_t off = (b * C + c) * T;
                           const double k = gv[c] * inv_std[c];
                           if (train) {
                             // dx = k * (g - mean(g) - xhat * mean(g * xhat))
                             const double mg = sum_g[c] / n, mgx = sum_gx[c] / n;
                             for (std::size_t t = 0; t < T; ++t) {
                               gx[off + t] += k * (g[off + t] - mg - xhat[off + t] * mgx);
                             }
                           } else {
                             kernels::axpy(k, slice(g, off, T), slice(gx, off, T));
                           }
                         }
                       }
                     });
}

Tensor weight_norm(const Tensor& v, const Tensor& g) {
  if (!v.defined() || v.rank() < 1) throw ShapeError("weight_norm: direction must have rank >= 1");
  require_rank(g, 1, "weight_norm", "magnitude");
  const std::size_t O = v.dim(0);
  require_dim(g.dim(0), O, "weight_norm", "magnitude length");
  const std::size_t per = v.size() / O;
  const auto& vv = v.node()->value;
  const auto& gv = g.node()->value;
  std::vector<double> norms(O), out(vv.size());
  for (std::size_t o = 0; o < O; ++o) {
    const auto row = slice(vv, o * per, per);
    norms[o] = std::sqrt(kernels::dot(row, row));
    if (!(norms[o] > 0.0)) throw NumericError("weight_norm: zero direction vector for output " + std::to_string(o));
    kernels::center_scale(row, slice(out, o * per, per), 0.0, gv[o] / norms[o]);
  }
  Tensor vc = v, gc = g;
  return make_result(v.shape(), std::move(out), "weight_norm", {v, g}, [vc, gc, O, per, norms](Node& node) mutable {
    const auto& vv = vc.node()->value;
    const auto& gv = gc.node()->value;
    for (std::size_t o = 0; o < O; ++o) {
      const auto dw = slice(node.grad, o * per, per);
      const auto row = slice(vv, o * per, per);
      const double u_dot_dw = kernels::dot(row, dw) / norms[o];
      if (gc.requires_grad()) grad_buffer(*gc.node())[o] += u_dot_dw;
      if (vc.requires_grad()) {
        // dv = g/n * (dw - u (u . dw)),  u = v / n
        auto gvv = slice(grad_buffer(*vc.node()), o * per, per);
        const double a = gv[o] / norms[o];
        kernels::axpy(a, dw, gvv);
        kernels::axpy(-a * u_dot_dw / norms[o], row, gvv);
      }
    }
  });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  if (!x.defined()) throw ShapeError("leaky_relu: input is undefined");
  const auto& xv = x.node()->value;
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::max(xv[i], 0.0) + slope * std::min(xv[i], 0.0);
  Tensor xc = x;
  return make_result(x.shape(), std::move(out), "leaky_relu", {x}, [xc, slope](Node& node) mutable {
    const auto& xv = xc.node()->value;
    auto& gx = grad_buffer(*xc.node());
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double pos = static_cast<double>(xv[i] > 0.0);
      gx[i] += node.grad[i] * (slope + (1.0 - slope) * pos);
    }
  });
}

Tensor relu(const Tensor& x) {
  if (!x.defined()) throw ShapeError("relu: input is undefined");
  const auto& xv = x.node()->value;
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::max(xv[i], 0.0);
  Tensor xc = x;
  return make_result(x.shape(), std::move(out), "relu", {x}, [xc](Node& node) mutable {
    const auto& xv = xc.node()->value;
    auto& gx = grad_buffer(*xc.node());
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += node.grad[i] * static_cast<double>(xv[i] > 0.0);
  });
}

Tensor maxpool1d(const Tensor& x, std::size_t kernel, std::size_t stride) {
  require_rank(x, 3, "maxpool1d", "input");
  if (kernel < 1 || stride < 1) throw ShapeError("maxpool1d: kernel and stride must be >= 1");
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2);
  if (T < kernel) {
    throw ShapeError("maxpool1d: time dimension " + std::to_string(T) + " is shorter than the pool window " +
                     std::to_string(kernel));
  }
  const std::size_t To = (T - kernel) / stride + 1;
  const auto& xv = x.node()->value;
  std::vector<double> out(B * C * To);
  std::vector<std::size_t> arg(out.size());
  for (std::size_t r = 0; r < B * C; ++r) {
    for (std::size_t t = 0; t < To; ++t) {
      std::size_t best = r * T + t * stride;
      for (std::size_t k = 1; k < kernel; ++k) {
        const std::size_t i = r * T + t * stride + k;
        if (xv[i] > xv[best]) best = i;
      }
      out[r * To + t] = xv[best];
      arg[r * To + t] = best;
    }
  }
  Tensor xc = x;
  return make_result({B, C, To}, std::move(out), "maxpool1d", {x}, [xc, arg = std::move(arg)](Node& node) mutable {
    auto& gx = grad_buffer(*xc.node());
    for (std::size_t i = 0; i < arg.size(); ++i) gx[arg[i]] += node.grad[i];
  });
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 3, "global_avg_pool", "input");
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2);
  const auto& xv = x.node()->value;
  std::vector<double> out(B * C);
  for (std::size_t r = 0; r < B * C; ++r) out[r] = kernels::sum(slice(xv, r * T, T)) / static_cast<double>(T);
  Tensor xc = x;
  return make_result({B, C}, std::move(out), "global_avg_pool", {x}, [xc, B, C, T](Node& node) mutable {
    auto& gx = grad_buffer(*xc.node());
    const double inv = 1.0 / static_cast<double>(T);
    for (std::size_t r = 0; r < B * C; ++r) {
      for (std::size_t t = 0; t < T; ++t) gx[r * T + t] += node.grad[r] * inv;
    }
  });
}

Tensor flatten(const Tensor& x) {
  if (!x.defined() || x.rank() < 2) throw ShapeError("flatten: input must have a batch axis and features");
  const std::size_t B = x.dim(0);
  Tensor xc = x;
  return make_result({B, x.size() / B}, x.node()->value, "flatten", {x}, [xc](Node& node) mutable {
    kernels::axpy(1.0, node.grad, grad_buffer(*xc.node()));
  });
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "dense", "input");
  require_rank(weight, 2, "dense", "weight");
  const std::size_t B = x.dim(0), N = x.dim(1), M = weight.dim(0);
  require_dim(weight.dim(1), N, "dense", "weight input dimension");
  if (bias.defined()) {
    require_rank(bias, 1, "dense", "bias");
    require_dim(bias.dim(0), M, "dense", "bias length");
  }
  // out (B x M) = x (B x N) * W^T (N x M) + bias
  std::vector<double> w_t(N * M);
  transpose(weight.node()->value.data(), M, N, w_t.data());
  std::vector<double> out(B * M, 0.0);
  if (bias.defined()) {
    for (std::size_t b = 0; b < B; ++b) std::copy_n(bias.value().begin(), M, out.begin() + b * M);
  }
  kernels::gemm(B, M, N, x.node()->value.data(), N, w_t.data(), M, out.data(), M);

  Tensor xc = x, wc = weight, bc = bias;
  return make_result({B, M}, std::move(out), "dense", {x, weight, bias}, [xc, wc, bc, B, N, M](Node& node) mutable {
    const auto& g = node.grad;
    if (bc.defined() && bc.requires_grad()) {
      auto& gb = grad_buffer(*bc.node());
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t m = 0; m < M; ++m) gb[m] += g[b * M + m];
      }
    }
    if (wc.requires_grad()) {
      // dW (M x N) += dY^T (M x B) * x (B x N)
      std::vector<double> g_t(M * B);
      transpose(g.data(), B, M, g_t.data());
      kernels::gemm(M, N, B, g_t.data(), B, xc.node()->value.data(), N, grad_buffer(*wc.node()).data(), N);
    }
    if (xc.requires_grad()) {
      // dx (B x N) += dY (B x M) * W (M x N)
      kernels::gemm(B, N, M, g.data(), M, wc.node()->value.data(), N, grad_buffer(*xc.node()).data(), N);
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.defined() || !b.defined() || a.shape() != b.shape()) {
    throw ShapeError("add: shapes " + (a.defined() ? shape_string(a.shape()) : std::string("?")) + " and " +
                     (b.defined() ? shape_string(b.shape()) : std::string("?")) + " differ");
  }
  std::vector<double> out = a.node()->value;
  kernels::axpy(1.0, b.value(), out);
  Tensor ac = a, bc = b;
  return make_result(a.shape(), std::move(out), "add", {a, b}, [ac, bc](Node& node) mutable {
    if (ac.requires_grad()) kernels::axpy(1.0, node.grad, grad_buffer(*ac.node()));
    if (bc.requires_grad()) kernels::axpy(1.0, node.grad, grad_buffer(*bc.node()));
  });
}

Tensor dropout(const Tensor& x, double p, Mode mode, Rng* rng) {
  if (!(p >= 0.0 && p < 1.0)) throw Error("dropout: rate must be in [0, 1)");
  if (mode == Mode::kEval || p == 0.0) return x;
  if (rng == nullptr) throw Error("dropout: train mode needs a random generator");
  const auto& xv = x.node()->value;
  const double scale = 1.0 / (1.0 - p);
  const double keep = 1.0 - p;
  std::vector<double> mask(xv.size());
  for (double& m : mask) m = uniform_unit(*rng) < keep ? scale : 0.0;
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] * mask[i];
  Tensor xc = x;
  return make_result(x.shape(), std::move(out), "dropout", {x}, [xc, mask = std::move(mask)](Node& node) mutable {
    kernels::mul_acc(node.grad, mask, grad_buffer(*xc.node()));
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "cross_entropy", "logits");
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  require_dim(labels.size(), B, "cross_entropy", "label count");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= K) {
      throw Error("cross_entropy: label " + std::to_string(y) + " outside 0.." + std::to_string(K - 1));
    }
  }
  std::vector<double> probs = softmax(logits.value(), K);
  double loss = 0.0;
  const auto& lv = logits.node()->value;
  for (std::size_t b = 0; b < B; ++b) {
    const auto row = slice(lv, b * K, K);
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (double z : row) s += std::exp(z - mx);
    loss += mx + std::log(s) - row[static_cast<std::size_t>(labels[b])];
  }
  loss /= static_cast<double>(B);
  Tensor lc = logits;
  std::vector<int> ys(labels.begin(), labels.end());
  return make_result({1}, {loss}, "cross_entropy", {logits},
                     [lc, B, K, probs = std::move(probs), ys = std::move(ys)](Node& node) mutable {
                       auto& gl = grad_buffer(*lc.node());
                       const double scale = node.grad[0] / static_cast<double>(B);
                       for (std::size_t b = 0; b < B; ++b) {
                         for (std::size_t k = 0; k < K; ++k) {
                           const double onehot = static_cast<int>(k) == ys[b] ? 1.0 : 0.0;
                           gl[b * K + k] += scale * (probs[b * K + k] - onehot);
                         }
                       }
                     });
}

Tensor pick_sum(const Tensor& logits, std::span<const int> targets) {
  require_rank(logits, 2, "pick_sum", "logits");
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  require_dim(targets.size(), B, "pick_sum", "target count");
  double s = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    if (targets[b] < 0 || static_cast<std::size_t>(targets[b]) >= K) throw Error("pick_sum: target out of range");
    s += logits.value()[b * K + static_cast<std::size_t>(targets[b])];
  }
  Tensor lc = logits;
  std::vector<int> ts(targets.begin(), targets.end());
  return make_result({1}, {s}, "pick_sum", {logits}, [lc, K, ts = std::move(ts)](Node& node) mutable {
    auto& gl = grad_buffer(*lc.node());
    for (std::size_t b = 0; b < ts.size(); ++b) gl[b * K + static_cast<std::size_t>(ts[b])] += node.grad[0];
  });
}

Tensor weighted_sum(const Tensor& x, std::span<const double> weights) {
  if (!x.defined()) throw ShapeError("weighted_sum: input is undefined");
  require_dim(weights.size(), x.size(), "weighted_sum", "weight count");
  const double s = kernels::dot(x.value(), weights);
  Tensor xc = x;
  std::vector<double> w(weights.begin(), weights.end());
  return make_result({1}, {s}, "weighted_sum", {x}, [xc, w = std::move(w)](Node& node) mutable {
    kernels::axpy(node.grad[0], w, grad_buffer(*xc.node()));
  });
}

std::vector<double> softmax(std::span<const double> logits, std::size_t cols) {
  if (cols == 0 || logits.size() % cols != 0) throw ShapeError("softmax: buffer is not rows x cols");
  std::vector<double> out(logits.size());
  for (std::size_t r = 0; r < logits.size() / cols; ++r) {
    const auto row = logits.subspan(r * cols, cols);
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (std::size_t k = 0; k < cols; ++k) s += out[r * cols + k] = std::exp(row[k] - mx);
    for (std::size_t k = 0; k < cols; ++k) out[r * cols + k] /= s;
  }
  return out;
}

}  // namespace wemg::nn
