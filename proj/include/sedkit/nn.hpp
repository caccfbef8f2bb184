// Copyright 2026 The sedkit authors
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

#pragma once

#include <cassert>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sedkit/rng.hpp"
#include "sedkit/tensor.hpp"

namespace sedkit {

// ---- initialization ----

// Glorot-uniform samples in +-sqrt(6/(fan_in+fan_out)).
template <class T>
Tensor<T> glorot_uniform(std::vector<int> shape, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::vector<T> v(Tensor<T>::numel_of(shape));
  for (auto& x : v) x = static_cast<T>(rng.uniform(-limit, limit));
  return Tensor<T>::from_data(std::move(shape), std::move(v), true);
}

// ---- layers ----

template <class T>
struct Conv2d {
  Tensor<T> w;  // [Cout, Cin, K, K]
  Tensor<T> b;  // [Cout]
  int pad = 2;

  static Conv2d init(int cout, int cin, int k, int pad, Rng& rng) {
    Conv2d layer;
    layer.w = glorot_uniform<T>({cout, cin, k, k}, cin * k * k, cout * k * k, rng);
    layer.b = Tensor<T>::zeros({cout}, true);
    layer.pad = pad;
    return layer;
  }

  Tensor<T> forward(Tape<T>* tape, Tensor<T> x) const {
    return conv2d(tape, x, w, b, pad);
  }
};

// Per-channel batch normalization over [B, C, H, W]. Train mode
// normalizes with batch statistics over (B, H, W) and updates the running
// buffers; eval mode applies the stored running statistics.
template <class T>
struct BatchNorm2d {
  Tensor<T> scale;  // [C], trainable
  Tensor<T> shift;  // [C], trainable
  std::vector<T> running_mean;
  std::vector<T> running_var;
  T momentum = T(0.1);
  T eps = T(1e-5);

  static BatchNorm2d init(int channels) {
    BatchNorm2d bn;
    bn.scale = Tensor<T>::from_data({channels}, std::vector<T>(channels, T(1)), true);
    bn.shift = Tensor<T>::zeros({channels}, true);
    bn.running_mean.assign(channels, T(0));
    bn.running_var.assign(channels, T(1));
    return bn;
  }

  Tensor<T> forward(Tape<T>* tape, Tensor<T> x, bool train) {
    if (x.rank() != 4 || x.dim(1) != scale.dim(0))
      throw ShapeError(msg("batchnorm: input ", shape_str(x.shape()),
                           " vs ", scale.dim(0), " channels"));
    const int B = x.dim(0), C = x.dim(1);
    const int64_t plane = static_cast<int64_t>(x.dim(2)) * x.dim(3);
    const int64_t n = static_cast<int64_t>(B) * plane;

    auto mean = std::make_shared<std::vector<T>>(C, T(0));
    auto invstd = std::make_shared<std::vector<T>>(C, T(0));
    if (train) {
      for (int c = 0; c < C; ++c) {
        double sum = 0.0;
        for (int b = 0; b < B; ++b) {
          const T* p = x.value().data() + (static_cast<int64_t>(b) * C + c) * plane;
          for (int64_t i = 0; i < plane; ++i) sum += p[i];
        }
        const double mu = sum / static_cast<double>(n);
        double sq = 0.0;
        for (int b = 0; b < B; ++b) {
          const T* p = x.value().data() + (static_cast<int64_t>(b) * C + c) * plane;
          for (int64_t i = 0; i < plane; ++i) {
            const double d = p[i] - mu;
            sq += d * d;
          }
        }
        const double var = sq / static_cast<double>(n);
        (*mean)[c] = static_cast<T>(mu);
        (*invstd)[c] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
        running_mean[c] = (T(1) - momentum) * running_mean[c] + momentum * static_cast<T>(mu);
        running_var[c] = (T(1) - momentum) * running_var[c] + momentum * static_cast<T>(var);
      }
    } else {
      for (int c = 0; c < C; ++c) {
        (*mean)[c] = running_mean[c];
        (*invstd)[c] = T(1) / std::sqrt(running_var[c] + eps);
      }
    }

    std::vector<T> v(x.numel());
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        const T* p = x.value().data() + (static_cast<int64_t>(b) * C + c) * plane;
        T* o = v.data() + (static_cast<int64_t>(b) * C + c) * plane;
        const T m = (*mean)[c], is = (*invstd)[c];
        const T g = scale.value()[c], s = shift.value()[c];
        for (int64_t i = 0; i < plane; ++i) o[i] = (p[i] - m) * is * g + s;
      }
    const bool rg = x.requires_grad() || scale.requires_grad() || shift.requires_grad();
    Tensor<T> out = detail::make_output(tape, x.shape(), std::move(v), rg);
    if (detail::record_needed(tape, rg)) {
      Tensor<T> sc = scale, sh = shift;
      Tensor<T> xin = x;
      tape->record("batchnorm", [xin, sc, sh, out, mean, invstd, B, C, plane, n,
                                 train]() mutable {
        const auto& go = out.grad();
        for (int c = 0; c < C; ++c) {
          const T m = (*mean)[c], is = (*invstd)[c];
          const T g = sc.value()[c];
          double sum_go = 0.0, sum_go_xhat = 0.0;
          for (int b = 0; b < B; ++b) {
            const int64_t off = (static_cast<int64_t>(b) * C + c) * plane;
            const T* gop = go.data() + off;
            const T* xp = xin.value().data() + off;
            for (int64_t i = 0; i < plane; ++i) {
              sum_go += gop[i];
              sum_go_xhat += gop[i] * (xp[i] - m) * is;
            }
          }
          if (sc.requires_grad()) sc.grad_buffer()[c] += static_cast<T>(sum_go_xhat);
          if (sh.requires_grad()) sh.grad_buffer()[c] += static_cast<T>(sum_go);
          if (!xin.requires_grad()) continue;
          auto& gx = xin.grad_buffer();
          if (train) {
            // Batch statistics depend on x, so fold their gradients back in:
            // dx = (g*is/n) * (n*go - sum(go) - xhat*sum(go*xhat))
            const double inv_n = 1.0 / static_cast<double>(n);
            for (int b = 0; b < B; ++b) {
              const int64_t off = (static_cast<int64_t>(b) * C + c) * plane;
              const T* gop = go.data() + off;
              const T* xp = xin.value().data() + off;
              T* gxp = gx.data() + off;
              for (int64_t i = 0; i < plane; ++i) {
                const double xhat = (xp[i] - m) * is;
                gxp[i] += static_cast<T>(
                    static_cast<double>(g) * is *
                    (gop[i] - inv_n * sum_go - xhat * inv_n * sum_go_xhat));
              }
            }
          } else {
            for (int b = 0; b < B; ++b) {
              const int64_t off = (static_cast<int64_t>(b) * C + c) * plane;
              const T* gop = go.data() + off;
              T* gxp = gx.data() + off;
              for (int64_t i = 0; i < plane; ++i) gxp[i] += gop[i] * g * is;
            }
          }
        }
      });
    }
    detail::check_finite(out, "batchnorm");
    return out;
  }
};

// Inverted dropout: train mode scales kept units by 1/(1-rate) so eval is
// the identity. Mask draws come from the caller's dropout stream, consumed
// in flat element order.
template <class T>
struct Dropout {
  double rate = 0.0;

  Tensor<T> forward(Tape<T>* tape, Tensor<T> x, bool train, Rng& rng) const {
    if (!train || rate <= 0.0) return x;
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    auto mask = std::make_shared<std::vector<T>>(x.numel());
    for (auto& mv : *mask) mv = rng.uniform() < rate ? T(0) : keep_scale;
    return apply_mask(tape, x, mask);
  }
};

// One CRNN block: dropout(input) -> conv -> batch norm -> relu -> max pool,
// with an extra output dropout on the final block.
template <class T>
struct CnnBlock {
  Dropout<T> dropout;
  Conv2d<T> conv;
  BatchNorm2d<T> bn;
  int pool_t = 1;
  int pool_f = 1;
  bool output_dropout = false;

  static CnnBlock init(int cin, int cout, int pool_t, int pool_f, double drop_rate,
                       bool output_dropout, Rng& rng) {
    CnnBlock blk;
    blk.dropout.rate = drop_rate;
    blk.conv = Conv2d<T>::init(cout, cin, 5, 2, rng);
    blk.bn = BatchNorm2d<T>::init(cout);
    blk.pool_t = pool_t;
    blk.pool_f = pool_f;
    blk.output_dropout = output_dropout;
    return blk;
  }

  Tensor<T> forward(Tape<T>* tape, Tensor<T> x, bool train, Rng& drop_rng) {
    auto h = dropout.forward(tape, x, train, drop_rng);
    h = conv.forward(tape, h);
    h = bn.forward(tape, h, train);
    h = relu(tape, h);
    h = maxpool2d(tape, h, pool_t, pool_f);
    if (output_dropout) h = dropout.forward(tape, h, train, drop_rng);
    return h;
  }
};

// GRU cell: z = sig(xWz + hUz + bz), r = sig(xWr + hUr + br),
// hc = tanh(xWh + (r.h)Uh + bh), h' = (1-z).h + z.hc. Outputs stay
// strictly inside (-1, 1).
template <class T>
struct GruCell {
  Tensor<T> wz, wr, wh;  // [Din, Fh]
  Tensor<T> uz, ur, uh;  // [Fh, Fh]
  Tensor<T> bz, br, bh;  // [Fh]

  static GruCell init(int din, int hidden, Rng& rng) {
    GruCell cell;
    cell.wz = glorot_uniform<T>({din, hidden}, din, hidden, rng);
    cell.wr = glorot_uniform<T>({din, hidden}, din, hidden, rng);
    cell.wh = glorot_uniform<T>({din, hidden}, din, hidden, rng);
    cell.uz = glorot_uniform<T>({hidden, hidden}, hidden, hidden, rng);
    cell.ur = glorot_uniform<T>({hidden, hidden}, hidden, hidden, rng);
    cell.uh = glorot_uniform<T>({hidden, hidden}, hidden, hidden, rng);
    cell.bz = Tensor<T>::zeros({hidden}, true);
    cell.br = Tensor<T>::zeros({hidden}, true);
    cell.bh = Tensor<T>::zeros({hidden}, true);
    return cell;
  }

  int input_size() const { return wz.dim(0); }
  int hidden_size() const { return wz.dim(1); }

  Tensor<T> step(Tape<T>* tape, Tensor<T> x, Tensor<T> h_prev) const {
    if (x.rank() != 2 || x.dim(1) != input_size())
      throw ShapeError(msg("gru: input ", shape_str(x.shape()), " vs Din=",
                           input_size()));
    if (h_prev.rank() != 2 || h_prev.dim(1) != hidden_size() ||
        h_prev.dim(0) != x.dim(0))
      throw ShapeError(msg("gru: hidden ", shape_str(h_prev.shape()),
                           " vs input ", shape_str(x.shape())));
    auto z = sigmoid(tape, add_rowvec(tape, add(tape, matmul(tape, x, wz),
                                                matmul(tape, h_prev, uz)), bz));
    auto r = sigmoid(tape, add_rowvec(tape, add(tape, matmul(tape, x, wr),
                                                matmul(tape, h_prev, ur)), br));
    auto hc = tanh_op(tape, add_rowvec(tape, add(tape, matmul(tape, x, wh),
                                                 matmul(tape, mul(tape, r, h_prev), uh)), bh));
    // h' = h + z.(hc - h)
    auto h = add(tape, h_prev, mul(tape, z, sub(tape, hc, h_prev)));
#ifndef NDEBUG
    for (T v : h.value()) assert(v > T(-1) && v < T(1));
#endif
    return h;
  }
};

template <class T>
struct Linear {
  Tensor<T> w;  // [in, out]
  Tensor<T> b;  // [out]

  static Linear init(int in, int out, Rng& rng) {
    Linear layer;
    layer.w = glorot_uniform<T>({in, out}, in, out, rng);
    layer.b = Tensor<T>::zeros({out}, true);
    return layer;
  }

  Tensor<T> forward(Tape<T>* tape, Tensor<T> x) const {
    return add_rowvec(tape, matmul(tape, x, w), b);
  }
};

// ---- optimizer ----

// Adam with bias correction. Moments are kept per parameter, in the order
// the parameter list was registered with init().
template <class T>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step_count = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  void init(const std::vector<Tensor<T>>& params) {
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.emplace_back(p.numel(), T(0));
      v.emplace_back(p.numel(), T(0));
    }
    step_count = 0;
  }

  void step(std::vector<Tensor<T>>& params) {
    if (params.size() != m.size())
      throw UsageError(msg("adam: ", params.size(), " params vs state for ", m.size()));
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      if (static_cast<int64_t>(m[i].size()) != p.numel())
        throw UsageError(msg("adam: param ", i, " length changed"));
      auto& grad = p.grad_buffer();
      auto& mi = m[i];
      auto& vi = v[i];
      auto& val = p.mutable_value();
      for (size_t j = 0; j < mi.size(); ++j) {
        const double g = grad[j];
        mi[j] = static_cast<T>(beta1 * mi[j] + (1.0 - beta1) * g);
        vi[j] = static_cast<T>(beta2 * vi[j] + (1.0 - beta2) * g * g);
        const double mhat = mi[j] / bc1;
        const double vhat = vi[j] / bc2;
        val[j] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + eps));
      }
    }
  }
};

// Per-layer l2 gradient clipping: if ||g||2 over the group exceeds
// max_norm, scale the whole group by max_norm/||g||2.
template <class T>
void clip_grad_l2(std::span<Tensor<T>> layer_params, T max_norm) {
  double sq = 0.0;
  for (auto& p : layer_params) {
    if (!p.has_grad()) continue;
    for (T g : p.grad()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (norm <= static_cast<double>(max_norm)) return;
  const T s = static_cast<T>(static_cast<double>(max_norm) / norm);
  for (auto& p : layer_params) {
    if (!p.has_grad()) continue;
    for (auto& g : p.grad_buffer()) g *= s;
  }
}

}  // namespace sedkit
