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

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "sedkit/errors.hpp"
#include "sedkit/kernels.hpp"

namespace sedkit {

// Dense row-major tensor with reverse-mode autodiff over a recorded tape.
// Storage is templated on the scalar: float for training, double for
// gradient-check builds. Values are immutable once an op has produced
// them; only grad buffers accumulate afterwards.

template <class T>
struct TensorData {
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated on first accumulation
  bool requires_grad = false;
  const void* producer_tape = nullptr;  // tape that recorded this tensor, if any
};

template <class T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false) {
    Tensor t;
    t.d_ = std::make_shared<TensorData<T>>();
    t.d_->shape = std::move(shape);
    t.d_->value.assign(numel_of(t.d_->shape), T(0));
    t.d_->requires_grad = requires_grad;
    return t;
  }

  static Tensor from_data(std::vector<int> shape, std::vector<T> data,
                          bool requires_grad = false) {
    if (numel_of(shape) != static_cast<int64_t>(data.size()))
      throw ShapeError(msg("tensor: shape ", shape_str(shape), " wants ",
                           numel_of(shape), " values, got ", data.size()));
    Tensor t;
    t.d_ = std::make_shared<TensorData<T>>();
    t.d_->shape = std::move(shape);
    t.d_->value = std::move(data);
    t.d_->requires_grad = requires_grad;
    return t;
  }

  static Tensor scalar_tensor(T v, bool requires_grad = false) {
    return from_data({1}, {v}, requires_grad);
  }

  bool defined() const { return d_ != nullptr; }
  const std::vector<int>& shape() const { return d_->shape; }
  int dim(int i) const { return d_->shape[i]; }
  int rank() const { return static_cast<int>(d_->shape.size()); }
  int64_t numel() const { return static_cast<int64_t>(d_->value.size()); }
  bool requires_grad() const { return d_->requires_grad; }

  const std::vector<T>& value() const { return d_->value; }
  std::vector<T>& mutable_value() { return d_->value; }

  T scalar() const {
    if (numel() != 1)
      throw UsageError(msg("scalar() on tensor of shape ", shape_str(d_->shape)));
    return d_->value[0];
  }

  bool has_grad() const { return !d_->grad.empty(); }
  const std::vector<T>& grad() const { return d_->grad; }
  std::vector<T>& grad_buffer() {
    if (d_->grad.empty()) d_->grad.assign(d_->value.size(), T(0));
    return d_->grad;
  }
  void zero_grad() {
    if (!d_->grad.empty()) std::fill(d_->grad.begin(), d_->grad.end(), T(0));
  }

  void set_requires_grad(bool rg) { d_->requires_grad = rg; }
  const void* producer() const { return d_->producer_tape; }
  void set_producer(const void* tape) { d_->producer_tape = tape; }

  // Identity of the underlying buffer, used by the optimizer bookkeeping.
  const void* id() const { return d_.get(); }

  static int64_t numel_of(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }

 private:
  std::shared_ptr<TensorData<T>> d_;
};

// Recorded forward pass. Nodes are appended in execution order, so the
// list is topologically sorted by construction; backward() walks it once,
// in reverse. A second backward() without reset() is an error.
template <class T>
class Tape {
 public:
  struct Node {
    const char* op;
    std::function<void()> backward;
  };

  void record(const char* op, std::function<void()> backward) {
    nodes_.push_back(Node{op, std::move(backward)});
  }

  void backward(Tensor<T>& loss) {
    if (backward_done_)
      throw UsageError("tape: backward called twice without reset");
    if (loss.numel() != 1)
      throw UsageError(msg("tape: loss must be scalar, got shape ",
                           shape_str(loss.shape())));
    if (loss.producer() != this)
      throw UsageError("tape: loss tensor was not produced on this tape");
    loss.grad_buffer()[0] = T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
    backward_done_ = true;
  }

  void reset() {
    nodes_.clear();
    backward_done_ = false;
  }

  size_t num_nodes() const { return nodes_.size(); }
  const char* node_op(size_t i) const { return nodes_[i].op; }
  bool backward_done() const { return backward_done_; }

 private:
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

namespace detail {

template <class T>
void check_finite(const Tensor<T>& t, const char* op) {
#ifndef NDEBUG
  for (T v : t.value())
    if (!std::isfinite(v))
      throw std::runtime_error(msg("non-finite value after op '", op, "'"));
#else
  (void)t;
  (void)op;
#endif
}

template <class T>
void add_into(std::vector<T>& dst, const std::vector<T>& src) {
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <class T>
Tensor<T> make_output(Tape<T>* tape, std::vector<int> shape,
                      std::vector<T> value, bool requires_grad) {
  Tensor<T> out = Tensor<T>::from_data(std::move(shape), std::move(value),
                                       requires_grad);
  if (tape) out.set_producer(tape);
  return out;
}

template <class T>
bool record_needed(Tape<T>* tape, bool any_input_rg) {
  return tape != nullptr && any_input_rg;
}

}  // namespace detail

// ---- element-wise binary ops (same shape) ----

template <class T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(msg(op, ": shapes differ: ", shape_str(a.shape()), " vs ",
                         shape_str(b.shape())));
}

template <class T>
Tensor<T> add(Tape<T>* tape, Tensor<T> a, Tensor<T> b) {
  check_same_shape(a, b, "add");
  std::vector<T> v(a.numel());
  for (int64_t i = 0; i < a.numel(); ++i) v[i] = a.value()[i] + b.value()[i];
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor<T> out = detail::make_output(tape, a.shape(), std::move(v), rg);
  if (detail::record_needed(tape, rg)) {
    tape->record("add", [a, b, out]() mutable {
      const auto& go = out.grad();
      if (a.requires_grad()) detail::add_into(a.grad_buffer(), go);
      if (b.requires_grad()) detail::add_into(b.grad_buffer(), go);
    });
  }
  detail::check_finite(out, "add");
  return out;
}

template <class T>
Tensor<T> sub(Tape<T>* tape, Tensor<T> a, Tensor<T> b) {
  check_same_shape(a, b, "sub");
  std::vector<T> v(a.numel());
  for (int64_t i = 0; i < a.numel(); ++i) v[i] = a.value()[i] - b.value()[i];
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor<T> out = detail::make_output(tape, a.shape(), std::move(v), rg);
  if (detail::record_needed(tape, rg)) {
    tape->record("sub", [a, b, out]() mutable {
      const auto& go = out.grad();
      if (a.requires_grad()) detail::add_into(a.grad_buffer(), go);
      if (b.requires_grad()) {
        auto& gb = b.grad_buffer();
        for (size_t i = 0; i < gb.size(); ++i) gb[i] -= go[i];
      }
    });
  }
  detail::check_finite(out, "sub");
  return out;
}

template <class T>
Tensor<T> mul(Tape<T>* tape, Tensor<T> a, Tensor<T> b) {
  check_same_shape(a, b, "mul");
  std::vector<T> v(a.numel());
  for (int64_t i = 0; i < a.numel(); ++i) v[i] = a.value()[i] * b.value()[i];
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor<T> out = detail::make_output(tape, a.shape(), std::move(v), rg);
  if (detail::record_needed(tape, rg)) {
    tape->record("mul", [a, b, out]() mutable {
      const auto& go = out.grad();
      if (a.requires_grad()) {
        auto& ga = a.grad_buffer();
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += go[i] * b.value()[i];
      }
      if (b.requires_grad()) {
        auto& gb = b.grad_buffer();
        for (size_t i = 0; i < gb.size(); ++i) gb[i] += go[i] * a.value()[i];
      }
    });
  }
  detail::check_finite(out, "mul");
  return out;
}

// x[R x D] + row vector b[D], broadcast over rows.
template <class T>
Tensor<T> add_rowvec(Tape<T>* tape, Tensor<T> x, Tensor<T> b) {
  if (x.rank() != 2 || b.rank() != 1 || x.dim(1) != b.dim(0))
    throw ShapeError(msg("add_rowvec: ", shape_str(x.shape()), " vs ",
                         shape_str(b.shape())));
  const int R = x.dim(0), D = x.dim(1);
  std::vector<T> v(x.numel());
  for (int r = 0; r < R; ++r)
    for (int d = 0; d < D; ++d)
      v[static_cast<size_t>(r) * D + d] = x.value()[static_cast<size_t>(r) * D + d] + b.value()[d];
  const bool rg = x.requires_grad() || b.requires_grad();
  Tensor<T> out = detail::make_output(tape, x.shape(), std::move(v), rg);
  if (detail::record_needed(tape, rg)) {
    tape->record("add_rowvec", [x, b, out, R, D]() mutable {
      const auto& go = out.grad();
      if (x.requires_grad()) detail::add_into(x.grad_buffer(), go);
      if (b.requires_grad()) {
        auto& gb = b.grad_buffer();
        for (int r = 0; r < R; ++r)
          for (int d = 0; d < D; ++d) gb[d] += go[static_cast<size_t>(r) * D + d];
      }
    });
  }
  detail::check_finite(out, "add_rowvec");
  return out;
}

// ---- matmul ----

template <class T>
Tensor<T> matmul(Tape<T>* tape, Tensor<T> a, Tensor<T> b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError(msg("matmul: inner dimensions disagree: ",
                         shape_str(a.shape()), " x ", shape_str(b.shape())));
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> v(static_cast<size_t>(m) * n);
  kernels::matmul(a.value().data(), b.value().data(), v.data(), m, k, n);
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor<T> out = detail::make_output(tape, {m, n}, std::move(v), rg);
  if (detail::record_needed(tape, rg)) {
    tape->record("matmul", [a, b, out, m, k, n]() mutable {
      const auto& go = out.grad();
      if (a.requires_grad()) {
        // gA[i,p] += sum_j gO[i,j] * B[p,j]
        auto& ga = a.grad_buffer();
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < k; ++p) {
            T acc = T(0);
            const T* go_row = go.data() + static_cast<size_t>(i) * n;
            const T* b_row = b.value().data() + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) acc += go_row[j] * b_row[j];
            ga[static_cast<size_t>(i) * k + p] += acc;
          }
      }
      if (b.requires_grad()) {
        // gB[p,j] += sum_i A[i,p] * gO[i,j]
        auto& gb = b.grad_buffer();
        for (int p = 0; p < k; ++p)
          for (int i = 0; i < m; ++i) {
            const T aip = a.value()[static_cast<size_t>(i) * k + p];
            const T* go_row = go.data() + static_cast<size_t>(i) * n;
            T* gb_row = gb.data() + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) gb_row[j] += aip * go_row[j];
          }
      }
    });
  }
  detail::check_finite(out, "matmul");
  return out;
}

// ---- conv2d / maxpool ----

template <class T>
Tensor<T> conv2d(Tape<T>* tape, Tensor<T> x, Tensor<T> w, Tensor<T> bias, int pad) {
  if (x.rank() != 4 || w.rank() != 4)
    throw ShapeError(msg("conv2d: expected 4-d input and kernel, got ",
                         shape_str(x.shape()), " and ", shape_str(w.shape())));
  if (x.dim(1) != w.dim(1))
    throw ShapeError(msg("conv2d: channel mismatch: input ", shape_str(x.shape()),
                         " vs kernel ", shape_str(w.shape())));
  if (w.dim(2) != w.dim(3))
    throw ShapeError(msg("conv2d: kernel must be square, got ", shape_str(w.shape())));
  if (bias.rank() != 1 || bias.dim(0) != w.dim(0))
    throw ShapeError(msg("conv2d: bias ", shape_str(bias.shape()),
                         " vs kernel ", shape_str(w.shape())));
  const int B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int Cout = w.dim(0), K = w.dim(2);
  std::vector<T> v(static_cast<size_t>(B) * Cout * H * W);
  kernels::conv2d_forward(x.value().data(), w.value().data(), bias.value().data(),
                          v.data(), B, Cin, H, W, Cout, K, pad);
  const bool rg = x.requires_grad() || w.requires_grad() || bias.requires_grad();
  Tensor<T> out = detail::make_output(tape, {B, Cout, H, W}, std::move(v), rg);
  if (detail::record_needed(tape, rg)) {
    tape->record("conv2d", [x, w, bias, out, B, Cin, H, W, Cout, K, pad]() mutable {
      const auto& go = out.grad();
      if (x.requires_grad()) {
        std::vector<T> gx(x.numel());
        kernels::conv2d_backward_input(go.data(), w.value().data(), gx.data(),
                                       B, Cin, H, W, Cout, K, pad);
        detail::add_into(x.grad_buffer(), gx);
      }
      if (w.requires_grad() || bias.requires_grad()) {
        std::vector<T> gw(w.numel()), gb(bias.numel());
        kernels::conv2d_backward_filter(go.data(), x.value().data(), gw.data(),
                                        gb.data(), B, Cin, H, W, Cout, K, pad);
        if (w.requires_grad()) detail::add_into(w.grad_buffer(), gw);
        if (bias.requires_grad()) detail::add_into(bias.grad_buffer(), gb);
      }
    });
  }
  detail::check_finite(out, "conv2d");
  return out;
}

template <class T>
Tensor<T> maxpool2d(Tape<T>* tape, Tensor<T> x, int kt, int kf) {
  if (x.rank() != 4)
    throw ShapeError(msg("maxpool2d: expected 4-d input, got ", shape_str(x.shape())));
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H % kt != 0 || W % kf != 0)
    throw ShapeError(msg("maxpool2d: dims (", H, ",", W, ") not divisible by kernel (",
                         kt, ",", kf, ")"));
  const int OH = H / kt, OW = W / kf;
  const int64_t n_out = static_cast<int64_t>(B) * C * OH * OW;
  std::vector<T> v(n_out);
  auto argmax = std::make_shared<std::vector<int64_t>>(n_out);
  kernels::maxpool_forward(x.value().data(), v.data(), argmax->data(), B, C, H, W, kt, kf);
  const bool rg = x.requires_grad();
  Tensor<T> out = detail::make_output(tape, {B, C, OH, OW}, std::move(v), rg);
  if (detail::record_needed(tape, rg)) {
    tape->record("maxpool2d", [x, out, argmax, n_out]() mutable {
      kernels::maxpool_backward(out.grad().data(), argmax->data(),
                                x.grad_buffer().data(), n_out);
    });
  }
  detail::check_finite(out, "maxpool2d");
  return out;
}

// ---- element-wise unary ops ----

namespace detail {
template <class T, class F, class G>
Tensor<T> unary_op(Tape<T>* tape, Tensor<T> x, const char* name, F fwd, G dval) {
  std::vector<T> v(x.numel());
  for (int64_t i = 0; i < x.numel(); ++i) v[i] = fwd(x.value()[i]);
  const bool rg = x.requires_grad();
  Tensor<T> out = make_output(tape, x.shape(), std::move(v), rg);
  if (record_needed(tape, rg)) {
    tape->record(name, [x, out, dval]() mutable {
      const auto& go = out.grad();
      auto& gx = x.grad_buffer();
      for (size_t i = 0; i < gx.size(); ++i)
        gx[i] += go[i] * dval(x.value()[i], out.value()[i]);
    });
  }
  check_finite(out, name);
  return out;
}
}  // namespace detail

template <class T>
Tensor<T> sigmoid(Tape<T>* tape, Tensor<T> x) {
  return detail::unary_op(
      tape, x, "sigmoid",
      [](T v) {
        // Split by sign for stability at large |v|.
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <class T>
Tensor<T> tanh_op(Tape<T>* tape, Tensor<T> x) {
  return detail::unary_op(tape, x, "tanh", [](T v) { return std::tanh(v); },
                          [](T, T y) { return T(1) - y * y; });
}

template <class T>
Tensor<T> relu(Tape<T>* tape, Tensor<T> x) {
  return detail::unary_op(tape, x, "relu",
                          [](T v) { return v > T(0) ? v : T(0); },
                          [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <class T>
Tensor<T> log_op(Tape<T>* tape, Tensor<T> x) {
  for (T v : x.value())
    if (!(v > T(0)))
      throw DomainError(msg("log: non-positive input ", v));
  return detail::unary_op(tape, x, "log", [](T v) { return std::log(v); },
                          [](T v, T) { return T(1) / v; });
}

template <class T>
Tensor<T> exp_op(Tape<T>* tape, Tensor<T> x) {
  return detail::unary_op(tape, x, "exp", [](T v) { return std::exp(v); },
                          [](T, T y) { return y; });
}

// Multiply by a fixed mask (dropout). The mask already carries the
// 1/(1-p) inverted-dropout scale.
template <class T>
Tensor<T> apply_mask(Tape<T>* tape, Tensor<T> x, std::shared_ptr<std::vector<T>> mask) {
  if (static_cast<int64_t>(mask->size()) != x.numel())
    throw ShapeError(msg("apply_mask: mask size ", mask->size(), " vs tensor ",
                         shape_str(x.shape())));
  std::vector<T> v(x.numel());
  for (int64_t i = 0; i < x.numel(); ++i) v[i] = x.value()[i] * (*mask)[i];
  const bool rg = x.requires_grad();
  Tensor<T> out = detail::make_output(tape, x.shape(), std::move(v), rg);
  if (detail::record_needed(tape, rg)) {
    tape->record("apply_mask", [x, out, mask]() mutable {
      const auto& go = out.grad();
      auto& gx = x.grad_buffer();
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * (*mask)[i];
    });
  }
  detail::check_finite(out, "apply_mask");
  return out;
}

// ---- shape ops ----

// Concatenate along the last axis: [R x Da] ++ [R x Db] -> [R x (Da+Db)].
template <class T>
Tensor<T> concat_cols(Tape<T>* tape, Tensor<T> a, Tensor<T> b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0))
    throw ShapeError(msg("concat_cols: leading dimensions differ: ",
                         shape_str(a.shape()), " vs ", shape_str(b.shape())));
  const int R = a.dim(0), Da = a.dim(1), Db = b.dim(1);
  std::vector<T> v(static_cast<size_t>(R) * (Da + Db));
  for (int r = 0; r < R; ++r) {
    for (int d = 0; d < Da; ++d)
      v[static_cast<size_t>(r) * (Da + Db) + d] = a.value()[static_cast<size_t>(r) * Da + d];
    for (int d = 0; d < Db; ++d)
      v[static_cast<size_t>(r) * (Da + Db) + Da + d] = b.value()[static_cast<size_t>(r) * Db + d];
  }
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor<T> out = detail::make_output(tape, {R, Da + Db}, std::move(v), rg);
  if (detail::record_needed(tape, rg)) {
    tape->record("concat_cols", [a, b, out, R, Da, Db]() mutable {
      const auto& go = out.grad();
      if (a.requires_grad()) {
        auto& ga = a.grad_buffer();
        for (int r = 0; r < R; ++r)
          for (int d = 0; d < Da; ++d)
            ga[static_cast<size_t>(r) * Da + d] += go[static_cast<size_t>(r) * (Da + Db) + d];
      }
      if (b.requires_grad()) {
        auto& gb = b.grad_buffer();
        for (int r = 0; r < R; ++r)
          for (int d = 0; d < Db; ++d)
            gb[static_cast<size_t>(r) * Db + d] += go[static_cast<size_t>(r) * (Da + Db) + Da + d];
      }
    });
  }
  detail::check_finite(out, "concat_cols");
  return out;
}

// [B x T x D] at time t -> [B x D].
template <class T>
Tensor<T> time_slice(Tape<T>* tape, Tensor<T> x, int t) {
  if (x.rank() != 3)
    throw ShapeError(msg("time_slice: expected 3-d input, got ", shape_str(x.shape())));
  const int B = x.dim(0), Tn = x.dim(1), D = x.dim(2);
  if (t < 0 || t >= Tn) throw UsageError(msg("time_slice: t=", t, " out of [0,", Tn, ")"));
  std::vector<T> v(static_cast<size_t>(B) * D);
  for (int b = 0; b < B; ++b)
    for (int d = 0; d < D; ++d)
      v[static_cast<size_t>(b) * D + d] =
          x.value()[(static_cast<size_t>(b) * Tn + t) * D + d];
  const bool rg = x.requires_grad();
  Tensor<T> out = detail::make_output(tape, {B, D}, std::move(v), rg);
  if (detail::record_needed(tape, rg)) {
    tape->record("time_slice", [x, out, t, B, Tn, D]() mutable {
      const auto& go = out.grad();
      auto& gx = x.grad_buffer();
      for (int b = 0; b < B; ++b)
        for (int d = 0; d < D; ++d)
          gx[(static_cast<size_t>(b) * Tn + t) * D + d] += go[static_cast<size_t>(b) * D + d];
    });
  }
  return out;
}

// Stack T step outputs [B x C] into [B x T x C].
template <class T>
Tensor<T> stack_time(Tape<T>* tape, const std::vector<Tensor<T>>& steps) {
  if (steps.empty()) throw UsageError("stack_time: no steps");
  const int B = steps[0].dim(0), C = steps[0].dim(1);
  const int Tn = static_cast<int>(steps.size());
  bool rg = false;
  for (const auto& s : steps) {
    check_same_shape(s, steps[0], "stack_time");
    rg = rg || s.requires_grad();
  }
  std::vector<T> v(static_cast<size_t>(B) * Tn * C);
  for (int t = 0; t < Tn; ++t)
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c)
        v[(static_cast<size_t>(b) * Tn + t) * C + c] =
            steps[t].value()[static_cast<size_t>(b) * C + c];
  Tensor<T> out = detail::make_output(tape, {B, Tn, C}, std::move(v), rg);
  if (detail::record_needed(tape, rg)) {
    tape->record("stack_time", [steps, out, B, Tn, C]() mutable {
      const auto& go = out.grad();
      for (int t = 0; t < Tn; ++t) {
        if (!steps[t].requires_grad()) continue;
        auto st = steps[t];
        auto& gs = st.grad_buffer();
        for (int b = 0; b < B; ++b)
          for (int c = 0; c < C; ++c)
            gs[static_cast<size_t>(b) * C + c] += go[(static_cast<size_t>(b) * Tn + t) * C + c];
      }
    });
  }
  return out;
}

// [B x C x T x 1] -> [B x T x C]: drop the collapsed frequency axis and
// put time first so the recurrent loop can slice rows.
template <class T>
Tensor<T> channels_to_features(Tape<T>* tape, Tensor<T> x) {
  if (x.rank() != 4 || x.dim(3) != 1)
    throw ShapeError(msg("channels_to_features: expected [B,C,T,1], got ",
                         shape_str(x.shape())));
  const int B = x.dim(0), C = x.dim(1), Tn = x.dim(2);
  std::vector<T> v(static_cast<size_t>(B) * Tn * C);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < Tn; ++t)
        v[(static_cast<size_t>(b) * Tn + t) * C + c] =
            x.value()[(static_cast<size_t>(b) * C + c) * Tn + t];
  const bool rg = x.requires_grad();
  Tensor<T> out = detail::make_output(tape, {B, Tn, C}, std::move(v), rg);
  if (detail::record_needed(tape, rg)) {
    tape->record("channels_to_features", [x, out, B, C, Tn]() mutable {
      const auto& go = out.grad();
      auto& gx = x.grad_buffer();
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c)
          for (int t = 0; t < Tn; ++t)
            gx[(static_cast<size_t>(b) * C + c) * Tn + t] +=
                go[(static_cast<size_t>(b) * Tn + t) * C + c];
    });
  }
  return out;
}

// Same data, new shape (element count must match).
template <class T>
Tensor<T> reshape(Tape<T>* tape, Tensor<T> x, std::vector<int> new_shape) {
  if (Tensor<T>::numel_of(new_shape) != x.numel())
    throw ShapeError(msg("reshape: ", shape_str(x.shape()), " to ",
                         shape_str(new_shape), " changes element count"));
  const bool rg = x.requires_grad();
  Tensor<T> out = detail::make_output(tape, std::move(new_shape),
                                      std::vector<T>(x.value()), rg);
  if (detail::record_needed(tape, rg)) {
    tape->record("reshape", [x, out]() mutable {
      detail::add_into(x.grad_buffer(), out.grad());
    });
  }
  return out;
}

// ---- reductions ----

template <class T>
Tensor<T> sum_all(Tape<T>* tape, Tensor<T> x) {
  T s = T(0);
  for (T v : x.value()) s += v;
  const bool rg = x.requires_grad();
  Tensor<T> out = detail::make_output(tape, {1}, std::vector<T>{s}, rg);
  if (detail::record_needed(tape, rg)) {
    tape->record("sum_all", [x, out]() mutable {
      const T g = out.grad()[0];
      auto& gx = x.grad_buffer();
      for (auto& v : gx) v += g;
    });
  }
  return out;
}

}  // namespace sedkit
