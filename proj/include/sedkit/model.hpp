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

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sedkit/nn.hpp"
#include "sedkit/schedule.hpp"
#include "sedkit/types.hpp"

namespace sedkit {

// How the GRU input is conditioned on previous-step class activities.
enum class Conditioning { Off, GroundTruth, Scheduled, Predictions };

const char* conditioning_name(Conditioning c);
Conditioning conditioning_from_name(const std::string& name);

struct ModelConfig {
  int n_classes = 6;
  int n_mels = 40;
  int cnn_filters = 128;
  int gru_hidden = 128;
  std::array<std::pair<int, int>, 3> pools{{{1, 5}, {1, 4}, {1, 2}}};
  Conditioning conditioning = Conditioning::Off;
  bool binarize_conditioning = false;
  double dropout = 0.25;

  void validate() const {
    if (n_classes < 1)
      throw ConfigError(msg("model: n_classes must be >= 1, got ", n_classes));
    int f = 1;
    for (auto [pt, pf] : pools) f *= pf;
    if (f != n_mels)
      throw ConfigError(msg("model: pool frequency factors multiply to ", f,
                            " but n_mels is ", n_mels));
    if (dropout < 0.0 || dropout >= 1.0)
      throw ConfigError(msg("model: dropout must be in [0,1), got ", dropout));
    if (cnn_filters < 1 || gru_hidden < 1)
      throw ConfigError("model: cnn_filters and gru_hidden must be >= 1");
  }

  bool conditioned() const { return conditioning != Conditioning::Off; }
  int gru_input_size() const { return cnn_filters + (conditioned() ? n_classes : 0); }
};

// The CRNN: three CNN blocks collapse the frequency axis, a GRU runs over
// time, a linear+sigmoid head emits per-class activities. When conditioned,
// the previous step's activity vector is concatenated onto the GRU input.
template <class T>
struct SedModel {
  ModelConfig cfg;
  CnnBlock<T> block1, block2, block3;
  GruCell<T> gru;
  Linear<T> fc;

  static SedModel init(const ModelConfig& cfg, uint64_t init_seed) {
    cfg.validate();
    Rng rng(init_seed);
    SedModel m;
    m.cfg = cfg;
    m.block1 = CnnBlock<T>::init(1, cfg.cnn_filters, cfg.pools[0].first,
                                 cfg.pools[0].second, cfg.dropout, false, rng);
    m.block2 = CnnBlock<T>::init(cfg.cnn_filters, cfg.cnn_filters, cfg.pools[1].first,
                                 cfg.pools[1].second, cfg.dropout, false, rng);
    m.block3 = CnnBlock<T>::init(cfg.cnn_filters, cfg.cnn_filters, cfg.pools[2].first,
                                 cfg.pools[2].second, cfg.dropout, true, rng);
    m.gru = GruCell<T>::init(cfg.gru_input_size(), cfg.gru_hidden, rng);
    m.fc = Linear<T>::init(cfg.gru_hidden, cfg.n_classes, rng);
    return m;
  }

  bool conditioned() const { return cfg.conditioned(); }

  // Trainable parameters in a fixed registry order (checkpoint order).
  std::vector<std::pair<std::string, Tensor<T>>> named_params() {
    std::vector<std::pair<std::string, Tensor<T>>> out;
    auto block = [&](const char* prefix, CnnBlock<T>& b) {
      out.emplace_back(std::string(prefix) + ".conv.w", b.conv.w);
      out.emplace_back(std::string(prefix) + ".conv.b", b.conv.b);
      out.emplace_back(std::string(prefix) + ".bn.scale", b.bn.scale);
      out.emplace_back(std::string(prefix) + ".bn.shift", b.bn.shift);
    };
    block("block1", block1);
    block("block2", block2);
    block("block3", block3);
    out.emplace_back("gru.wz", gru.wz);
    out.emplace_back("gru.wr", gru.wr);
    out.emplace_back("gru.wh", gru.wh);
    out.emplace_back("gru.uz", gru.uz);
    out.emplace_back("gru.ur", gru.ur);
    out.emplace_back("gru.uh", gru.uh);
    out.emplace_back("gru.bz", gru.bz);
    out.emplace_back("gru.br", gru.br);
    out.emplace_back("gru.bh", gru.bh);
    out.emplace_back("fc.w", fc.w);
    out.emplace_back("fc.b", fc.b);
    return out;
  }

  std::vector<Tensor<T>> trainable() {
    std::vector<Tensor<T>> out;
    for (auto& [name, t] : named_params()) out.push_back(t);
    return out;
  }

  // Non-trainable buffers (BN running statistics), checkpointed alongside.
  std::vector<std::pair<std::string, std::vector<T>*>> named_buffers() {
    return {
        {"block1.bn.running_mean", &block1.bn.running_mean},
        {"block1.bn.running_var", &block1.bn.running_var},
        {"block2.bn.running_mean", &block2.bn.running_mean},
        {"block2.bn.running_var", &block2.bn.running_var},
        {"block3.bn.running_mean", &block3.bn.running_mean},
        {"block3.bn.running_var", &block3.bn.running_var},
    };
  }

  // Per-layer groups for l2 gradient clipping.
  std::vector<std::vector<Tensor<T>>> layer_groups() {
    return {
        {block1.conv.w, block1.conv.b, block1.bn.scale, block1.bn.shift},
        {block2.conv.w, block2.conv.b, block2.bn.scale, block2.bn.shift},
        {block3.conv.w, block3.conv.b, block3.bn.scale, block3.bn.shift},
        {gru.wz, gru.wr, gru.wh, gru.uz, gru.ur, gru.uh, gru.bz, gru.br, gru.bh},
        {fc.w, fc.b},
    };
  }

  void zero_grads() {
    for (auto& t : trainable()) t.zero_grad();
  }
};

namespace detail {

// CNN stack: [B,T,F] -> [B,T,F'] with F' = cnn_filters (frequency axis
// collapses to 1 through the pool plan).
template <class T>
Tensor<T> cnn_stack(Tape<T>* tape, SedModel<T>& model, Tensor<T> X, bool train,
                    Rng& drop_rng) {
  if (X.rank() != 3)
    throw ShapeError(msg("forward: expected [B,T,F] features, got ",
                         shape_str(X.shape())));
  if (X.dim(2) != model.cfg.n_mels)
    throw ShapeError(msg("forward: feature dim ", X.dim(2), " vs configured n_mels ",
                         model.cfg.n_mels));
  const int B = X.dim(0), Tn = X.dim(1), F = X.dim(2);
  auto h = reshape(tape, X, {B, 1, Tn, F});
  h = model.block1.forward(tape, h, train, drop_rng);
  h = model.block2.forward(tape, h, train, drop_rng);
  h = model.block3.forward(tape, h, train, drop_rng);
  return channels_to_features(tape, h);
}

// Supplies y'_t after step t produced prediction yhat_t.
template <class T>
struct ConditioningSource {
  virtual ~ConditioningSource() = default;
  virtual void next(int t, const std::vector<T>& yhat_t, std::vector<T>& out) = 0;
};

template <class T>
struct TeacherForcedSource : ConditioningSource<T> {
  const std::vector<T>* y_true;  // [B*T*C] flattened ground truth
  ActivitySelector* selector;
  bool binarize_pred;
  int batch, classes;

  void next(int t, const std::vector<T>& yhat_t, std::vector<T>& out) override {
    // y_true is [B,T,C]; gather row t of each sequence into a contiguous view.
    scratch_.resize(static_cast<size_t>(batch) * classes);
    const int64_t bstride = static_cast<int64_t>(n_frames_) * classes;
    for (int b = 0; b < batch; ++b)
      for (int c = 0; c < classes; ++c)
        scratch_[static_cast<size_t>(b) * classes + c] =
            (*y_true)[b * bstride + static_cast<int64_t>(t) * classes + c];
    selector->select(batch, classes, scratch_.data(), yhat_t.data(), binarize_pred,
                     out.data());
  }

  void set_frames(int n) { n_frames_ = n; }

 private:
  int n_frames_ = 0;
  std::vector<T> scratch_;
};

template <class T>
struct PredictionSource : ConditioningSource<T> {
  bool binarize_pred;
  int batch, classes;

  void next(int, const std::vector<T>& yhat_t, std::vector<T>& out) override {
    if (binarize_pred)
      binarize(yhat_t.data(), batch * classes, out.data());
    else
      out.assign(yhat_t.begin(), yhat_t.end());
  }
};

// Shared recurrent head. `cond` is null when the model is unconditioned.
template <class T>
Tensor<T> crnn_forward(Tape<T>* tape, SedModel<T>& model, Tensor<T> X, bool train,
                       Rng& drop_rng, ConditioningSource<T>* cond) {
  auto H = cnn_stack(tape, model, X, train, drop_rng);  // [B,T,F']
  const int B = H.dim(0), Tn = H.dim(1);
  const int C = model.cfg.n_classes;
  Tensor<T> h = Tensor<T>::zeros({B, model.gru.hidden_size()});
  std::vector<Tensor<T>> steps;
  steps.reserve(Tn);
  std::vector<T> cond_row(static_cast<size_t>(B) * C, T(0));  // y'_0 = 0
  for (int t = 0; t < Tn; ++t) {
    auto ht = time_slice(tape, H, t);
    Tensor<T> x_t = ht;
    if (model.conditioned()) {
      // Fed-back activities are constants: no gradient through this path.
      auto cond_t = Tensor<T>::from_data({B, C}, cond_row, false);
      x_t = concat_cols(tape, ht, cond_t);
    }
    h = model.gru.step(tape, x_t, h);
    auto yt = sigmoid(tape, model.fc.forward(tape, h));
    steps.push_back(yt);
    if (model.conditioned() && t + 1 < Tn) cond->next(t, yt.value(), cond_row);
  }
  return stack_time(tape, steps);
}

}  // namespace detail

// Unconditioned forward pass: [B,T,F] -> activities [B,T,C] in (0,1).
template <class T>
Tensor<T> forward_baseline(Tape<T>* tape, SedModel<T>& model, Tensor<T> X, bool train,
                           Rng& drop_rng) {
  if (model.conditioned())
    throw UsageError("forward_baseline: model is configured with conditioning");
  return detail::crnn_forward<T>(tape, model, X, train, drop_rng, nullptr);
}

// Teacher-forced forward: at each step the GRU input is concat(h_t, y'_{t-1})
// where y'_{t-1} is the selector's pick of ground truth vs the model's own
// previous prediction (optionally binarized).
template <class T>
Tensor<T> forward_teacher_forced(Tape<T>* tape, SedModel<T>& model, Tensor<T> X,
                                 const std::vector<T>& y_true, ActivitySelector& selector,
                                 bool train, Rng& drop_rng) {
  if (!model.conditioned())
    throw UsageError("forward_teacher_forced: model has conditioning off");
  const int B = X.dim(0), Tn = X.dim(1), C = model.cfg.n_classes;
  if (static_cast<int64_t>(y_true.size()) != static_cast<int64_t>(B) * Tn * C)
    throw ShapeError(msg("forward_teacher_forced: ground truth size ", y_true.size(),
                         " vs expected ", static_cast<int64_t>(B) * Tn * C));
  detail::TeacherForcedSource<T> src;
  src.y_true = &y_true;
  src.selector = &selector;
  src.binarize_pred = model.cfg.binarize_conditioning;
  src.batch = B;
  src.classes = C;
  src.set_frames(Tn);
  return detail::crnn_forward(tape, model, X, train, drop_rng, &src);
}

// Masked binary cross-entropy, mean over valid frames, summed over classes.
// Predictions are clamped to [1e-7, 1-1e-7] before the logs; the clamp
// passes no gradient outside its range.
template <class T>
Tensor<T> bce_loss(Tape<T>* tape, Tensor<T> yhat, const std::vector<uint8_t>& y,
                   const std::vector<uint8_t>& mask) {
  if (yhat.rank() != 3)
    throw ShapeError(msg("bce_loss: expected [B,T,C], got ", shape_str(yhat.shape())));
  const int B = yhat.dim(0), Tn = yhat.dim(1), C = yhat.dim(2);
  if (static_cast<int64_t>(y.size()) != yhat.numel())
    throw ShapeError(msg("bce_loss: target size ", y.size(), " vs predictions ",
                         shape_str(yhat.shape())));
  if (static_cast<int64_t>(mask.size()) != static_cast<int64_t>(B) * Tn)
    throw ShapeError(msg("bce_loss: mask size ", mask.size(), " vs ", B * Tn, " frames"));
  for (uint8_t v : y)
    if (v > 1) throw UsageError(msg("bce_loss: non-binary target value ", int(v)));

  const T lo = T(1e-7), hi = T(1) - T(1e-7);
  int64_t n_valid = 0;
  for (uint8_t m : mask) n_valid += m;
  if (n_valid == 0) throw UsageError("bce_loss: no valid frames in mask");

  double loss = 0.0;
  for (int b = 0; b < B; ++b)
    for (int t = 0; t < Tn; ++t) {
      if (!mask[static_cast<size_t>(b) * Tn + t]) continue;
      const int64_t off = (static_cast<int64_t>(b) * Tn + t) * C;
      for (int c = 0; c < C; ++c) {
        const T p = std::min(hi, std::max(lo, yhat.value()[off + c]));
        const double yv = y[off + c];
        loss -= yv * std::log(static_cast<double>(p)) +
                (1.0 - yv) * std::log(1.0 - static_cast<double>(p));
      }
    }
  loss /= static_cast<double>(n_valid);

  const bool rg = yhat.requires_grad();
  Tensor<T> out = detail::make_output(tape, {1}, std::vector<T>{static_cast<T>(loss)}, rg);
  if (detail::record_needed(tape, rg)) {
    Tensor<T> yh = yhat;
    tape->record("bce_loss", [yh, out, ycopy = y, mcopy = mask,
                              B, Tn, C, lo, hi, n_valid]() mutable {
      const T g = out.grad()[0];
      auto& gy = yh.grad_buffer();
      const T inv_n = static_cast<T>(1.0 / static_cast<double>(n_valid));
      for (int b = 0; b < B; ++b)
        for (int t = 0; t < Tn; ++t) {
          if (!mcopy[static_cast<size_t>(b) * Tn + t]) continue;
          const int64_t off = (static_cast<int64_t>(b) * Tn + t) * C;
          for (int c = 0; c < C; ++c) {
            const T p = yh.value()[off + c];
            if (p <= lo || p >= hi) continue;  // clamp region: zero gradient
            const T yv = static_cast<T>(ycopy[off + c]);
            gy[off + c] += g * inv_n * (-(yv / p) + (T(1) - yv) / (T(1) - p));
          }
        }
    });
  }
  return out;
}

template <class T>
struct InferResult {
  Tensor<T> probabilities;  // [B,T,C]
  EventRoll roll;           // thresholded activities, batch rows stacked as [B*T x C]
};

// Inference: eval mode, conditioning (when on) always feeds back the
// model's own previous prediction. Binary roll uses yhat >= threshold.
template <class T>
InferResult<T> infer(SedModel<T>& model, Tensor<T> X, double threshold = 0.5) {
  Rng no_drop(0);  // eval mode draws nothing
  Tensor<T> probs;
  if (model.conditioned()) {
    detail::PredictionSource<T> src;
    src.binarize_pred = model.cfg.binarize_conditioning;
    src.batch = X.dim(0);
    src.classes = model.cfg.n_classes;
    probs = detail::crnn_forward<T>(nullptr, model, X, false, no_drop, &src);
  } else {
    probs = detail::crnn_forward<T>(nullptr, model, X, false, no_drop, nullptr);
  }
  const int B = probs.dim(0), Tn = probs.dim(1), C = probs.dim(2);
  InferResult<T> res;
  res.probabilities = probs;
  res.roll = EventRoll(B * Tn, C, 0.0);
  for (int64_t i = 0; i < probs.numel(); ++i)
    res.roll.values[i] = probs.value()[i] >= static_cast<T>(threshold) ? 1 : 0;
  return res;
}

}  // namespace sedkit
