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

#include <cstdint>
#include <utility>
#include <vector>

#include "sedkit/errors.hpp"
#include "sedkit/rng.hpp"

namespace sedkit {

// Hyper-parameters of the decaying teacher-forcing probability.
struct ScheduleParams {
  double gamma = 1.0 / 12.0;
  double p_min = 0.05;
  double p_max = 0.9;
  int n_batches = 1;  // batches per epoch, the decay's time constant

  void validate() const {
    if (!(p_min >= 0.0 && p_min <= p_max && p_max <= 1.0))
      throw ConfigError(msg("schedule: need 0 <= p_min <= p_max <= 1, got p_min=",
                            p_min, " p_max=", p_max));
    if (!(gamma > 0.0)) throw ConfigError(msg("schedule: gamma must be > 0, got ", gamma));
    if (n_batches < 1)
      throw ConfigError(msg("schedule: n_batches must be >= 1, got ", n_batches));
  }
};

// Probability of feeding ground truth instead of the model's own previous
// prediction at weight update i. Exponential decay from p_max to p_min.
double p_tf(int64_t update_index, const ScheduleParams& params);

// Same value through the algebraic tanh identity; the two routes must
// agree to within 1e-12 and both stay exposed so tests can cross-check.
double p_tf_tanh(int64_t update_index, const ScheduleParams& params);

// Tabulates (i, p_tf(i)) for i = 0..n_updates inclusive.
std::vector<std::pair<int64_t, double>> schedule_curve(const ScheduleParams& params,
                                                       int64_t n_updates);

// Threshold activities at 0.5 (inclusive).
template <class T>
void binarize(const T* y, int n, T* out) {
  for (int i = 0; i < n; ++i) out[i] = y[i] >= T(0.5) ? T(1) : T(0);
}

enum class SelectorMode { Scheduled, AlwaysTruth, AlwaysPred };

// Chooses, per sequence and time step, whether the conditioning vector is
// the ground-truth activity row or the model's previous prediction. The
// probability is frozen per weight update; draws come from one stream in
// a fixed (time step, then sequence) order.
class ActivitySelector {
 public:
  ActivitySelector(ScheduleParams params, SelectorMode mode, uint64_t seed)
      : params_(params), mode_(mode), rng_(seed) {
    params_.validate();
    p_current_ = p_tf(0, params_);
  }

  // Freezes p_tf for the coming batch. The update index never decreases.
  void begin_update(int64_t update_index) {
    if (update_index < update_index_)
      throw UsageError(msg("selector: update index went backwards: ",
                           update_index, " < ", update_index_));
    update_index_ = update_index;
    p_current_ = p_tf(update_index_, params_);
  }

  double current_p() const { return p_current_; }
  int64_t update_index() const { return update_index_; }
  SelectorMode mode() const { return mode_; }
  const ScheduleParams& params() const { return params_; }

  // One Bernoulli(p) draw per row. y_true and y_pred are [batch x classes];
  // the chosen row is written to out, predictions optionally binarized.
  template <class T>
  void select(int batch, int classes, const T* y_true, const T* y_pred,
              bool binarize_pred, T* out) {
    for (int b = 0; b < batch; ++b) {
      bool use_truth;
      switch (mode_) {
        case SelectorMode::AlwaysTruth: use_truth = true; break;
        case SelectorMode::AlwaysPred: use_truth = false; break;
        default: use_truth = rng_.uniform() < p_current_; break;
      }
      const T* src = (use_truth ? y_true : y_pred) + static_cast<int64_t>(b) * classes;
      T* dst = out + static_cast<int64_t>(b) * classes;
      if (!use_truth && binarize_pred)
        binarize(src, classes, dst);
      else
        for (int c = 0; c < classes; ++c) dst[c] = src[c];
    }
  }

 private:
  ScheduleParams params_;
  SelectorMode mode_;
  Rng rng_;
  int64_t update_index_ = 0;
  double p_current_ = 0.0;
};

}  // namespace sedkit
