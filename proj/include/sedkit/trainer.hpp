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
#include <string>
#include <vector>

#include "sedkit/checkpoint.hpp"
#include "sedkit/metrics.hpp"
#include "sedkit/synthdata.hpp"

namespace sedkit {

struct TrainConfig {
  int batch_size = 8;
  double learning_rate = 1e-3;
  bool grad_clip = false;
  double clip_norm = 0.5;
  int patience = 50;  // epochs without a new validation-loss minimum
  int max_epochs = 300;
  uint64_t seed = 1;
  double threshold = 0.5;

  void validate() const {
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (patience < 1) throw ConfigError("train: patience must be >= 1");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("train: learning_rate must be > 0");
    if (clip_norm <= 0.0) throw ConfigError("train: clip_norm must be > 0");
  }
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double p_tf = 0.0;  // at epoch end
};

struct TrainOutcome {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  int64_t updates = 0;  // final weight-update counter i
  Checkpoint best_checkpoint;
  Checkpoint last_checkpoint;  // state at the final epoch
  double min_train_loss = 0.0;
  int64_t updates_at_min_train_loss = 0;
};

// Full training loop: seeded shuffling, teacher forcing per the model's
// conditioning mode, optional per-layer gradient clipping, Adam, early
// stopping on the validation loss, best-checkpoint tracking. The returned
// checkpoint is the best-validation one, not the last.
TrainOutcome train(const TrainConfig& tc, const ModelConfig& mc, const ScheduleParams& sp,
                   const Corpus& corpus, uint64_t fingerprint = 0);

// One log line per epoch: epoch, train loss, val loss, p_TF at epoch end.
std::string format_train_log(const std::vector<EpochLog>& log);

// Frame-based scoring of one split, padded frames masked out.
Score evaluate_model(SedModel<float>& model, const Standardizer& standardizer,
                     const Corpus& corpus, Split split, double threshold, int batch_size);
Score evaluate_checkpoint(const Checkpoint& ckpt, const Corpus& corpus, Split split,
                          double threshold, int batch_size = 8);

// A/B driver: {baseline, scheduled conditioning} x {structured,
// unstructured} over n_seeds seeds each, paired per seed on the same
// corpus. Reports mean/std of F1 and ER per cell plus the deltas.
struct AbResult {
  ScoreStats cells[2][2];  // [kind: 0=structured,1=unstructured][system: 0=baseline,1=proposed]
  double f1_delta[2] = {0.0, 0.0};  // proposed - baseline, per kind
  double er_delta[2] = {0.0, 0.0};
};

AbResult ab_experiment(const TrainConfig& tc, const ModelConfig& mc,
                       const ScheduleParams& sp, const CorpusParams& cp, int n_seeds,
                       bool verbose = false);

std::string format_ab_table(const AbResult& r);
std::string format_ab_kv(const AbResult& r);

}  // namespace sedkit
