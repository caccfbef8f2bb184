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

#include "sedkit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "sedkit/features.hpp"

namespace sedkit {

namespace {

// One fixed-length training item (a segment of a corpus sequence).
struct Item {
  FeatureMatrix features;  // standardized
  EventRoll roll;
  FrameMask mask;
};

size_t rng_index(Rng& rng, size_t n) {
  return static_cast<size_t>(rng.uniform_int(static_cast<uint64_t>(n)));
}

std::vector<Item> collect_items(const Corpus& corpus, const Standardizer& stz,
                                Split split) {
  std::vector<Item> items;
  for (const auto& seq : corpus.sequences) {
    if (seq.split != split) continue;
    for (auto& seg : segment_sequences(seq.features, seq.roll, corpus.params.seq_frames)) {
      Item item;
      item.features = std::move(seg.features);
      apply_standardizer(stz, item.features);
      item.roll = std::move(seg.roll);
      item.mask = std::move(seg.mask);
      items.push_back(std::move(item));
    }
  }
  return items;
}

// Stacks items [from, to) into batch arrays.
struct BatchData {
  Tensor<float> x;              // [B,T,F]
  std::vector<float> y_float;   // [B*T*C]
  std::vector<uint8_t> y_bits;  // [B*T*C]
  std::vector<uint8_t> mask;    // [B*T]
  int64_t n_valid = 0;
};

BatchData make_batch(const std::vector<Item>& items, const std::vector<int>& order,
                     size_t from, size_t to) {
  const int B = static_cast<int>(to - from);
  const Item& first = items[order[from]];
  const int T = first.features.frames, F = first.features.bands;
  const int C = first.roll.classes;
  BatchData bd;
  std::vector<float> xs(static_cast<size_t>(B) * T * F);
  bd.y_float.resize(static_cast<size_t>(B) * T * C);
  bd.y_bits.resize(static_cast<size_t>(B) * T * C);
  bd.mask.resize(static_cast<size_t>(B) * T);
  for (int b = 0; b < B; ++b) {
    const Item& it = items[order[from + b]];
    std::copy(it.features.values.begin(), it.features.values.end(),
              xs.begin() + static_cast<size_t>(b) * T * F);
    for (int64_t i = 0; i < static_cast<int64_t>(T) * C; ++i) {
      bd.y_bits[static_cast<size_t>(b) * T * C + i] = it.roll.values[i];
      bd.y_float[static_cast<size_t>(b) * T * C + i] = it.roll.values[i];
    }
    std::copy(it.mask.begin(), it.mask.end(), bd.mask.begin() + static_cast<size_t>(b) * T);
  }
  for (uint8_t m : bd.mask) bd.n_valid += m;
  bd.x = Tensor<float>::from_data({B, T, F}, std::move(xs));
  return bd;
}

// Evaluation-mode forward with inference conditioning (the model's own
// previous predictions when conditioning is on).
Tensor<float> forward_eval(SedModel<float>& model, Tensor<float> x) {
  return infer(model, x).probabilities;
}

double validation_loss(SedModel<float>& model, const std::vector<Item>& items,
                       int batch_size) {
  double total = 0.0;
  int64_t total_valid = 0;
  std::vector<int> order(items.size());
  for (size_t i = 0; i < items.size(); ++i) order[i] = static_cast<int>(i);
  for (size_t from = 0; from < items.size(); from += batch_size) {
    const size_t to = std::min(items.size(), from + batch_size);
    BatchData bd = make_batch(items, order, from, to);
    auto probs = forward_eval(model, bd.x);
    auto loss = bce_loss<float>(nullptr, probs, bd.y_bits, bd.mask);
    total += static_cast<double>(loss.scalar()) * static_cast<double>(bd.n_valid);
    total_valid += bd.n_valid;
  }
  return total_valid ? total / static_cast<double>(total_valid) : 0.0;
}

}  // namespace

TrainOutcome train(const TrainConfig& tc, const ModelConfig& mc, const ScheduleParams& sp,
                   const Corpus& corpus, uint64_t fingerprint) {
  tc.validate();
  mc.validate();
  if (mc.n_classes != corpus.params.n_classes)
    throw ConfigError(msg("train: model has ", mc.n_classes, " classes, corpus has ",
                          corpus.params.n_classes));

  // Independent streams so that changing one consumer cannot perturb the
  // others.
  const uint64_t init_seed = Rng::derive(tc.seed, static_cast<uint64_t>(Stream::Init));
  Rng dropout_rng(Rng::derive(tc.seed, static_cast<uint64_t>(Stream::Dropout)));
  const uint64_t sampler_seed = Rng::derive(tc.seed, static_cast<uint64_t>(Stream::Sampler));
  Rng shuffle_rng(Rng::derive(tc.seed, static_cast<uint64_t>(Stream::Shuffle)));

  SedModel<float> model = SedModel<float>::init(mc, init_seed);

  // Standardizer statistics come from the training split only.
  std::vector<const FeatureMatrix*> train_feats;
  for (const auto& seq : corpus.sequences)
    if (seq.split == Split::Train) train_feats.push_back(&seq.features);
  if (train_feats.empty()) throw ConfigError("train: corpus has no training split");
  const Standardizer stz = fit_standardizer(train_feats);

  std::vector<Item> train_items = collect_items(corpus, stz, Split::Train);
  std::vector<Item> val_items = collect_items(corpus, stz, Split::Val);
  if (val_items.empty()) throw ConfigError("train: corpus has no validation split");

  const int n_batches = static_cast<int>(
      (train_items.size() + tc.batch_size - 1) / tc.batch_size);
  if (n_batches < 1) throw ConfigError("train: no training batches");

  ScheduleParams sched = sp;
  sched.n_batches = n_batches;
  sched.validate();
  SelectorMode mode = SelectorMode::Scheduled;
  if (mc.conditioning == Conditioning::GroundTruth) mode = SelectorMode::AlwaysTruth;
  if (mc.conditioning == Conditioning::Predictions) mode = SelectorMode::AlwaysPred;
  ActivitySelector selector(sched, mode, sampler_seed);

  AdamState<float> adam;
  adam.lr = tc.learning_rate;
  auto params = model.trainable();
  adam.init(params);

  TrainOutcome out;
  out.best_val_loss = std::numeric_limits<double>::infinity();
  out.min_train_loss = std::numeric_limits<double>::infinity();
  int64_t update_index = 0;

  std::vector<int> order(train_items.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  Tape<float> tape;
  for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    // Seeded Fisher-Yates shuffle.
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng_index(shuffle_rng, i)]);

    double epoch_loss = 0.0;
    int batch_count = 0;
    for (size_t from = 0; from < train_items.size(); from += tc.batch_size) {
      const size_t to = std::min(train_items.size(), from + tc.batch_size);
      BatchData bd = make_batch(train_items, order, from, to);

      selector.begin_update(update_index);
      tape.reset();
      model.zero_grads();

      Tensor<float> probs;
      if (model.conditioned())
        probs = forward_teacher_forced(&tape, model, bd.x, bd.y_float, selector, true,
                                       dropout_rng);
      else
        probs = forward_baseline(&tape, model, bd.x, true, dropout_rng);
      auto loss = bce_loss(&tape, probs, bd.y_bits, bd.mask);
      const double loss_v = loss.scalar();
      if (!std::isfinite(loss_v))
        throw std::runtime_error(msg("train: loss diverged (", loss_v, ") at epoch ",
                                     epoch, ", batch index ", batch_count));
      tape.backward(loss);

      if (tc.grad_clip)
        for (auto& group : model.layer_groups())
          clip_grad_l2<float>(group, static_cast<float>(tc.clip_norm));

      adam.step(params);
      ++update_index;
      epoch_loss += loss_v;
      ++batch_count;

      if (loss_v < out.min_train_loss) {
        out.min_train_loss = loss_v;
        out.updates_at_min_train_loss = update_index;
      }
    }
    epoch_loss /= batch_count;

    const double val_loss = validation_loss(model, val_items, tc.batch_size);
    out.log.push_back({epoch, epoch_loss, val_loss, p_tf(update_index, sched)});

    if (val_loss < out.best_val_loss) {
      out.best_val_loss = val_loss;
      out.best_epoch = epoch;
      out.best_checkpoint =
          checkpoint_from_state(model, adam, stz, update_index, fingerprint);
    }
    if (epoch - out.best_epoch >= tc.patience) break;
  }
  out.updates = update_index;
  out.last_checkpoint = checkpoint_from_state(model, adam, stz, update_index, fingerprint);
  return out;
}

std::string format_train_log(const std::vector<EpochLog>& log) {
  std::ostringstream os;
  os << "epoch\ttrain_loss\tval_loss\tp_tf\n";
  os << std::fixed << std::setprecision(6);
  for (const auto& e : log)
    os << e.epoch << "\t" << e.train_loss << "\t" << e.val_loss << "\t" << e.p_tf << "\n";
  return os.str();
}

Score evaluate_model(SedModel<float>& model, const Standardizer& stz, const Corpus& corpus,
                     Split split, double threshold, int batch_size) {
  if (model.cfg.n_classes != corpus.params.n_classes)
    throw ConfigError(msg("evaluate: model has ", model.cfg.n_classes,
                          " classes, corpus has ", corpus.params.n_classes));
  std::vector<Item> items = collect_items(corpus, stz, split);
  if (items.empty())
    throw ConfigError(msg("evaluate: split '", split_name(split), "' is empty"));
  std::vector<int> order(items.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  FrameCounts counts;
  for (size_t from = 0; from < items.size(); from += batch_size) {
    const size_t to = std::min(items.size(), from + batch_size);
    BatchData bd = make_batch(items, order, from, to);
    auto res = infer(model, bd.x, threshold);
    const int B = static_cast<int>(to - from);
    const int T = items[order[from]].features.frames;
    const int C = items[order[from]].roll.classes;
    for (int b = 0; b < B; ++b) {
      EventRoll pred(T, C, 0.0);
      EventRoll ref(T, C, 0.0);
      FrameMask mask(T);
      for (int t = 0; t < T; ++t) {
        mask[t] = bd.mask[static_cast<size_t>(b) * T + t];
        for (int c = 0; c < C; ++c) {
          pred.at(t, c) = res.roll.at(b * T + t, c);
          ref.at(t, c) = bd.y_bits[(static_cast<size_t>(b) * T + t) * C + c];
        }
      }
      counts += accumulate(ref, pred, mask);
    }
  }
  return score_from_counts(counts);
}

Score evaluate_checkpoint(const Checkpoint& ckpt, const Corpus& corpus, Split split,
                          double threshold, int batch_size) {
  ModelConfig mc = model_config_from_checkpoint(ckpt);
  if (mc.n_classes != corpus.params.n_classes)
    throw ConfigError(msg("evaluate: checkpoint has ", mc.n_classes,
                          " classes, corpus has ", corpus.params.n_classes));
  SedModel<float> model = SedModel<float>::init(mc, 0);
  Standardizer stz;
  restore_state(ckpt, model, nullptr, &stz);
  return evaluate_model(model, stz, corpus, split, threshold, batch_size);
}

AbResult ab_experiment(const TrainConfig& tc, const ModelConfig& mc,
                       const ScheduleParams& sp, const CorpusParams& cp, int n_seeds,
                       bool verbose) {
  if (n_seeds < 3) throw ConfigError(msg("ab: need at least 3 seeds, got ", n_seeds));
  AbResult result;
  for (int kind = 0; kind < 2; ++kind) {
    CorpusParams params = cp;
    params.kind = kind == 0 ? CorpusKind::Structured : CorpusKind::Unstructured;
    std::vector<Score> scores[2];
    for (int s = 0; s < n_seeds; ++s) {
      const uint64_t corpus_seed = Rng::derive(tc.seed, 500 + s);
      const Corpus corpus = make_corpus(params, corpus_seed);
      for (int sys = 0; sys < 2; ++sys) {
        ModelConfig model_cfg = mc;
        model_cfg.conditioning = sys == 0 ? Conditioning::Off : Conditioning::Scheduled;
        TrainConfig train_cfg = tc;
        train_cfg.seed = Rng::derive(tc.seed, 9000 + s * 2 + sys);
        TrainOutcome outcome = train(train_cfg, model_cfg, sp, corpus);
        const Score score = evaluate_checkpoint(outcome.best_checkpoint, corpus,
                                                Split::Test, tc.threshold, tc.batch_size);
        scores[sys].push_back(score);
        if (verbose)
          std::cerr << corpus_kind_name(params.kind) << " seed " << s << " "
                    << (sys == 0 ? "baseline" : "proposed") << ": F1="
                    << std::fixed << std::setprecision(4) << score.f1
                    << " ER=" << score.er << " (epochs=" << outcome.log.size()
                    << ", best=" << outcome.best_epoch << ")\n";
      }
    }
    for (int sys = 0; sys < 2; ++sys)
      result.cells[kind][sys] = aggregate_repeats(scores[sys]);
    result.f1_delta[kind] =
        result.cells[kind][1].f1_mean - result.cells[kind][0].f1_mean;
    result.er_delta[kind] =
        result.cells[kind][1].er_mean - result.cells[kind][0].er_mean;
  }
  return result;
}

std::string format_ab_table(const AbResult& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "corpus        system    F1(mean/std)     ER(mean/std)\n";
  const char* kinds[2] = {"structured", "unstructured"};
  const char* systems[2] = {"baseline", "proposed"};
  for (int k = 0; k < 2; ++k)
    for (int s = 0; s < 2; ++s) {
      const ScoreStats& st = r.cells[k][s];
      os << std::left << std::setw(14) << kinds[k] << std::setw(10) << systems[s]
         << std::right << st.f1_mean << "/" << st.f1_std << "    " << st.er_mean << "/"
         << st.er_std << "\n";
    }
  os << "\n";
  for (int k = 0; k < 2; ++k)
    os << kinds[k] << " deltas (proposed - baseline): F1 " << std::showpos
       << r.f1_delta[k] << ", ER " << r.er_delta[k] << std::noshowpos << "\n";
  return os.str();
}

std::string format_ab_kv(const AbResult& r) {
  std::ostringstream os;
  os << std::setprecision(10);
  const char* kinds[2] = {"structured", "unstructured"};
  const char* systems[2] = {"baseline", "proposed"};
  for (int k = 0; k < 2; ++k) {
    for (int s = 0; s < 2; ++s) {
      const ScoreStats& st = r.cells[k][s];
      os << kinds[k] << "." << systems[s] << ".f1_mean=" << st.f1_mean << "\n";
      os << kinds[k] << "." << systems[s] << ".f1_std=" << st.f1_std << "\n";
      os << kinds[k] << "." << systems[s] << ".er_mean=" << st.er_mean << "\n";
      os << kinds[k] << "." << systems[s] << ".er_std=" << st.er_std << "\n";
    }
    os << kinds[k] << ".f1_delta=" << r.f1_delta[k] << "\n";
    os << kinds[k] << ".er_delta=" << r.er_delta[k] << "\n";
  }
  return os.str();
}

}  // namespace sedkit
