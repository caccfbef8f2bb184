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

// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any criterion fails. The A/B criterion is
// the long pole (a full experiment over 5 seeds).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "gradcheck.hpp"
#include "sedkit/config.hpp"
#include "sedkit/trainer.hpp"

using namespace sedkit;
using sedkit::testing::GradCheck;
using sedkit::testing::random_tensor;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& name, const std::function<std::string()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = true;
  try {
    detail = body();
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  if (!detail.empty() && detail.rfind("FAIL", 0) == 0) ok = false;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << number << ": " << name
            << " (" << std::fixed << std::setprecision(1) << secs << " s)";
  if (!detail.empty()) std::cout << " — " << detail;
  std::cout << "\n" << std::defaultfloat;
  std::cout.flush();
  if (!ok) ++g_failures;
}

std::string fail(const std::string& why) { return "FAIL: " + why; }

// ---------------------------------------------------------------- 1
std::string gradient_correctness() {
  int total_checked = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed * 31 + 1);

    // Individual layers.
    {
      auto a = random_tensor({3, 4}, rng);
      auto b = random_tensor({4, 2}, rng);
      GradCheck gc;
      gc.run({a, b}, [&](Tape<double>* tape) {
        return sum_all(tape, mul(tape, matmul(tape, a, b), matmul(tape, a, b)));
      });
      if (gc.failures) return fail("matmul seed " + std::to_string(seed) + ": " + gc.first_failure);
      total_checked += gc.checked;
    }
    {
      auto x = random_tensor({1, 2, 6, 8}, rng, 0.7);
      auto w = random_tensor({3, 2, 5, 5}, rng, 0.3);
      auto bias = random_tensor({3}, rng, 0.1);
      GradCheck gc;
      gc.run({x, w, bias}, [&](Tape<double>* tape) {
        auto y = conv2d(tape, x, w, bias, 2);
        return sum_all(tape, mul(tape, y, y));
      });
      if (gc.failures) return fail("conv2d seed " + std::to_string(seed) + ": " + gc.first_failure);
      total_checked += gc.checked;
    }
    {
      auto cell = GruCell<double>::init(5, 4, rng);
      auto x = random_tensor({2, 5}, rng, 1.0, false);
      GradCheck gc;
      gc.run({cell.wz, cell.wr, cell.wh, cell.uz, cell.ur, cell.uh, cell.bz, cell.br,
              cell.bh},
             [&](Tape<double>* tape) {
               auto h = cell.step(tape, x, Tensor<double>::zeros({2, 4}));
               h = cell.step(tape, x, h);
               return sum_all(tape, mul(tape, h, h));
             });
      if (gc.failures) return fail("gru seed " + std::to_string(seed) + ": " + gc.first_failure);
      total_checked += gc.checked;
    }
    {
      auto bn = BatchNorm2d<double>::init(2);
      auto x = random_tensor({2, 2, 3, 4}, rng);
      GradCheck gc;
      gc.run({x, bn.scale, bn.shift}, [&](Tape<double>* tape) {
        auto y = bn.forward(tape, x, true);
        return sum_all(tape, mul(tape, y, y));
      });
      if (gc.failures) return fail("batchnorm seed " + std::to_string(seed) + ": " + gc.first_failure);
      total_checked += gc.checked;
    }
    {
      auto fc = Linear<double>::init(4, 3, rng);
      auto x = random_tensor({2, 4}, rng, 1.0, false);
      GradCheck gc;
      gc.run({fc.w, fc.b}, [&](Tape<double>* tape) {
        auto y = sigmoid(tape, fc.forward(tape, x));
        return sum_all(tape, mul(tape, y, y));
      });
      if (gc.failures) return fail("linear seed " + std::to_string(seed) + ": " + gc.first_failure);
      total_checked += gc.checked;
    }

    // Composed tiny model: T=8, 4 filters, F''=4, C=2.
    {
      ModelConfig cfg;
      cfg.n_classes = 2;
      cfg.cnn_filters = 4;
      cfg.gru_hidden = 4;
      cfg.conditioning = seed % 2 ? Conditioning::GroundTruth : Conditioning::Off;
      cfg.dropout = 0.0;
      auto model = SedModel<double>::init(cfg, seed * 7 + 3);
      std::vector<double> xv(1 * 8 * 40);
      for (auto& v : xv) v = rng.uniform(-1.0, 1.0);
      auto x = Tensor<double>::from_data({1, 8, 40}, std::move(xv));
      std::vector<uint8_t> y(1 * 8 * 2);
      for (auto& v : y) v = rng.bernoulli(0.4) ? 1 : 0;
      std::vector<double> y_float(y.begin(), y.end());
      const std::vector<uint8_t> mask(8, 1);
      GradCheck gc;
      gc.run(model.trainable(), [&](Tape<double>* tape) {
        Rng drop(1);
        Tensor<double> probs;
        if (model.conditioned()) {
          ActivitySelector sel(ScheduleParams{}, SelectorMode::AlwaysTruth, 1);
          probs = forward_teacher_forced(tape, model, x, y_float, sel, true, drop);
        } else {
          probs = forward_baseline(tape, model, x, true, drop);
        }
        return bce_loss(tape, probs, y, mask);
      });
      if (gc.failures)
        return fail("composed model seed " + std::to_string(seed) + ": " + gc.first_failure);
      total_checked += gc.checked;
    }
  }
  return "checked " + std::to_string(total_checked) + " partial derivatives over 20 seeds";
}

// ---------------------------------------------------------------- 2
std::string schedule_exactness() {
  ScheduleParams p;
  p.gamma = 1.0 / 12.0;
  p.p_min = 0.05;
  p.p_max = 0.9;
  p.n_batches = 44;
  if (p_tf(0, p) != 0.9) return fail("p_tf(0) != 0.9");
  double prev = 1.0;
  for (int64_t i = 0; i <= 10000; ++i) {
    const double a = p_tf(i, p);
    const double b = p_tf_tanh(i, p);
    if (std::abs(a - b) > 1e-12)
      return fail("closed forms diverge at i=" + std::to_string(i));
    if (a > prev + 1e-15) return fail("not monotone at i=" + std::to_string(i));
    prev = a;
  }
  if (std::abs(p_tf(1000000, p) - 0.05) > 1e-12) return fail("limit clamp != p_min");
  // 0.5 crossing at i = 580 +- 1: p(579) >= 0.5 >= p(581).
  if (!(p_tf(579, p) > 0.5 && p_tf(581, p) < 0.5))
    return fail("0.5 crossing not at 580 +- 1");
  if (std::abs(p_tf(580, p) - 0.5) > 1e-3) return fail("p_tf(580) not ~0.5");
  return "tanh identity within 1e-12 over i=0..10^4; crossing at 580";
}

// ---------------------------------------------------------------- 3
std::string metric_oracle_equivalence() {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const int t = 1 + static_cast<int>(rng.uniform_int(20));
    const int c = 1 + static_cast<int>(rng.uniform_int(4));
    EventRoll ref(t, c, 0.01), pred(t, c, 0.01);
    for (auto& v : ref.values) v = rng.bernoulli(rng.uniform(0.0, 0.6)) ? 1 : 0;
    for (auto& v : pred.values) v = rng.bernoulli(rng.uniform(0.0, 0.6)) ? 1 : 0;
    FrameMask mask(t);
    for (auto& m : mask) m = rng.bernoulli(0.9) ? 1 : 0;
    if (!(accumulate(ref, pred, mask) == accumulate_reference(ref, pred, mask)))
      return fail("oracle mismatch at trial " + std::to_string(trial));
  }
  // The worked example.
  EventRoll ref(2, 3, 0.01), pred(2, 3, 0.01);
  ref.at(0, 0) = 1;
  ref.at(0, 1) = 1;
  ref.at(1, 0) = 1;
  pred.at(0, 0) = 1;
  pred.at(0, 2) = 1;
  const auto c = accumulate(ref, pred, full_mask(2));
  if (!(c.tp == 1 && c.fp == 1 && c.fn == 2 && c.subs == 1 && c.dels == 1 && c.ins == 0 &&
        c.n_ref == 3))
    return fail("worked example counts wrong");
  if (std::abs(f1_score(c) - 0.4) > 1e-12) return fail("worked example F1 != 0.4");
  if (std::abs(error_rate(c).value - 2.0 / 3.0) > 1e-12)
    return fail("worked example ER != 2/3");
  return "1000 random roll pairs match the brute-force count exactly";
}

// ---------------------------------------------------------------- 4
std::string conditioning_equivalence() {
  ModelConfig base_cfg;
  base_cfg.n_classes = 3;
  base_cfg.cnn_filters = 4;
  base_cfg.gru_hidden = 4;
  base_cfg.conditioning = Conditioning::Off;
  base_cfg.dropout = 0.0;
  auto base = SedModel<double>::init(base_cfg, 99);

  Rng xr(5);
  std::vector<double> xv(2 * 12 * 40);
  for (auto& v : xv) v = xr.uniform(-1.0, 1.0);
  auto x = Tensor<double>::from_data({2, 12, 40}, std::move(xv));
  Rng drop(1);
  const auto expect = forward_baseline<double>(nullptr, base, x, false, drop);

  std::vector<uint8_t> bits(2 * 12 * 3);
  for (auto& v : bits) v = xr.bernoulli(0.5) ? 1 : 0;
  std::vector<double> y_float(bits.begin(), bits.end());

  for (uint64_t sampler_seed : {1ull, 17ull, 400ull, 12345ull}) {
    // Widen into a conditioned model with zero conditioning rows.
    ModelConfig cond_cfg = base_cfg;
    cond_cfg.conditioning = Conditioning::Scheduled;
    auto cond = SedModel<double>::init(cond_cfg, 1);
    cond.block1 = base.block1;
    cond.block2 = base.block2;
    cond.block3 = base.block3;
    cond.fc = base.fc;
    cond.gru.uz = base.gru.uz;
    cond.gru.ur = base.gru.ur;
    cond.gru.uh = base.gru.uh;
    cond.gru.bz = base.gru.bz;
    cond.gru.br = base.gru.br;
    cond.gru.bh = base.gru.bh;
    auto widen = [&](Tensor<double>& dst, const Tensor<double>& src) {
      std::fill(dst.mutable_value().begin(), dst.mutable_value().end(), 0.0);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          dst.mutable_value()[static_cast<size_t>(i) * 4 + j] =
              src.value()[static_cast<size_t>(i) * 4 + j];
    };
    widen(cond.gru.wz, base.gru.wz);
    widen(cond.gru.wr, base.gru.wr);
    widen(cond.gru.wh, base.gru.wh);

    ScheduleParams sp;
    sp.n_batches = 7;
    ActivitySelector sel(sp, SelectorMode::Scheduled, sampler_seed);
    sel.begin_update(3);
    Rng drop2(1);
    const auto got =
        forward_teacher_forced<double>(nullptr, cond, x, y_float, sel, false, drop2);
    if (!(got.value() == expect.value()))
      return fail("outputs differ for sampler seed " + std::to_string(sampler_seed));
  }
  return "bitwise equal for 4 sampler seeds at 64-bit";
}

// ---------------------------------------------------------------- 5
std::string overfit_capacity() {
  CorpusParams cp;
  cp.n_sequences = 4;  // 2 train / 1 val / 1 test
  cp.split_train = 0.5;
  cp.split_val = 0.25;
  cp.split_test = 0.25;
  cp.seq_frames = 32;
  cp.n_classes = 2;
  cp.dur_min = 4;
  cp.dur_max = 10;
  cp.noise_level = 0.05;
  const auto corpus = make_corpus(cp, 77);

  ModelConfig mc;
  mc.n_classes = 2;
  mc.cnn_filters = 8;
  mc.gru_hidden = 16;
  mc.conditioning = Conditioning::Off;
  mc.dropout = 0.0;  // memorization run

  TrainConfig tc;
  tc.batch_size = 2;  // both sequences in one batch: N_b = 1
  tc.max_epochs = 2000;
  tc.patience = 2000;
  tc.learning_rate = 1e-3;
  tc.seed = 3;

  const auto outcome = train(tc, mc, ScheduleParams{}, corpus, 0);
  if (!(outcome.min_train_loss < 0.01 && outcome.updates_at_min_train_loss <= 2000))
    return fail(msg("train loss only reached ", outcome.min_train_loss, " after ",
                    outcome.updates_at_min_train_loss, " updates"));
  const auto self = evaluate_checkpoint(outcome.last_checkpoint, corpus, Split::Train,
                                        tc.threshold, tc.batch_size);
  if (!(self.f1 > 0.95)) return fail(msg("self-evaluation F1 = ", self.f1));
  std::ostringstream os;
  os << "loss " << outcome.min_train_loss << " at update "
     << outcome.updates_at_min_train_loss << ", self F1 " << self.f1;
  return os.str();
}

// ---------------------------------------------------------------- 6
std::string directional_reproduction() {
  RunConfig cfg = default_run_config();  // shipped desk profile
  const AbResult r = ab_experiment(cfg.train, cfg.model, cfg.schedule, cfg.corpus,
                                   cfg.ab_seeds, true);
  std::ostringstream os;
  os << "structured dF1 " << std::showpos << std::fixed << std::setprecision(4)
     << r.f1_delta[0] << " dER " << r.er_delta[0] << "; unstructured dF1 "
     << r.f1_delta[1] << std::noshowpos;
  if (!(r.f1_delta[0] >= 0.02)) return fail("structured F1 delta < +0.02 — " + os.str());
  if (!(r.er_delta[0] <= 0.0)) return fail("structured ER delta > 0 — " + os.str());
  if (!(r.f1_delta[1] <= 0.02)) return fail("unstructured F1 delta > +0.02 — " + os.str());
  return os.str();
}

// ---------------------------------------------------------------- 7
std::string determinism() {
  const char* bin = std::getenv("SEDKIT_BIN");
  if (!bin) return fail("SEDKIT_BIN not set");
  const fs::path dir = fs::temp_directory_path() / "sedkit_acceptance_det";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg_path = dir / "det.cfg";
  {
    std::ofstream out(cfg_path);
    out << "[corpus]\nn_sequences = 10\nseq_frames = 32\nn_classes = 3\n"
           "dur_min = 4\ndur_max = 10\nevents_per_seq = 5\n"
           "[model]\ncnn_filters = 4\ngru_hidden = 8\nconditioning = scheduled\n"
           "[train]\nbatch_size = 4\nmax_epochs = 5\npatience = 5\nseed = 31\n";
  }
  auto shell = [&](const std::string& cmd) {
    const int rc = std::system((std::string(bin) + " " + cmd + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  };

  for (int run = 1; run <= 2; ++run) {
    const fs::path base = dir / ("run" + std::to_string(run));
    if (shell("generate --kind structured --seed 5 --out " + (base / "data").string() +
              " --config " + cfg_path.string()) != 0)
      return fail("generate failed");
    if (shell("train --config " + cfg_path.string() + " --data " +
              (base / "data").string() + " --out " + (base / "model").string()) != 0)
      return fail("train failed");
    const int rc = std::system((std::string(bin) + " eval --checkpoint " +
                                (base / "model" / "checkpoint.sedm").string() + " --data " +
                                (base / "data").string() + " --split test > " +
                                (base / "report.txt").string() + " 2>/dev/null")
                                   .c_str());
    if (WEXITSTATUS(rc) != 0) return fail("eval failed");
  }

  for (const char* rel :
       {"model/train_log.txt", "model/checkpoint.sedm", "report.txt", "data/manifest.tsv"}) {
    if (slurp(dir / "run1" / rel) != slurp(dir / "run2" / rel))
      return fail(std::string("byte mismatch in ") + rel);
  }
  fs::remove_all(dir);
  return "logs, checkpoints and reports byte-identical across two runs";
}

// ---------------------------------------------------------------- 8
std::string round_trips() {
  // Annotation write/read inverse pair.
  const fs::path dir = fs::temp_directory_path() / "sedkit_acceptance_rt";
  fs::create_directories(dir);
  const std::string annot = (dir / "roll.tsv").string();
  const std::vector<std::string> labels = {"class00", "class01", "class02", "class03"};
  std::map<std::string, int> label_map;
  for (size_t i = 0; i < labels.size(); ++i) label_map[labels[i]] = static_cast<int>(i);
  Rng rng(15);
  for (int trial = 0; trial < 1000; ++trial) {
    const int t = 5 + static_cast<int>(rng.uniform_int(60));
    EventRoll roll(t, 4, 0.011);
    for (auto& v : roll.values) v = rng.bernoulli(0.3) ? 1 : 0;
    write_annotations(roll, 0.011, labels, annot);
    const auto back = read_annotations(annot, t, 4, 0.011, label_map);
    if (!(back == roll)) return fail("annotation round trip failed at trial " +
                                     std::to_string(trial));
  }

  // Checkpoint save/load inverse pair (struct-level every trial, byte-level
  // double save each trial).
  const std::string ck1 = (dir / "a.sedm").string();
  const std::string ck2 = (dir / "b.sedm").string();
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  };
  for (int trial = 0; trial < 1000; ++trial) {
    Checkpoint ck;
    ck.fingerprint = rng.next_u64();
    ck.update_index = static_cast<int64_t>(rng.uniform_int(uint64_t(1) << 40));
    const int n_records = 1 + static_cast<int>(rng.uniform_int(6));
    for (int r = 0; r < n_records; ++r) {
      CheckpointRecord rec;
      rec.name = "arr" + std::to_string(trial) + "_" + std::to_string(r);
      const int rank = 1 + static_cast<int>(rng.uniform_int(3));
      int64_t numel = 1;
      for (int d = 0; d < rank; ++d) {
        rec.dims.push_back(1 + static_cast<uint32_t>(rng.uniform_int(5)));
        numel *= rec.dims.back();
      }
      for (int64_t i = 0; i < numel; ++i)
        rec.data.push_back(static_cast<float>(rng.normal()));
      ck.records.push_back(std::move(rec));
    }
    save_checkpoint(ck1, ck);
    const auto loaded = load_checkpoint(ck1);
    if (!(loaded == ck)) return fail("checkpoint struct round trip failed");
    save_checkpoint(ck2, loaded);
    if (slurp(ck1) != slurp(ck2)) return fail("checkpoint byte round trip failed");
  }
  fs::remove_all(dir);
  return "1000 annotation and 1000 checkpoint round trips exact";
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number, e.g. `acceptance 1 3 8`.
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  const auto wanted = [&](int n) {
    return selected.empty() ||
           std::find(selected.begin(), selected.end(), n) != selected.end();
  };

  std::cout << "sedkit acceptance suite\n";
  if (wanted(1))
    criterion(1, "gradient correctness (layers + composed tiny model)", gradient_correctness);
  if (wanted(2)) criterion(2, "schedule exactness", schedule_exactness);
  if (wanted(3)) criterion(3, "metric oracle equivalence", metric_oracle_equivalence);
  if (wanted(4))
    criterion(4, "conditioning equivalence (zeroed columns, bitwise)", conditioning_equivalence);
  if (wanted(5)) criterion(5, "overfit capacity", overfit_capacity);
  if (wanted(6))
    criterion(6, "directional reproduction of the structured/unstructured contrast",
              directional_reproduction);
  if (wanted(7)) criterion(7, "determinism (byte-identical runs)", determinism);
  if (wanted(8)) criterion(8, "round trips (annotations, checkpoints)", round_trips);
  if (g_failures) {
    std::cout << g_failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
