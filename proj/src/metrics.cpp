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

#include "sedkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace sedkit {

namespace {
void check_pair(const EventRoll& ref, const EventRoll& pred, const FrameMask& mask) {
  if (ref.frames != pred.frames || ref.classes != pred.classes)
    throw ShapeError(msg("metrics: reference ", ref.frames, "x", ref.classes,
                         " vs prediction ", pred.frames, "x", pred.classes));
  if (static_cast<int>(mask.size()) != ref.frames)
    throw ShapeError(msg("metrics: mask has ", mask.size(), " frames, rolls have ",
                         ref.frames));
}
}  // namespace

FrameCounts accumulate(const EventRoll& reference, const EventRoll& prediction,
                       const FrameMask& mask) {
  check_pair(reference, prediction, mask);
  const int T = reference.frames, C = reference.classes;
  int64_t tp = 0, fp = 0, fn = 0, subs = 0, dels = 0, ins = 0, n_ref = 0;
#pragma omp parallel for schedule(static) reduction(+ : tp, fp, fn, subs, dels, ins, n_ref)
  for (int t = 0; t < T; ++t) {
    if (!mask[t]) continue;
    const uint8_t* r = reference.values.data() + static_cast<size_t>(t) * C;
    const uint8_t* p = prediction.values.data() + static_cast<size_t>(t) * C;
    int tp_f = 0, fp_f = 0, fn_f = 0, act = 0;
    for (int c = 0; c < C; ++c) {
      tp_f += r[c] & p[c];
      fp_f += (1 - r[c]) & p[c];
      fn_f += r[c] & (1 - p[c]);
      act += r[c];
    }
    const int s = std::min(fn_f, fp_f);
    tp += tp_f;
    fp += fp_f;
    fn += fn_f;
    subs += s;
    dels += fn_f - s;
    ins += fp_f - s;
    n_ref += act;
  }
  FrameCounts c;
  c.tp = tp;
  c.fp = fp;
  c.fn = fn;
  c.subs = subs;
  c.dels = dels;
  c.ins = ins;
  c.n_ref = n_ref;
  return c;
}

FrameCounts accumulate_reference(const EventRoll& reference, const EventRoll& prediction,
                                 const FrameMask& mask) {
  check_pair(reference, prediction, mask);
  FrameCounts total;
  for (int t = 0; t < reference.frames; ++t) {
    if (!mask[t]) continue;
    int64_t frame_fn = 0, frame_fp = 0;
    for (int c = 0; c < reference.classes; ++c) {
      const bool r = reference.at(t, c) != 0;
      const bool p = prediction.at(t, c) != 0;
      if (r && p) total.tp += 1;
      if (!r && p) {
        total.fp += 1;
        frame_fp += 1;
      }
      if (r && !p) {
        total.fn += 1;
        frame_fn += 1;
      }
      if (r) total.n_ref += 1;
    }
    const int64_t s = std::min(frame_fn, frame_fp);
    total.subs += s;
    total.dels += frame_fn - s;
    total.ins += frame_fp - s;
  }
  return total;
}

double f1_score(const FrameCounts& c) {
  const int64_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 0.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

ErrorRate error_rate(const FrameCounts& c) {
  ErrorRate er;
  if (c.n_ref == 0) {
    if (c.ins == 0) {
      er.value = 0.0;
    } else {
      er.value = std::numeric_limits<double>::infinity();
      er.infinite = true;
    }
    return er;
  }
  er.value = static_cast<double>(c.subs + c.dels + c.ins) / static_cast<double>(c.n_ref);
  return er;
}

Score score_from_counts(const FrameCounts& c) {
  Score s;
  s.counts = c;
  s.f1 = f1_score(c);
  const ErrorRate er = error_rate(c);
  s.er = er.value;
  s.er_infinite = er.infinite;
  return s;
}

Score aggregate_folds(const std::vector<Score>& folds) {
  if (folds.empty()) throw UsageError("aggregate: no fold reports");
  Score out;
  for (const Score& s : folds) {
    out.f1 += s.f1;
    out.er += s.er;
    out.er_infinite = out.er_infinite || s.er_infinite;
    out.counts += s.counts;
  }
  out.f1 /= static_cast<double>(folds.size());
  out.er /= static_cast<double>(folds.size());
  return out;
}

ScoreStats aggregate_repeats(const std::vector<Score>& repeats) {
  if (repeats.empty()) throw UsageError("aggregate: no repeat reports");
  ScoreStats st;
  st.n = static_cast<int>(repeats.size());
  for (const Score& s : repeats) {
    st.f1_mean += s.f1;
    st.er_mean += s.er;
    st.er_infinite = st.er_infinite || s.er_infinite;
  }
  st.f1_mean /= st.n;
  st.er_mean /= st.n;
  double f1_sq = 0.0, er_sq = 0.0;
  for (const Score& s : repeats) {
    f1_sq += (s.f1 - st.f1_mean) * (s.f1 - st.f1_mean);
    er_sq += (s.er - st.er_mean) * (s.er - st.er_mean);
  }
  st.f1_std = std::sqrt(f1_sq / st.n);
  st.er_std = std::sqrt(er_sq / st.n);
  return st;
}

namespace {
std::string er_string(const Score& s) {
  if (s.er_infinite) return "inf";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << s.er;
  return os.str();
}
}  // namespace

std::string format_score_table(const Score& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "metric      value\n";
  os << "F1          " << s.f1 << "\n";
  os << "ER          " << er_string(s) << (s.er_infinite ? "  (N=0 with insertions)" : "")
     << "\n";
  os << "counts      TP=" << s.counts.tp << " FP=" << s.counts.fp
     << " FN=" << s.counts.fn << " S=" << s.counts.subs << " D=" << s.counts.dels
     << " I=" << s.counts.ins << " N=" << s.counts.n_ref << "\n";
  return os.str();
}

std::string format_score_kv(const Score& s) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "f1=" << s.f1 << "\n";
  if (s.er_infinite)
    os << "er=inf\n";
  else
    os << "er=" << s.er << "\n";
  os << "er_flagged=" << (s.er_infinite ? 1 : 0) << "\n";
  os << "tp=" << s.counts.tp << "\n";
  os << "fp=" << s.counts.fp << "\n";
  os << "fn=" << s.counts.fn << "\n";
  os << "substitutions=" << s.counts.subs << "\n";
  os << "deletions=" << s.counts.dels << "\n";
  os << "insertions=" << s.counts.ins << "\n";
  os << "n_ref=" << s.counts.n_ref << "\n";
  return os.str();
}

}  // namespace sedkit
