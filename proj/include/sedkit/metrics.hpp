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

#include "sedkit/types.hpp"

namespace sedkit {

// Frame-based detection counts. Per frame f: S = min(FN_f, FP_f),
// D = FN_f - S, I = FP_f - S, N = active reference classes; totals are
// sums over frames.
struct FrameCounts {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  int64_t subs = 0;
  int64_t dels = 0;
  int64_t ins = 0;
  int64_t n_ref = 0;

  FrameCounts& operator+=(const FrameCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    subs += o.subs;
    dels += o.dels;
    ins += o.ins;
    n_ref += o.n_ref;
    return *this;
  }
  bool operator==(const FrameCounts&) const = default;
};

// Class-wise TP/FP/FN per frame with the S/D/I decomposition, accumulated
// over masked frames. Parallelizes over frames; counts merge by integer
// addition so the result is identical to the serial reference.
FrameCounts accumulate(const EventRoll& reference, const EventRoll& prediction,
                       const FrameMask& mask);

// Brute-force per-frame, per-class triple loop. Kept as the independent
// counting oracle for tests; do not "optimize" it.
FrameCounts accumulate_reference(const EventRoll& reference, const EventRoll& prediction,
                                 const FrameMask& mask);

// Micro-averaged F1 = 2TP / (2TP + FP + FN); 0 when the denominator is 0.
double f1_score(const FrameCounts& c);

// ER = (S + D + I) / N. With N = 0: 0 if there are no insertions,
// otherwise infinite (flagged, not silently zeroed).
struct ErrorRate {
  double value = 0.0;
  bool infinite = false;
};
ErrorRate error_rate(const FrameCounts& c);

struct Score {
  double f1 = 0.0;
  double er = 0.0;
  bool er_infinite = false;
  FrameCounts counts;
};

Score score_from_counts(const FrameCounts& c);

// Unweighted mean over folds/scenes. Counts are summed for reference.
Score aggregate_folds(const std::vector<Score>& folds);

// Mean and population standard deviation over training repeats.
struct ScoreStats {
  double f1_mean = 0.0, f1_std = 0.0;
  double er_mean = 0.0, er_std = 0.0;
  bool er_infinite = false;
  int n = 0;
};
ScoreStats aggregate_repeats(const std::vector<Score>& repeats);

// Aligned human-readable table.
std::string format_score_table(const Score& s);
// Machine-readable metric=value lines (includes the raw counts).
std::string format_score_kv(const Score& s);

}  // namespace sedkit
