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
#include <vector>

#include "sedkit/errors.hpp"

namespace sedkit {

// Real matrix [T x F] of per-frame features, row-major.
struct FeatureMatrix {
  int frames = 0;
  int bands = 0;
  double frame_hop_seconds = 0.0;
  std::vector<float> values;  // frames * bands

  FeatureMatrix() = default;
  FeatureMatrix(int t, int f, double hop)
      : frames(t), bands(f), frame_hop_seconds(hop),
        values(static_cast<size_t>(t) * f, 0.0f) {}

  float& at(int t, int f) { return values[static_cast<size_t>(t) * bands + f]; }
  float at(int t, int f) const { return values[static_cast<size_t>(t) * bands + f]; }
};

// Binary activity matrix [T x C], row-major, entries in {0,1}.
struct EventRoll {
  int frames = 0;
  int classes = 0;
  double frame_hop_seconds = 0.0;
  std::vector<uint8_t> values;  // frames * classes

  EventRoll() = default;
  EventRoll(int t, int c, double hop)
      : frames(t), classes(c), frame_hop_seconds(hop),
        values(static_cast<size_t>(t) * c, 0) {}

  uint8_t& at(int t, int c) { return values[static_cast<size_t>(t) * classes + c]; }
  uint8_t at(int t, int c) const { return values[static_cast<size_t>(t) * classes + c]; }

  int active_count(int t) const {
    int n = 0;
    for (int c = 0; c < classes; ++c) n += at(t, c);
    return n;
  }

  bool operator==(const EventRoll& o) const {
    return frames == o.frames && classes == o.classes && values == o.values;
  }
};

// Per-frame validity flags; padded frames are 0 and excluded from loss
// and metrics.
using FrameMask = std::vector<uint8_t>;

inline FrameMask full_mask(int frames) { return FrameMask(frames, 1); }

}  // namespace sedkit
