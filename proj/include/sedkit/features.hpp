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

#include <string>
#include <vector>

#include "sedkit/types.hpp"

namespace sedkit {

// Mono audio in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 0;
};

// RIFF/WAVE PCM16 reader; stereo is downmixed by averaging. Samples scale
// by 1/32768.
AudioClip read_wav(const std::string& path);

// PCM16 mono writer (tests and tooling).
void write_wav(const std::string& path, const AudioClip& clip);

// Triangular mel filterbank, peak value 1, HTK mel scale.
struct MelFilterbank {
  int n_mels = 0;
  int n_bins = 0;
  int sample_rate = 0;
  std::vector<float> weights;         // [n_mels x n_bins]
  std::vector<double> breakpoints_hz; // n_mels + 2 triangle corners
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// n_mels+2 equally spaced mel points between 0 and sr/2; triangles over
// consecutive triples. Every filter must cover at least one FFT bin.
MelFilterbank build_mel_filterbank(int sample_rate, int n_bins, int n_mels = 40);

// STFT parameters implied by the clip: 22 ms Hamming window, 50% overlap,
// DFT length equal to the window length (no zero padding).
int stft_window_length(int sample_rate);

// Log mel-band energies: per frame, Hamming window, |DFT|^2, filterbank
// projection, log(x + 1e-10).
FeatureMatrix stft_logmel(const AudioClip& clip, const MelFilterbank& fb);

// One-sided power spectrum |DFT|^2 of one already-windowed frame,
// arbitrary length (exposed for spectral sanity checks).
std::vector<double> power_spectrum(const std::vector<double>& frame);

// Per-band standardization statistics fitted on the training split.
struct Standardizer {
  std::vector<float> mean;
  std::vector<float> stddev;  // floored at 1e-8
};

Standardizer fit_standardizer(const std::vector<const FeatureMatrix*>& training);
void apply_standardizer(const Standardizer& s, FeatureMatrix& m);
void invert_standardizer(const Standardizer& s, FeatureMatrix& m);

// Fixed-length sequencing: full segments plus one zero-padded tail segment
// whose padding frames are masked out.
struct Segment {
  FeatureMatrix features;
  EventRoll roll;
  FrameMask mask;
};

std::vector<Segment> segment_sequences(const FeatureMatrix& features,
                                       const EventRoll& roll, int seq_frames);

// Feature cache: magic "SEDF", u32 version, u32 T, u32 F, then row-major
// little-endian 32-bit floats.
void write_feature_cache(const std::string& path, const FeatureMatrix& m);
FeatureMatrix read_feature_cache(const std::string& path);

}  // namespace sedkit
