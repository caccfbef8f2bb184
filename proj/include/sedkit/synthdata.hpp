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
#include <map>
#include <string>
#include <vector>

#include "sedkit/types.hpp"

namespace sedkit {

// Generative grammar for event sequences with temporal structure: a
// Markov chain over successive event classes, pairwise co-occurrence
// affinities, per-class durations and repetition behaviour.
struct EventGrammar {
  int n_classes = 0;
  std::vector<double> transition;    // [C x C], rows sum to 1
  std::vector<double> cooccurrence;  // [C x C], symmetric, in [0,1]
  std::vector<int> dur_min;          // frames
  std::vector<int> dur_max;
  std::vector<double> repeat_prob;
  int max_polyphony = 5;
  int gap_min = 0;  // frames between successive anchor events
  int gap_max = 6;

  void validate() const;
  double a(int from, int to) const { return transition[static_cast<size_t>(from) * n_classes + to]; }
  double p(int i, int j) const { return cooccurrence[static_cast<size_t>(i) * n_classes + j]; }
};

// Default grammar: a strongly cyclic successor chain plus a few
// co-occurring pairs. `strength` is the probability mass on the preferred
// successor.
EventGrammar default_grammar(int n_classes, double strength, int dur_min, int dur_max,
                             int max_polyphony);

struct GeneratedSequence {
  EventRoll roll;
  std::vector<int> anchor_classes;  // event classes in temporal order
};

// Walks the transition matrix for successions and the co-occurrence
// affinities for overlaps; durations/repetitions from the grammar;
// per-frame polyphony capped. anchor_classes holds the Markov chain of
// successive anchor events.
GeneratedSequence sample_structured(const EventGrammar& grammar, int frames, uint64_t seed);

// Class, onset and duration drawn independently and uniformly; polyphony
// capped by rejection. anchor_classes holds the placed event classes in
// onset order.
GeneratedSequence sample_unstructured(int n_classes, int frames, int n_events, int dur_min,
                                      int dur_max, int max_polyphony, uint64_t seed);

// Spectro-temporal template of one class over the mel bands.
struct ClassPattern {
  double center_band = 0.0;
  double bandwidth = 1.0;
  double amplitude = 1.0;
};

// Gaussian bumps with deliberately overlapping pairs, so that class
// identity is ambiguous from one frame alone.
std::vector<ClassPattern> default_patterns(int n_classes, int n_bands);

// Sum of active class templates per frame plus Gaussian noise, then log
// compression. Same frame count as the roll.
FeatureMatrix render_features(const EventRoll& roll, const std::vector<ClassPattern>& patterns,
                              double noise_level, uint64_t seed, int n_bands = 40);

// DCASE-style annotation lists: "onset<TAB>offset<TAB>label" in seconds.
// Rasterization marks frames whose center lies in [onset, offset).
void write_annotations(const EventRoll& roll, double hop_seconds,
                       const std::vector<std::string>& labels, const std::string& path);
EventRoll read_annotations(const std::string& path, int frames, int n_classes,
                           double hop_seconds, const std::map<std::string, int>& label_map);

enum class CorpusKind { Structured, Unstructured };
const char* corpus_kind_name(CorpusKind k);
CorpusKind corpus_kind_from_name(const std::string& name);

enum class Split { Train = 0, Val = 1, Test = 2 };
const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct CorpusParams {
  CorpusKind kind = CorpusKind::Structured;
  int n_sequences = 107;
  int seq_frames = 128;
  int n_classes = 6;
  int max_polyphony = 5;
  double noise_level = 0.1;
  double grammar_strength = 0.85;
  int events_per_seq = 12;  // unstructured density
  int dur_min = 6;
  int dur_max = 14;
  double split_train = 0.6;
  double split_val = 0.2;
  double split_test = 0.2;
  double frame_hop_seconds = 0.011;

  void validate() const;
};

struct CorpusSequence {
  FeatureMatrix features;  // raw (unstandardized) rendered features
  EventRoll roll;
  Split split = Split::Train;
};

struct Corpus {
  CorpusParams params;
  std::vector<std::string> labels;
  std::vector<CorpusSequence> sequences;

  int count(Split s) const;
};

// Disjoint train/val/test splits, deterministic under the seed; grammar
// and patterns are shared across splits.
Corpus make_corpus(const CorpusParams& params, uint64_t seed);

// On-disk layout: manifest.tsv lines "<feature file>\t<annotation file>\t<split>",
// labels.txt (one class name per line), meta.txt (key=value), plus the
// referenced feature caches and annotation TSVs.
void write_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

}  // namespace sedkit
