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

#include "sedkit/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sedkit/features.hpp"
#include "sedkit/rng.hpp"

namespace fs = std::filesystem;

namespace sedkit {

void EventGrammar::validate() const {
  if (n_classes < 1) throw ConfigError("grammar: n_classes must be >= 1");
  if (static_cast<int>(transition.size()) != n_classes * n_classes ||
      static_cast<int>(cooccurrence.size()) != n_classes * n_classes)
    throw ConfigError("grammar: matrix sizes must be C x C");
  for (int i = 0; i < n_classes; ++i) {
    double row = 0.0;
    for (int j = 0; j < n_classes; ++j) {
      row += a(i, j);
      if (std::abs(p(i, j) - p(j, i)) > 1e-9)
        throw ConfigError(msg("grammar: co-occurrence not symmetric at (", i, ",", j, ")"));
      if (p(i, j) < 0.0 || p(i, j) > 1.0)
        throw ConfigError("grammar: co-occurrence entries must be in [0,1]");
    }
    if (std::abs(row - 1.0) > 1e-9)
      throw ConfigError(msg("grammar: transition row ", i, " sums to ", row));
  }
  for (int c = 0; c < n_classes; ++c) {
    if (dur_min[c] < 1 || dur_max[c] < dur_min[c])
      throw ConfigError(msg("grammar: bad duration range for class ", c));
    if (repeat_prob[c] < 0.0 || repeat_prob[c] > 1.0)
      throw ConfigError(msg("grammar: bad repeat probability for class ", c));
  }
  if (max_polyphony < 1) throw ConfigError("grammar: max_polyphony must be >= 1");
  if (gap_min < 0 || gap_max < gap_min) throw ConfigError("grammar: bad gap range");
}

EventGrammar default_grammar(int n_classes, double strength, int dur_min, int dur_max,
                             int max_polyphony) {
  EventGrammar g;
  g.n_classes = n_classes;
  g.transition.assign(static_cast<size_t>(n_classes) * n_classes, 0.0);
  g.cooccurrence.assign(static_cast<size_t>(n_classes) * n_classes, 0.0);
  const double rest = n_classes > 1 ? (1.0 - strength) / (n_classes - 1) : 0.0;
  for (int i = 0; i < n_classes; ++i)
    for (int j = 0; j < n_classes; ++j)
      g.transition[static_cast<size_t>(i) * n_classes + j] =
          (j == (i + 1) % n_classes) ? (n_classes > 1 ? strength : 1.0) : rest;
  // Co-occurrence between members of adjacent template pairs. The value
  // is the same for both members of a pair, so overlaps reveal which
  // pair is active but never which member.
  const int n_pairs = (n_classes + 1) / 2;
  for (int i = 0; i < n_classes; ++i)
    for (int j = 0; j < n_classes; ++j) {
      const int pi = i / 2, pj = j / 2;
      if (pi != pj && (std::abs(pi - pj) == 1 || std::abs(pi - pj) == n_pairs - 1))
        g.cooccurrence[static_cast<size_t>(i) * n_classes + j] = 0.15;
    }
  g.dur_min.assign(n_classes, dur_min);
  g.dur_max.assign(n_classes, dur_max);
  g.repeat_prob.assign(n_classes, 0.15);
  g.max_polyphony = max_polyphony;
  g.gap_min = 0;
  g.gap_max = 2;
  return g;
}

namespace {

int sample_categorical(const double* probs, int n, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return n - 1;
}

// Activates [onset, onset+dur) for class c, skipping frames already at the
// polyphony cap.
void place_event(EventRoll& roll, int c, int onset, int dur, int cap) {
  for (int t = onset; t < std::min(roll.frames, onset + dur); ++t) {
    if (roll.at(t, c)) continue;
    if (roll.active_count(t) >= cap) continue;
    roll.at(t, c) = 1;
  }
}

}  // namespace

GeneratedSequence sample_structured(const EventGrammar& grammar, int frames, uint64_t seed) {
  grammar.validate();
  Rng rng(seed);
  GeneratedSequence out;
  out.roll = EventRoll(frames, grammar.n_classes, 0.0);
  const int C = grammar.n_classes;

  int pos = 0;
  int k = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(C)));
  while (pos < frames) {
    const int dur = static_cast<int>(
        rng.uniform_int(static_cast<int64_t>(grammar.dur_min[k]), grammar.dur_max[k]));
    place_event(out.roll, k, pos, dur, grammar.max_polyphony);
    out.anchor_classes.push_back(k);

    // Overlapping companions drawn from the co-occurrence affinities.
    for (int j = 0; j < C; ++j) {
      if (j == k) continue;
      const double pj = grammar.p(k, j);
      if (pj <= 0.0 || !rng.bernoulli(pj)) continue;
      const int odur = static_cast<int>(
          rng.uniform_int(static_cast<int64_t>(grammar.dur_min[j]), grammar.dur_max[j]));
      const int oston = pos + static_cast<int>(rng.uniform_int(
                                  static_cast<uint64_t>(std::max(1, dur / 2))));
      place_event(out.roll, j, oston, odur, grammar.max_polyphony);
    }

    int gap;
    if (rng.bernoulli(grammar.repeat_prob[k])) {
      // Intra-event repetition: same class again after a short pause.
      gap = static_cast<int>(rng.uniform_int(static_cast<int64_t>(1),
                                             std::max(1, grammar.gap_max)));
    } else {
      k = sample_categorical(grammar.transition.data() + static_cast<size_t>(k) * C, C, rng);
      gap = static_cast<int>(
          rng.uniform_int(static_cast<int64_t>(grammar.gap_min), grammar.gap_max));
    }
    pos += dur + gap;
  }
  return out;
}

GeneratedSequence sample_unstructured(int n_classes, int frames, int n_events, int dur_min,
                                      int dur_max, int max_polyphony, uint64_t seed) {
  Rng rng(seed);
  GeneratedSequence out;
  out.roll = EventRoll(frames, n_classes, 0.0);
  std::vector<std::pair<int, int>> placed;  // (onset, class), placement order
  for (int e = 0; e < n_events; ++e) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const int c = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n_classes)));
      const int onset = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(frames)));
      const int dur = static_cast<int>(
          rng.uniform_int(static_cast<int64_t>(dur_min), dur_max));
      bool fits = true;
      for (int t = onset; t < std::min(frames, onset + dur); ++t) {
        if (!out.roll.at(t, c) && out.roll.active_count(t) >= max_polyphony) {
          fits = false;
          break;
        }
      }
      if (!fits) continue;  // rejected: redraw class, onset and duration
      for (int t = onset; t < std::min(frames, onset + dur); ++t) out.roll.at(t, c) = 1;
      placed.emplace_back(onset, c);
      break;
    }
  }
  std::stable_sort(placed.begin(), placed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [onset, c] : placed) out.anchor_classes.push_back(c);
  return out;
}

std::vector<ClassPattern> default_patterns(int n_classes, int n_bands) {
  // Classes come in pairs that share one template: pair identity is
  // audible, member identity is not. Temporal context, not spectral
  // shape, is what separates the two members of a pair.
  std::vector<ClassPattern> out(n_classes);
  const int n_pairs = (n_classes + 1) / 2;
  for (int c = 0; c < n_classes; ++c) {
    const int pair = c / 2;
    out[c].center_band = (pair + 0.5) * n_bands / n_pairs;
    out[c].bandwidth = 3.0;
    out[c].amplitude = 1.0;
  }
  return out;
}

FeatureMatrix render_features(const EventRoll& roll, const std::vector<ClassPattern>& patterns,
                              double noise_level, uint64_t seed, int n_bands) {
  if (static_cast<int>(patterns.size()) != roll.classes)
    throw ConfigError(msg("render: ", patterns.size(), " patterns for ", roll.classes,
                          " classes"));
  Rng rng(seed);
  FeatureMatrix out(roll.frames, n_bands, roll.frame_hop_seconds);

  // Pre-compute per-class band templates.
  std::vector<double> tmpl(static_cast<size_t>(roll.classes) * n_bands);
  for (int c = 0; c < roll.classes; ++c)
    for (int b = 0; b < n_bands; ++b) {
      const double d = (b - patterns[c].center_band) / patterns[c].bandwidth;
      tmpl[static_cast<size_t>(c) * n_bands + b] =
          patterns[c].amplitude * std::exp(-0.5 * d * d);
    }

  // Per-(class, frame) amplitude envelope: short attack at each run onset.
  std::vector<double> env(static_cast<size_t>(roll.frames) * roll.classes, 0.0);
  for (int c = 0; c < roll.classes; ++c) {
    int run = 0;
    for (int t = 0; t < roll.frames; ++t) {
      run = roll.at(t, c) ? run + 1 : 0;
      if (run > 0) env[static_cast<size_t>(t) * roll.classes + c] = std::min(1.0, run / 3.0);
    }
  }

  for (int t = 0; t < roll.frames; ++t) {
    for (int b = 0; b < n_bands; ++b) {
      double energy = 0.0;
      for (int c = 0; c < roll.classes; ++c) {
        if (!roll.at(t, c)) continue;
        energy += env[static_cast<size_t>(t) * roll.classes + c] *
                  tmpl[static_cast<size_t>(c) * n_bands + b];
      }
      energy += noise_level * rng.normal();
      out.at(t, b) = static_cast<float>(std::log(std::max(0.0, energy) + 1e-10));
    }
  }
  return out;
}

void write_annotations(const EventRoll& roll, double hop_seconds,
                       const std::vector<std::string>& labels, const std::string& path) {
  if (static_cast<int>(labels.size()) != roll.classes)
    throw ConfigError(msg("annotations: ", labels.size(), " labels for ", roll.classes,
                          " classes"));
  struct Event {
    double onset, offset;
    int c;
  };
  std::vector<Event> events;
  for (int c = 0; c < roll.classes; ++c) {
    int start = -1;
    for (int t = 0; t <= roll.frames; ++t) {
      const bool active = t < roll.frames && roll.at(t, c) != 0;
      if (active && start < 0) start = t;
      if (!active && start >= 0) {
        events.push_back({start * hop_seconds, t * hop_seconds, c});
        start = -1;
      }
    }
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.onset != b.onset) return a.onset < b.onset;
    return a.c < b.c;
  });
  std::ofstream out(path);
  if (!out) throw ParseError(msg("annotations: cannot write '", path, "'"));
  out << std::fixed << std::setprecision(6);
  for (const Event& e : events)
    out << e.onset << "\t" << e.offset << "\t" << labels[e.c] << "\n";
}

EventRoll read_annotations(const std::string& path, int frames, int n_classes,
                           double hop_seconds, const std::map<std::string, int>& label_map) {
  std::ifstream in(path);
  if (!in) throw ParseError(msg("annotations: cannot open '", path, "'"));
  EventRoll roll(frames, n_classes, hop_seconds);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t tab1 = line.find('\t');
    const size_t tab2 = tab1 == std::string::npos ? std::string::npos
                                                  : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos)
      throw ParseError(msg("annotations: line ", line_no,
                           ": expected onset<TAB>offset<TAB>label"));
    double onset, offset;
    try {
      size_t used = 0;
      onset = std::stod(line.substr(0, tab1), &used);
      if (used != tab1) throw std::invalid_argument("trailing");
      const std::string ostr = line.substr(tab1 + 1, tab2 - tab1 - 1);
      offset = std::stod(ostr, &used);
      if (used != ostr.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(msg("annotations: line ", line_no, ": bad onset/offset"));
    }
    if (!(onset < offset))
      throw ParseError(msg("annotations: line ", line_no, ": onset ", onset,
                           " not before offset ", offset));
    const std::string label = line.substr(tab2 + 1);
    auto it = label_map.find(label);
    if (it == label_map.end()) {
      std::ostringstream known;
      for (const auto& [name, idx] : label_map) known << " '" << name << "'";
      throw ParseError(msg("annotations: line ", line_no, ": unknown label '", label,
                           "'; known labels:", known.str()));
    }
    const int c = it->second;
    for (int t = 0; t < frames; ++t) {
      const double center = (t + 0.5) * hop_seconds;
      if (center >= onset && center < offset) roll.at(t, c) = 1;
    }
  }
  return roll;
}

const char* corpus_kind_name(CorpusKind k) {
  return k == CorpusKind::Structured ? "structured" : "unstructured";
}

CorpusKind corpus_kind_from_name(const std::string& name) {
  if (name == "structured") return CorpusKind::Structured;
  if (name == "unstructured") return CorpusKind::Unstructured;
  throw ConfigError(msg("unknown corpus kind '", name,
                        "' (expected structured|unstructured)"));
}

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw ConfigError(msg("unknown split '", name, "' (expected train|val|test)"));
}

void CorpusParams::validate() const {
  if (n_sequences < 1) throw ConfigError("corpus: n_sequences must be >= 1");
  if (seq_frames < 1) throw ConfigError("corpus: seq_frames must be >= 1");
  if (n_classes < 1) throw ConfigError("corpus: n_classes must be >= 1");
  if (std::abs(split_train + split_val + split_test - 1.0) > 1e-9)
    throw ConfigError(msg("corpus: split ratios sum to ",
                          split_train + split_val + split_test, ", expected 1"));
  if (dur_min < 1 || dur_max < dur_min) throw ConfigError("corpus: bad duration range");
  if (frame_hop_seconds <= 0.0) throw ConfigError("corpus: frame hop must be > 0");
}

int Corpus::count(Split s) const {
  int n = 0;
  for (const auto& seq : sequences)
    if (seq.split == s) ++n;
  return n;
}

Corpus make_corpus(const CorpusParams& params, uint64_t seed) {
  params.validate();
  const int n = params.n_sequences;
  const int n_train = static_cast<int>(std::llround(n * params.split_train));
  const int n_val = static_cast<int>(std::llround(n * params.split_val));
  const int n_test = n - n_train - n_val;
  if (n_train < 1 || n_val < 1 || n_test < 1)
    throw ConfigError(msg("corpus: ", n, " sequences split ", n_train, "/", n_val, "/",
                          n_test, "; every split needs at least one sequence"));

  Corpus corpus;
  corpus.params = params;
  for (int c = 0; c < params.n_classes; ++c)
    corpus.labels.push_back(msg("class", c < 10 ? "0" : "", c));

  const EventGrammar grammar =
      default_grammar(params.n_classes, params.grammar_strength, params.dur_min,
                      params.dur_max, params.max_polyphony);
  const auto patterns = default_patterns(params.n_classes, 40);

  corpus.sequences.reserve(n);
  for (int i = 0; i < n; ++i) {
    const uint64_t seq_seed = Rng::derive(seed, 1000 + i);
    CorpusSequence seq;
    if (params.kind == CorpusKind::Structured) {
      seq.roll = sample_structured(grammar, params.seq_frames, seq_seed).roll;
    } else {
      seq.roll = sample_unstructured(params.n_classes, params.seq_frames,
                                     params.events_per_seq, params.dur_min,
                                     params.dur_max, params.max_polyphony, seq_seed)
                     .roll;
    }
    seq.roll.frame_hop_seconds = params.frame_hop_seconds;
    seq.features = render_features(seq.roll, patterns, params.noise_level,
                                   Rng::derive(seq_seed, 7), 40);
    seq.features.frame_hop_seconds = params.frame_hop_seconds;
    seq.split = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
    corpus.sequences.push_back(std::move(seq));
  }
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "features");
  fs::create_directories(fs::path(dir) / "annotations");

  std::ofstream labels(fs::path(dir) / "labels.txt");
  for (const auto& l : corpus.labels) labels << l << "\n";

  std::ofstream meta(fs::path(dir) / "meta.txt");
  meta << std::setprecision(17);
  meta << "kind=" << corpus_kind_name(corpus.params.kind) << "\n";
  meta << "n_classes=" << corpus.params.n_classes << "\n";
  meta << "seq_frames=" << corpus.params.seq_frames << "\n";
  meta << "frame_hop_seconds=" << corpus.params.frame_hop_seconds << "\n";

  std::ofstream manifest(fs::path(dir) / "manifest.tsv");
  for (size_t i = 0; i < corpus.sequences.size(); ++i) {
    std::ostringstream stem;
    stem << "seq" << std::setw(4) << std::setfill('0') << i;
    const std::string feat = "features/" + stem.str() + ".sedf";
    const std::string annot = "annotations/" + stem.str() + ".tsv";
    write_feature_cache((fs::path(dir) / feat).string(), corpus.sequences[i].features);
    write_annotations(corpus.sequences[i].roll, corpus.params.frame_hop_seconds,
                      corpus.labels, (fs::path(dir) / annot).string());
    manifest << feat << "\t" << annot << "\t" << split_name(corpus.sequences[i].split)
             << "\n";
  }
}

namespace {
std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(msg("cannot open '", path, "'"));
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(msg(path, ": bad line '", line, "'"));
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}
}  // namespace

Corpus load_corpus(const std::string& dir) {
  Corpus corpus;

  std::ifstream labels_in(fs::path(dir) / "labels.txt");
  if (!labels_in) throw ParseError(msg("corpus: missing labels.txt in '", dir, "'"));
  std::string line;
  while (std::getline(labels_in, line))
    if (!line.empty()) corpus.labels.push_back(line);

  const auto meta = read_kv_file((fs::path(dir) / "meta.txt").string());
  corpus.params.kind = corpus_kind_from_name(meta.at("kind"));
  corpus.params.n_classes = std::stoi(meta.at("n_classes"));
  corpus.params.seq_frames = std::stoi(meta.at("seq_frames"));
  corpus.params.frame_hop_seconds = std::stod(meta.at("frame_hop_seconds"));
  if (static_cast<int>(corpus.labels.size()) != corpus.params.n_classes)
    throw ParseError(msg("corpus: labels.txt has ", corpus.labels.size(),
                         " labels, meta says ", corpus.params.n_classes));

  std::map<std::string, int> label_map;
  for (size_t i = 0; i < corpus.labels.size(); ++i)
    label_map[corpus.labels[i]] = static_cast<int>(i);

  std::ifstream manifest(fs::path(dir) / "manifest.tsv");
  if (!manifest) throw ParseError(msg("corpus: missing manifest.tsv in '", dir, "'"));
  int line_no = 0;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t tab1 = line.find('\t');
    const size_t tab2 = tab1 == std::string::npos ? std::string::npos
                                                  : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos)
      throw ParseError(msg("manifest line ", line_no,
                           ": expected features<TAB>annotations<TAB>split"));
    CorpusSequence seq;
    seq.features = read_feature_cache((fs::path(dir) / line.substr(0, tab1)).string());
    seq.features.frame_hop_seconds = corpus.params.frame_hop_seconds;
    seq.roll = read_annotations(
        (fs::path(dir) / line.substr(tab1 + 1, tab2 - tab1 - 1)).string(),
        seq.features.frames, corpus.params.n_classes, corpus.params.frame_hop_seconds,
        label_map);
    seq.split = split_from_name(line.substr(tab2 + 1));
    corpus.sequences.push_back(std::move(seq));
  }
  return corpus;
}

}  // namespace sedkit
