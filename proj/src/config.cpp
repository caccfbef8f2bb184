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

#include "sedkit/config.hpp"

#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <vector>

namespace sedkit {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(msg("config: '", key, "' expects a boolean, got '", v, "'"));
}

int parse_int(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(msg("config: '", key, "' expects an integer, got '", v, "'"));
  }
}

uint64_t parse_u64(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    const uint64_t out = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(msg("config: '", key, "' expects an unsigned integer, got '", v, "'"));
  }
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(msg("config: '", key, "' expects a number, got '", v, "'"));
  }
}

std::array<std::pair<int, int>, 3> parse_pool_plan(const std::string& v,
                                                   const std::string& key) {
  std::array<std::pair<int, int>, 3> pools;
  std::istringstream is(v);
  std::string part;
  int i = 0;
  while (std::getline(is, part, ',')) {
    if (i >= 3) throw ConfigError(msg("config: '", key, "' expects 3 pools"));
    const size_t x = part.find('x');
    if (x == std::string::npos)
      throw ConfigError(msg("config: '", key, "' expects TxF entries, got '", part, "'"));
    pools[i] = {parse_int(trim(part.substr(0, x)), key),
                parse_int(trim(part.substr(x + 1)), key)};
    ++i;
  }
  if (i != 3) throw ConfigError(msg("config: '", key, "' expects 3 pools, got ", i));
  return pools;
}

std::string pool_plan_string(const std::array<std::pair<int, int>, 3>& pools) {
  std::ostringstream os;
  for (int i = 0; i < 3; ++i) {
    if (i) os << ",";
    os << pools[i].first << "x" << pools[i].second;
  }
  return os.str();
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// Key table: dotted name, setter, getter (canonical form), help text.
struct KeyDef {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
  const char* help;
};

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      {"corpus.kind",
       [](RunConfig& c, const std::string& v) { c.corpus.kind = corpus_kind_from_name(v); },
       [](const RunConfig& c) { return std::string(corpus_kind_name(c.corpus.kind)); },
       "structured | unstructured"},
      {"corpus.n_sequences",
       [](RunConfig& c, const std::string& v) {
         c.corpus.n_sequences = parse_int(v, "corpus.n_sequences");
       },
       [](const RunConfig& c) { return std::to_string(c.corpus.n_sequences); },
       "number of generated sequences"},
      {"corpus.seq_frames",
       [](RunConfig& c, const std::string& v) {
         c.corpus.seq_frames = parse_int(v, "corpus.seq_frames");
       },
       [](const RunConfig& c) { return std::to_string(c.corpus.seq_frames); },
       "frames per sequence (T)"},
      {"corpus.n_classes",
       [](RunConfig& c, const std::string& v) {
         c.corpus.n_classes = parse_int(v, "corpus.n_classes");
       },
       [](const RunConfig& c) { return std::to_string(c.corpus.n_classes); },
       "event classes (C)"},
      {"corpus.max_polyphony",
       [](RunConfig& c, const std::string& v) {
         c.corpus.max_polyphony = parse_int(v, "corpus.max_polyphony");
       },
       [](const RunConfig& c) { return std::to_string(c.corpus.max_polyphony); },
       "max simultaneously active classes"},
      {"corpus.noise_level",
       [](RunConfig& c, const std::string& v) {
         c.corpus.noise_level = parse_double(v, "corpus.noise_level");
       },
       [](const RunConfig& c) { return fmt_double(c.corpus.noise_level); },
       "rendering noise level"},
      {"corpus.grammar_strength",
       [](RunConfig& c, const std::string& v) {
         c.corpus.grammar_strength = parse_double(v, "corpus.grammar_strength");
       },
       [](const RunConfig& c) { return fmt_double(c.corpus.grammar_strength); },
       "probability mass on the preferred successor class"},
      {"corpus.events_per_seq",
       [](RunConfig& c, const std::string& v) {
         c.corpus.events_per_seq = parse_int(v, "corpus.events_per_seq");
       },
       [](const RunConfig& c) { return std::to_string(c.corpus.events_per_seq); },
       "events per unstructured sequence"},
      {"corpus.dur_min",
       [](RunConfig& c, const std::string& v) {
         c.corpus.dur_min = parse_int(v, "corpus.dur_min");
       },
       [](const RunConfig& c) { return std::to_string(c.corpus.dur_min); },
       "min event duration (frames)"},
      {"corpus.dur_max",
       [](RunConfig& c, const std::string& v) {
         c.corpus.dur_max = parse_int(v, "corpus.dur_max");
       },
       [](const RunConfig& c) { return std::to_string(c.corpus.dur_max); },
       "max event duration (frames)"},
      {"corpus.split_train",
       [](RunConfig& c, const std::string& v) {
         c.corpus.split_train = parse_double(v, "corpus.split_train");
       },
       [](const RunConfig& c) { return fmt_double(c.corpus.split_train); },
       "training split ratio"},
      {"corpus.split_val",
       [](RunConfig& c, const std::string& v) {
         c.corpus.split_val = parse_double(v, "corpus.split_val");
       },
       [](const RunConfig& c) { return fmt_double(c.corpus.split_val); },
       "validation split ratio"},
      {"corpus.split_test",
       [](RunConfig& c, const std::string& v) {
         c.corpus.split_test = parse_double(v, "corpus.split_test");
       },
       [](const RunConfig& c) { return fmt_double(c.corpus.split_test); },
       "test split ratio"},
      {"corpus.frame_hop_seconds",
       [](RunConfig& c, const std::string& v) {
         c.corpus.frame_hop_seconds = parse_double(v, "corpus.frame_hop_seconds");
       },
       [](const RunConfig& c) { return fmt_double(c.corpus.frame_hop_seconds); },
       "frame hop in seconds"},
      {"model.cnn_filters",
       [](RunConfig& c, const std::string& v) {
         c.model.cnn_filters = parse_int(v, "model.cnn_filters");
       },
       [](const RunConfig& c) { return std::to_string(c.model.cnn_filters); },
       "CNN filters per block"},
      {"model.gru_hidden",
       [](RunConfig& c, const std::string& v) {
         c.model.gru_hidden = parse_int(v, "model.gru_hidden");
       },
       [](const RunConfig& c) { return std::to_string(c.model.gru_hidden); },
       "GRU hidden size"},
      {"model.conditioning",
       [](RunConfig& c, const std::string& v) {
         c.model.conditioning = conditioning_from_name(v);
       },
       [](const RunConfig& c) { return std::string(conditioning_name(c.model.conditioning)); },
       "off | ground_truth | scheduled | predictions"},
      {"model.binarize_conditioning",
       [](RunConfig& c, const std::string& v) {
         c.model.binarize_conditioning = parse_bool(v, "model.binarize_conditioning");
       },
       [](const RunConfig& c) { return std::string(c.model.binarize_conditioning ? "true" : "false"); },
       "threshold fed-back activities at 0.5"},
      {"model.dropout",
       [](RunConfig& c, const std::string& v) {
         c.model.dropout = parse_double(v, "model.dropout");
       },
       [](const RunConfig& c) { return fmt_double(c.model.dropout); },
       "dropout rate"},
      {"model.pool_plan",
       [](RunConfig& c, const std::string& v) {
         c.model.pools = parse_pool_plan(v, "model.pool_plan");
       },
       [](const RunConfig& c) { return pool_plan_string(c.model.pools); },
       "three TxF max-pool kernels, e.g. 1x5,1x4,1x2"},
      {"schedule.gamma",
       [](RunConfig& c, const std::string& v) {
         c.schedule.gamma = parse_double(v, "schedule.gamma");
       },
       [](const RunConfig& c) { return fmt_double(c.schedule.gamma); },
       "decay slope"},
      {"schedule.p_min",
       [](RunConfig& c, const std::string& v) {
         c.schedule.p_min = parse_double(v, "schedule.p_min");
       },
       [](const RunConfig& c) { return fmt_double(c.schedule.p_min); },
       "minimum teacher-forcing probability"},
      {"schedule.p_max",
       [](RunConfig& c, const std::string& v) {
         c.schedule.p_max = parse_double(v, "schedule.p_max");
       },
       [](const RunConfig& c) { return fmt_double(c.schedule.p_max); },
       "maximum teacher-forcing probability"},
      {"train.batch_size",
       [](RunConfig& c, const std::string& v) {
         c.train.batch_size = parse_int(v, "train.batch_size");
       },
       [](const RunConfig& c) { return std::to_string(c.train.batch_size); },
       "sequences per batch"},
      {"train.learning_rate",
       [](RunConfig& c, const std::string& v) {
         c.train.learning_rate = parse_double(v, "train.learning_rate");
       },
       [](const RunConfig& c) { return fmt_double(c.train.learning_rate); },
       "Adam learning rate (1e-3 default, 5e-4 variant)"},
      {"train.grad_clip",
       [](RunConfig& c, const std::string& v) {
         c.train.grad_clip = parse_bool(v, "train.grad_clip");
       },
       [](const RunConfig& c) { return std::string(c.train.grad_clip ? "true" : "false"); },
       "enable per-layer l2 gradient clipping"},
      {"train.clip_norm",
       [](RunConfig& c, const std::string& v) {
         c.train.clip_norm = parse_double(v, "train.clip_norm");
       },
       [](const RunConfig& c) { return fmt_double(c.train.clip_norm); },
       "per-layer gradient norm bound"},
      {"train.patience",
       [](RunConfig& c, const std::string& v) {
         c.train.patience = parse_int(v, "train.patience");
       },
       [](const RunConfig& c) { return std::to_string(c.train.patience); },
       "early-stopping patience (epochs)"},
      {"train.max_epochs",
       [](RunConfig& c, const std::string& v) {
         c.train.max_epochs = parse_int(v, "train.max_epochs");
       },
       [](const RunConfig& c) { return std::to_string(c.train.max_epochs); },
       "epoch cap"},
      {"train.seed",
       [](RunConfig& c, const std::string& v) { c.train.seed = parse_u64(v, "train.seed"); },
       [](const RunConfig& c) { return std::to_string(c.train.seed); },
       "master seed"},
      {"train.threshold",
       [](RunConfig& c, const std::string& v) {
         c.train.threshold = parse_double(v, "train.threshold");
       },
       [](const RunConfig& c) { return fmt_double(c.train.threshold); },
       "detection threshold on activities"},
      {"ab.seeds",
       [](RunConfig& c, const std::string& v) { c.ab_seeds = parse_int(v, "ab.seeds"); },
       [](const RunConfig& c) { return std::to_string(c.ab_seeds); },
       "seeds for the A/B experiment"},
  };
  return table;
}

const KeyDef& find_key(const std::string& dotted) {
  for (const auto& k : key_table())
    if (dotted == k.key) return k;
  throw ConfigError(msg("config: unknown key '", dotted, "'"));
}

}  // namespace

void RunConfig::validate() const {
  corpus.validate();
  model.validate();
  schedule.validate();
  train.validate();
  if (ab_seeds < 1) throw ConfigError("config: ab.seeds must be >= 1");
}

RunConfig default_run_config() {
  RunConfig cfg;
  // Desk-scale profile; the paper-scale sizes (128 filters, 128 hidden,
  // T=1024) remain reachable through the config file.
  cfg.model.cnn_filters = 16;
  cfg.model.gru_hidden = 32;
  cfg.model.conditioning = Conditioning::Off;
  cfg.sync();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(msg("config: cannot open '", path, "'"));
  RunConfig cfg = default_run_config();
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(msg("config: ", path, ":", line_no, ": expected key = value"));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string dotted = section.empty() ? key : section + "." + key;
    find_key(dotted).set(cfg, value);
  }
  cfg.sync();
  return cfg;
}

void apply_override(RunConfig& cfg, const std::string& dotted_key, const std::string& value) {
  find_key(dotted_key).set(cfg, value);
  cfg.sync();
}

std::string dump_run_config(const RunConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& k : key_table()) {
    const std::string key(k.key);
    const std::string sec = key.substr(0, key.find('.'));
    if (sec != section) {
      os << "[" << sec << "]\n";
      section = sec;
    }
    os << key.substr(key.find('.') + 1) << " = " << k.get(cfg) << "\n";
  }
  return os.str();
}

uint64_t config_fingerprint(const RunConfig& cfg) {
  const std::string dump = dump_run_config(cfg);
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_key_help() {
  std::ostringstream os;
  const RunConfig defaults = default_run_config();
  for (const auto& k : key_table())
    os << "  " << std::left << std::setw(28) << k.key << k.help
       << " (default: " << k.get(defaults) << ")\n";
  return os.str();
}

}  // namespace sedkit
