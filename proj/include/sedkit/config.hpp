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

#include "sedkit/model.hpp"
#include "sedkit/schedule.hpp"
#include "sedkit/synthdata.hpp"
#include "sedkit/trainer.hpp"

namespace sedkit {

// One experiment configuration: corpus generation, model, schedule and
// training, serialized as a sectioned key=value text file. Unknown keys
// are rejected.
struct RunConfig {
  CorpusParams corpus;
  ModelConfig model;
  ScheduleParams schedule;
  TrainConfig train;
  int ab_seeds = 5;

  // Keeps the model consistent with the corpus it will be trained on.
  void sync() { model.n_classes = corpus.n_classes; }
  void validate() const;
};

RunConfig default_run_config();

// Parses a config file: lines of "key = value" under "[section]" headers.
// '#' starts a comment. Every key must be known.
RunConfig load_run_config(const std::string& path);

// Applies one "section.key=value" override (command-line flags win over
// the file).
void apply_override(RunConfig& cfg, const std::string& dotted_key,
                    const std::string& value);

// Canonical text dump: every key in a fixed order. Identical configs give
// identical dumps (and therefore identical fingerprints).
std::string dump_run_config(const RunConfig& cfg);

// FNV-1a 64-bit hash of the canonical dump.
uint64_t config_fingerprint(const RunConfig& cfg);

// All keys with their defaults, for --help.
std::string config_key_help();

}  // namespace sedkit
