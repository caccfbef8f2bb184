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

#include "sedkit/features.hpp"
#include "sedkit/model.hpp"

namespace sedkit {

// One named float array in a checkpoint.
struct CheckpointRecord {
  std::string name;
  std::vector<uint32_t> dims;
  std::vector<float> data;

  bool operator==(const CheckpointRecord&) const = default;
};

// Persisted training state: parameters, optimizer moments, BN buffers,
// standardizer statistics, model hyper-parameters and the weight-update
// counter. File format: magic "SEDM", u32 version, u64 config fingerprint,
// u64 counter, then records of (u32 name length, name bytes, u32 rank,
// u32 dims, little-endian f32 data).
struct Checkpoint {
  uint64_t fingerprint = 0;
  int64_t update_index = 0;
  std::vector<CheckpointRecord> records;

  const CheckpointRecord* find(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Snapshot of the full training state.
Checkpoint checkpoint_from_state(SedModel<float>& model, const AdamState<float>& adam,
                                 const Standardizer& standardizer, int64_t update_index,
                                 uint64_t fingerprint);

// Rebuilds the model (and optionally optimizer/standardizer) from a
// checkpoint. Shapes are validated against the stored hyper-parameters.
ModelConfig model_config_from_checkpoint(const Checkpoint& ckpt);
void restore_state(const Checkpoint& ckpt, SedModel<float>& model,
                   AdamState<float>* adam, Standardizer* standardizer);

}  // namespace sedkit
