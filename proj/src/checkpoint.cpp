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

#include "sedkit/checkpoint.hpp"

#include <fstream>

#include "sedkit/binio.hpp"

namespace sedkit {

namespace {
constexpr char kMagic[4] = {'S', 'E', 'D', 'M'};
constexpr uint32_t kVersion = 1;

std::vector<uint32_t> dims_of(const std::vector<int>& shape) {
  std::vector<uint32_t> d;
  for (int s : shape) d.push_back(static_cast<uint32_t>(s));
  return d;
}

int64_t numel_of_dims(const std::vector<uint32_t>& dims) {
  int64_t n = 1;
  for (uint32_t d : dims) n *= d;
  return n;
}

CheckpointRecord scalar_record(const std::string& name, float v) {
  return CheckpointRecord{name, {1}, {v}};
}

float scalar_of(const Checkpoint& ckpt, const std::string& name) {
  const CheckpointRecord* r = ckpt.find(name);
  if (!r || r->data.size() != 1)
    throw ParseError(msg("checkpoint: missing scalar record '", name, "'"));
  return r->data[0];
}
}  // namespace

const CheckpointRecord* Checkpoint::find(const std::string& name) const {
  for (const auto& r : records)
    if (r.name == name) return &r;
  return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(msg("checkpoint: cannot write '", path, "'"));
  binio::write_magic(out, kMagic);
  binio::write_u32(out, kVersion);
  binio::write_u64(out, ckpt.fingerprint);
  binio::write_u64(out, static_cast<uint64_t>(ckpt.update_index));
  for (const auto& r : ckpt.records) {
    binio::write_u32(out, static_cast<uint32_t>(r.name.size()));
    out.write(r.name.data(), static_cast<std::streamsize>(r.name.size()));
    binio::write_u32(out, static_cast<uint32_t>(r.dims.size()));
    for (uint32_t d : r.dims) binio::write_u32(out, d);
    binio::write_f32_array(out, r.data.data(), r.data.size());
  }
  if (!out) throw ParseError(msg("checkpoint: write failed for '", path, "'"));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(msg("checkpoint: cannot open '", path, "'"));
  binio::expect_magic(in, kMagic, "checkpoint");
  const uint32_t version = binio::read_u32(in, "checkpoint version");
  if (version != kVersion)
    throw ParseError(msg("checkpoint: unsupported version ", version));
  Checkpoint ckpt;
  ckpt.fingerprint = binio::read_u64(in, "checkpoint fingerprint");
  ckpt.update_index = static_cast<int64_t>(binio::read_u64(in, "checkpoint counter"));
  while (true) {
    in.peek();
    if (in.eof()) break;
    CheckpointRecord rec;
    const uint32_t name_len = binio::read_u32(in, "record name length");
    rec.name.resize(name_len);
    in.read(rec.name.data(), name_len);
    if (!in) throw ParseError("checkpoint: truncated record name");
    const uint32_t rank = binio::read_u32(in, "record rank");
    rec.dims.resize(rank);
    for (uint32_t i = 0; i < rank; ++i) rec.dims[i] = binio::read_u32(in, "record dim");
    rec.data.resize(static_cast<size_t>(numel_of_dims(rec.dims)));
    binio::read_f32_array(in, rec.data.data(), rec.data.size(), "record data");
    ckpt.records.push_back(std::move(rec));
  }
  return ckpt;
}

Checkpoint checkpoint_from_state(SedModel<float>& model, const AdamState<float>& adam,
                                 const Standardizer& standardizer, int64_t update_index,
                                 uint64_t fingerprint) {
  Checkpoint ckpt;
  ckpt.fingerprint = fingerprint;
  ckpt.update_index = update_index;

  const ModelConfig& cfg = model.cfg;
  ckpt.records.push_back(scalar_record("config.n_classes", static_cast<float>(cfg.n_classes)));
  ckpt.records.push_back(scalar_record("config.n_mels", static_cast<float>(cfg.n_mels)));
  ckpt.records.push_back(
      scalar_record("config.cnn_filters", static_cast<float>(cfg.cnn_filters)));
  ckpt.records.push_back(
      scalar_record("config.gru_hidden", static_cast<float>(cfg.gru_hidden)));
  ckpt.records.push_back(scalar_record(
      "config.conditioning", static_cast<float>(static_cast<int>(cfg.conditioning))));
  ckpt.records.push_back(scalar_record("config.binarize_conditioning",
                                       cfg.binarize_conditioning ? 1.0f : 0.0f));
  ckpt.records.push_back(scalar_record("config.dropout", static_cast<float>(cfg.dropout)));
  {
    CheckpointRecord pools{"config.pools", {6}, {}};
    for (auto [pt, pf] : cfg.pools) {
      pools.data.push_back(static_cast<float>(pt));
      pools.data.push_back(static_cast<float>(pf));
    }
    ckpt.records.push_back(std::move(pools));
  }

  auto params = model.named_params();
  for (auto& [name, t] : params)
    ckpt.records.push_back(CheckpointRecord{
        name, dims_of(t.shape()), std::vector<float>(t.value().begin(), t.value().end())});
  if (!adam.m.empty()) {
    if (adam.m.size() != params.size())
      throw UsageError("checkpoint: optimizer state does not match parameter list");
    for (size_t i = 0; i < params.size(); ++i) {
      ckpt.records.push_back(CheckpointRecord{"adam.m." + params[i].first,
                                              dims_of(params[i].second.shape()),
                                              adam.m[i]});
      ckpt.records.push_back(CheckpointRecord{"adam.v." + params[i].first,
                                              dims_of(params[i].second.shape()),
                                              adam.v[i]});
    }
  }
  for (auto& [name, buf] : model.named_buffers())
    ckpt.records.push_back(
        CheckpointRecord{name, {static_cast<uint32_t>(buf->size())}, *buf});
  if (!standardizer.mean.empty()) {
    ckpt.records.push_back(CheckpointRecord{
        "standardizer.mean", {static_cast<uint32_t>(standardizer.mean.size())},
        standardizer.mean});
    ckpt.records.push_back(CheckpointRecord{
        "standardizer.std", {static_cast<uint32_t>(standardizer.stddev.size())},
        standardizer.stddev});
  }
  return ckpt;
}

ModelConfig model_config_from_checkpoint(const Checkpoint& ckpt) {
  ModelConfig cfg;
  cfg.n_classes = static_cast<int>(scalar_of(ckpt, "config.n_classes"));
  cfg.n_mels = static_cast<int>(scalar_of(ckpt, "config.n_mels"));
  cfg.cnn_filters = static_cast<int>(scalar_of(ckpt, "config.cnn_filters"));
  cfg.gru_hidden = static_cast<int>(scalar_of(ckpt, "config.gru_hidden"));
  cfg.conditioning = static_cast<Conditioning>(
      static_cast<int>(scalar_of(ckpt, "config.conditioning")));
  cfg.binarize_conditioning = scalar_of(ckpt, "config.binarize_conditioning") != 0.0f;
  cfg.dropout = scalar_of(ckpt, "config.dropout");
  const CheckpointRecord* pools = ckpt.find("config.pools");
  if (!pools || pools->data.size() != 6)
    throw ParseError("checkpoint: missing pool plan");
  for (int i = 0; i < 3; ++i)
    cfg.pools[i] = {static_cast<int>(pools->data[2 * i]),
                    static_cast<int>(pools->data[2 * i + 1])};
  return cfg;
}

void restore_state(const Checkpoint& ckpt, SedModel<float>& model,
                   AdamState<float>* adam, Standardizer* standardizer) {
  auto params = model.named_params();
  for (auto& [name, t] : params) {
    const CheckpointRecord* r = ckpt.find(name);
    if (!r) throw ParseError(msg("checkpoint: missing parameter '", name, "'"));
    if (static_cast<int64_t>(r->data.size()) != t.numel())
      throw ShapeError(msg("checkpoint: parameter '", name, "' has ", r->data.size(),
                           " values, model wants ", t.numel()));
    std::copy(r->data.begin(), r->data.end(), t.mutable_value().begin());
  }
  for (auto& [name, buf] : model.named_buffers()) {
    const CheckpointRecord* r = ckpt.find(name);
    if (!r) throw ParseError(msg("checkpoint: missing buffer '", name, "'"));
    if (r->data.size() != buf->size())
      throw ShapeError(msg("checkpoint: buffer '", name, "' size mismatch"));
    *buf = r->data;
  }
  if (adam) {
    adam->m.clear();
    adam->v.clear();
    for (auto& [name, t] : params) {
      const CheckpointRecord* rm = ckpt.find("adam.m." + name);
      const CheckpointRecord* rv = ckpt.find("adam.v." + name);
      if (!rm || !rv)
        throw ParseError(msg("checkpoint: missing optimizer state for '", name, "'"));
      adam->m.push_back(rm->data);
      adam->v.push_back(rv->data);
    }
    adam->step_count = ckpt.update_index;
  }
  if (standardizer) {
    const CheckpointRecord* rm = ckpt.find("standardizer.mean");
    const CheckpointRecord* rs = ckpt.find("standardizer.std");
    if (!rm || !rs) throw ParseError("checkpoint: missing standardizer statistics");
    standardizer->mean = rm->data;
    standardizer->stddev = rs->data;
  }
}

}  // namespace sedkit
