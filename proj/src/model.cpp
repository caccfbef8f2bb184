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

#include "sedkit/model.hpp"

namespace sedkit {

const char* conditioning_name(Conditioning c) {
  switch (c) {
    case Conditioning::Off: return "off";
    case Conditioning::GroundTruth: return "ground_truth";
    case Conditioning::Scheduled: return "scheduled";
    case Conditioning::Predictions: return "predictions";
  }
  return "off";
}

Conditioning conditioning_from_name(const std::string& name) {
  if (name == "off") return Conditioning::Off;
  if (name == "ground_truth") return Conditioning::GroundTruth;
  if (name == "scheduled") return Conditioning::Scheduled;
  if (name == "predictions") return Conditioning::Predictions;
  throw ConfigError(msg("unknown conditioning mode '", name,
                        "' (expected off|ground_truth|scheduled|predictions)"));
}

}  // namespace sedkit
