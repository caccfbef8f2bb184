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

#include "sedkit/schedule.hpp"

#include <algorithm>
#include <cmath>

namespace sedkit {

double p_tf(int64_t update_index, const ScheduleParams& params) {
  const double beta =
      -(static_cast<double>(update_index) * params.gamma) / params.n_batches;
  const double inner = 2.0 / (1.0 + std::exp(beta)) - 1.0;
  return std::min(params.p_max, 1.0 - std::min(1.0 - params.p_min, inner));
}

double p_tf_tanh(int64_t update_index, const ScheduleParams& params) {
  const double x =
      (static_cast<double>(update_index) * params.gamma) / (2.0 * params.n_batches);
  return std::min(params.p_max, std::max(params.p_min, 1.0 - std::tanh(x)));
}

std::vector<std::pair<int64_t, double>> schedule_curve(const ScheduleParams& params,
                                                       int64_t n_updates) {
  params.validate();
  std::vector<std::pair<int64_t, double>> curve;
  curve.reserve(static_cast<size_t>(n_updates) + 1);
  for (int64_t i = 0; i <= n_updates; ++i) curve.emplace_back(i, p_tf(i, params));
  return curve;
}

}  // namespace sedkit
