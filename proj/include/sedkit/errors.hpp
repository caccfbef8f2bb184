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

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sedkit {

// Shape/dimension disagreements between arrays.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input files (WAV, TSV, checkpoints, caches).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration values or unknown keys.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// API misuse (backward twice, non-scalar loss, mismatched lengths).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Math domain violations (log of non-positive input).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void msg_append(std::ostringstream&) {}
template <class A, class... Rest>
void msg_append(std::ostringstream& os, const A& a, const Rest&... rest) {
  os << a;
  msg_append(os, rest...);
}
}  // namespace detail

// Builds an error message from stream-printable pieces.
template <class... Parts>
std::string msg(const Parts&... parts) {
  std::ostringstream os;
  detail::msg_append(os, parts...);
  return os.str();
}

inline std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

}  // namespace sedkit
