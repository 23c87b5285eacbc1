// Copyright (c) 2026 The rnnpf Authors
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

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace rnnpf {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Error taxonomy, mapped to process exit codes by the CLI.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration or invalid argument combinations. Exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed or inconsistent data (files, shapes, invariant violations).
// Exit code 3.
struct DataError : Error {
  using Error::Error;
};

// Numeric failures (loss of positive definiteness, non-finite values).
// Exit code 4.
struct NumericError : Error {
  using Error::Error;
};

inline int exit_code_for(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  return 4;
}

}  // namespace rnnpf
