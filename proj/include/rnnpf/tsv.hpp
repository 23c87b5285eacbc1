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

#include <filesystem>
#include <string>
#include <vector>

#include "rnnpf/common.hpp"

namespace rnnpf {

// All numeric text I/O uses 17 significant digits so a save/load round trip
// reproduces every double bit-exactly.
std::string format_double(double v);

struct TsvTable {
  std::vector<std::string> columns;
  Mat values;  // rows x columns
};

// Header row of column names, one row per line, tab separated.
void write_tsv(const std::filesystem::path& path,
               const std::vector<std::string>& columns, const Mat& values);

// Parses strictly; malformed content raises DataError naming file and row.
TsvTable read_tsv(const std::filesystem::path& path);

}  // namespace rnnpf
