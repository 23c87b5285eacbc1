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

#include "rnnpf/tsv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace rnnpf {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_tsv(const std::filesystem::path& path,
               const std::vector<std::string>& columns, const Mat& values) {
  if (values.size() > 0 &&
      static_cast<Eigen::Index>(columns.size()) != values.cols()) {
    throw DataError("write_tsv: header has " + std::to_string(columns.size()) +
                    " columns but matrix has " + std::to_string(values.cols()));
  }
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot open " + path.string() + " for writing");
  }
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c > 0) out << '\t';
    out << columns[c];
  }
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c > 0) out << '\t';
      out << format_double(values(r, c));
    }
    out << '\n';
  }
  if (!out) {
    throw DataError("write failed for " + path.string());
  }
}

TsvTable read_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(path.string() + ":1: missing header row");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  TsvTable table;
  table.columns = split_tabs(line);
  const std::size_t ncols = table.columns.size();

  std::vector<double> data;
  std::size_t nrows = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_tabs(line);
    if (cells.size() != ncols) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": expected " + std::to_string(ncols) +
                      " columns, found " + std::to_string(cells.size()));
    }
    for (const std::string& cell : cells) {
      const char* s = cell.c_str();
      char* end = nullptr;
      const double v = std::strtod(s, &end);
      if (end == s || *end != '\0') {
        throw DataError(path.string() + ":" + std::to_string(lineno) +
                        ": not a number: '" + cell + "'");
      }
      data.push_back(v);
    }
    ++nrows;
  }
  table.values.resize(static_cast<Eigen::Index>(nrows),
                      static_cast<Eigen::Index>(ncols));
  for (std::size_t r = 0; r < nrows; ++r) {
    for (std::size_t c = 0; c < ncols; ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          data[r * ncols + c];
    }
  }
  return table;
}

}  // namespace rnnpf
