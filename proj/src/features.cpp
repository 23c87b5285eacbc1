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

#include "rnnpf/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rnnpf/tsv.hpp"

namespace rnnpf {

void DeltaWindow::validate() const {
  if (coeffs.empty() || coeffs.size() % 2 == 0) {
    throw ConfigError("delta window length must be odd");
  }
  bool any = false;
  for (const double c : coeffs) {
    if (!std::isfinite(c)) throw ConfigError("delta window has non-finite coefficient");
    if (c != 0.0) any = true;
  }
  if (!any) throw ConfigError("delta window is all zero");
}

void PredictedTrack::validate() const {
  const Eigen::Index t = frames();
  const Eigen::Index d = dim();
  if (t < 1) throw DataError("predicted track is empty");
  if (delta_mean.rows() != t || static_std.rows() != t ||
      delta_std.rows() != t || f0.size() != t || voicing.size() != t ||
      delta_mean.cols() != d || static_std.cols() != d ||
      delta_std.cols() != d) {
    throw DataError("predicted track: field shapes disagree");
  }
  if ((static_std.array() <= 0.0).any() || (delta_std.array() <= 0.0).any()) {
    throw DataError("predicted track: nonpositive standard deviation");
  }
}

Mat compute_deltas(const Mat& x, const DeltaWindow& w) {
  w.validate();
  const Eigen::Index t_count = x.rows();
  if (t_count < 1) throw DataError("compute_deltas: empty input");
  const int h = w.half_width();
  Mat out = Mat::Zero(t_count, x.cols());
  for (Eigen::Index t = 0; t < t_count; ++t) {
    for (int k = -h; k <= h; ++k) {
      const double c = w.coeffs[static_cast<std::size_t>(k + h)];
      if (c == 0.0) continue;
      const Eigen::Index src = std::clamp<Eigen::Index>(t + k, 0, t_count - 1);
      out.row(t) += c * x.row(src);
    }
  }
  return out;
}

Mat assemble_basic_inputs(const PredictedTrack& track) {
  track.validate();
  const Eigen::Index t = track.frames();
  const Eigen::Index d = track.dim();
  Mat out(t, 2 * d);
  out.leftCols(d) = track.static_mean;
  out.rightCols(d) = track.delta_mean;
  return out;
}

Mat assemble_extended_inputs(const PredictedTrack& track, const Mat& ling) {
  track.validate();
  const Eigen::Index t = track.frames();
  const Eigen::Index d = track.dim();
  if (ling.rows() != t) {
    throw DataError("assemble_extended_inputs: ling has " +
                    std::to_string(ling.rows()) + " frames, track has " +
                    std::to_string(t));
  }
  Mat out(t, 4 * d + 2 + ling.cols());
  out.middleCols(0, d) = track.static_mean;
  out.middleCols(d, d) = track.delta_mean;
  out.middleCols(2 * d, d) = track.static_std;
  out.middleCols(3 * d, d) = track.delta_std;
  out.col(4 * d) = track.f0;
  out.col(4 * d + 1) = track.voicing;
  out.rightCols(ling.cols()) = ling;
  return out;
}

void save_track(const PredictedTrack& track, const std::filesystem::path& path) {
  track.validate();
  const Eigen::Index d = track.dim();
  std::vector<std::string> cols;
  cols.reserve(4 * d + 2);
  const char* groups[] = {"stat_", "del_", "sstd_", "dstd_"};
  for (const char* g : groups) {
    for (Eigen::Index i = 0; i < d; ++i) cols.push_back(g + std::to_string(i));
  }
  cols.push_back("f0");
  cols.push_back("voicing");

  Mat values(track.frames(), 4 * d + 2);
  values.middleCols(0, d) = track.static_mean;
  values.middleCols(d, d) = track.delta_mean;
  values.middleCols(2 * d, d) = track.static_std;
  values.middleCols(3 * d, d) = track.delta_std;
  values.col(4 * d) = track.f0;
  values.col(4 * d + 1) = track.voicing;
  write_tsv(path, cols, values);
}

PredictedTrack load_track(const std::filesystem::path& path) {
  const TsvTable table = read_tsv(path);
  const std::size_t ncols = table.columns.size();
  if (ncols < 6 || (ncols - 2) % 4 != 0) {
    throw DataError(path.string() + ": not a predicted-track file");
  }
  const Eigen::Index d = static_cast<Eigen::Index>((ncols - 2) / 4);
  if (table.columns[0] != "stat_0" ||
      table.columns[static_cast<std::size_t>(4 * d)] != "f0") {
    throw DataError(path.string() + ": unexpected column names");
  }
  PredictedTrack track;
  track.static_mean = table.values.middleCols(0, d);
  track.delta_mean = table.values.middleCols(d, d);
  track.static_std = table.values.middleCols(2 * d, d);
  track.delta_std = table.values.middleCols(3 * d, d);
  track.f0 = table.values.col(4 * d);
  track.voicing = table.values.col(4 * d + 1);
  track.validate();
  return track;
}

}  // namespace rnnpf
