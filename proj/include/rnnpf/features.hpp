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
#include <vector>

#include "rnnpf/common.hpp"

namespace rnnpf {

// Odd-length regression window centered at lag 0. The default is the
// standard first-order window; the same window and edge convention drive
// delta targets, postfilter inputs, and the trajectory smoother.
struct DeltaWindow {
  std::vector<double> coeffs{-0.5, 0.0, 0.5};

  int half_width() const { return (static_cast<int>(coeffs.size()) - 1) / 2; }
  void validate() const;
};

// Per-utterance acoustic-model outputs: static and delta means with their
// standard deviations, plus the auxiliary f0/voicing predictions.
struct PredictedTrack {
  Mat static_mean;  // T x D
  Mat delta_mean;   // T x D
  Mat static_std;   // T x D, entries >= std_floor
  Mat delta_std;    // T x D, entries >= std_floor
  Vec f0;           // T
  Vec voicing;      // T

  Eigen::Index frames() const { return static_mean.rows(); }
  Eigen::Index dim() const { return static_mean.cols(); }
  void validate() const;
};

// out[t] = sum_k w[k] * x[clamp(t + k)], with edge frames replicated.
Mat compute_deltas(const Mat& x, const DeltaWindow& w);

// [static_mean | delta_mean], the 2D-column postfilter input (50 when D=25).
Mat assemble_basic_inputs(const PredictedTrack& track);

// [static_mean | delta_mean | static_std | delta_std | f0 | voicing | ling];
// 4D + 2 + L columns.
Mat assemble_extended_inputs(const PredictedTrack& track, const Mat& ling);

// <id>.pred.tsv with column groups stat_*, del_*, sstd_*, dstd_*, f0, voicing.
void save_track(const PredictedTrack& track, const std::filesystem::path& path);
PredictedTrack load_track(const std::filesystem::path& path);

}  // namespace rnnpf
