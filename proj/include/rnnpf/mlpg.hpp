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

#include "rnnpf/common.hpp"
#include "rnnpf/features.hpp"

namespace rnnpf {

// Normal equations A c = r of the per-dimension trajectory problem, with A
// stored by lower diagonals: band(k, j) = A(j + k, j).
struct BandedSystem {
  Eigen::Index t_len = 0;
  Eigen::Index half_bandwidth = 0;
  Mat band;  // (half_bandwidth + 1) x t_len
  Vec rhs;
};

// Builds A = W^T P W and r = W^T P mu for one dimension, where W stacks the
// identity over the delta operator (same edge replication as compute_deltas),
// mu stacks static over delta means, and P holds the inverse variances.
BandedSystem build_mlpg_system(const Vec& static_mean, const Vec& delta_mean,
                               const Vec& static_var, const Vec& delta_var,
                               const DeltaWindow& window);

// Banded Cholesky factorization with forward/back substitution.
Vec solve_banded_spd(const BandedSystem& system);

// Expands the band storage to a full symmetric matrix (test/debug helper).
Mat banded_to_dense(const BandedSystem& system);

enum class MlpgSource {
  kCartMeans,         // statics, deltas, and variances all from the track
  kRnnMeansCartStds,  // static means replaced by the postfilter's output
};

// Per-dimension MLPG over the track. For kRnnMeansCartStds, `rnn_statics`
// (T x D) supplies the static means; delta means and both variance streams
// always come from the track.
Mat mlpg_smooth(const PredictedTrack& track, const DeltaWindow& window,
                MlpgSource source, const Mat* rnn_statics = nullptr);

}  // namespace rnnpf
