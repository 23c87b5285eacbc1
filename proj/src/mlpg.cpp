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

#include "rnnpf/mlpg.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace rnnpf {

namespace {

// Delta-operator row for frame t with indices clamped to [0, T-1]; clamped
// duplicates accumulate, matching compute_deltas.
std::vector<std::pair<Eigen::Index, double>> delta_row(
    Eigen::Index t, Eigen::Index t_len, const DeltaWindow& window) {
  const auto hw = static_cast<Eigen::Index>(window.half_width());
  std::vector<std::pair<Eigen::Index, double>> row;
  for (Eigen::Index k = -hw; k <= hw; ++k) {
    const double c = window.coeffs[static_cast<std::size_t>(k + hw)];
    if (c == 0.0) continue;
    const Eigen::Index src = std::clamp<Eigen::Index>(t + k, 0, t_len - 1);
    bool merged = false;
    for (auto& [idx, coeff] : row) {
      if (idx == src) {
        coeff += c;
        merged = true;
        break;
      }
    }
    if (!merged) row.emplace_back(src, c);
  }
  return row;
}

}  // namespace

BandedSystem build_mlpg_system(const Vec& static_mean, const Vec& delta_mean,
                               const Vec& static_var, const Vec& delta_var,
                               const DeltaWindow& window) {
  window.validate();
  const Eigen::Index t_len = static_mean.size();
  if (t_len == 0) throw DataError("mlpg: empty trajectory");
  if (delta_mean.size() != t_len || static_var.size() != t_len ||
      delta_var.size() != t_len) {
    throw DataError("mlpg: mean/variance streams have mismatched lengths");
  }
  if ((static_var.array() <= 0.0).any() || (delta_var.array() <= 0.0).any()) {
    throw DataError("mlpg: variances must be positive");
  }

  BandedSystem sys;
  sys.t_len = t_len;
  sys.half_bandwidth = 2 * static_cast<Eigen::Index>(window.half_width());
  sys.band = Mat::Zero(sys.half_bandwidth + 1, t_len);
  sys.rhs = Vec::Zero(t_len);

  for (Eigen::Index t = 0; t < t_len; ++t) {
    // Static row of W is the identity.
    const double sp = 1.0 / static_var(t);
    sys.band(0, t) += sp;
    sys.rhs(t) += sp * static_mean(t);

    // Delta row: rank-one update restricted to the lower band.
    const double dp = 1.0 / delta_var(t);
    const auto row = delta_row(t, t_len, window);
    for (const auto& [i, ci] : row) {
      sys.rhs(i) += dp * ci * delta_mean(t);
      for (const auto& [j, cj] : row) {
        if (i < j) continue;
        sys.band(i - j, j) += dp * ci * cj;
      }
    }
  }
  return sys;
}

Vec solve_banded_spd(const BandedSystem& system) {
  const Eigen::Index n = system.t_len;
  const Eigen::Index b = system.half_bandwidth;
  if (system.band.rows() != b + 1 || system.band.cols() != n ||
      system.rhs.size() != n) {
    throw DataError("mlpg: malformed banded system");
  }
  Mat l = system.band;

  // In-place banded Cholesky, lower form: l(k, j) holds L(j + k, j).
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index imax = std::min(b, n - 1 - j);
    for (Eigen::Index i = 0; i <= imax; ++i) {
      double s = l(i, j);
      const Eigen::Index kmin = std::max<Eigen::Index>(0, i + j - b);
      for (Eigen::Index k = kmin; k < j; ++k) {
        s -= l(i + j - k, k) * l(j - k, k);
      }
      if (i == 0) {
        if (!(s > 0.0)) {
          throw NumericError(
              "mlpg: system is not positive definite (pivot at frame " +
              std::to_string(j) + ")");
        }
        l(0, j) = std::sqrt(s);
      } else {
        l(i, j) = s / l(0, j);
      }
    }
  }

  // L y = r.
  Vec y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = system.rhs(j);
    const Eigen::Index kmin = std::max<Eigen::Index>(0, j - b);
    for (Eigen::Index k = kmin; k < j; ++k) s -= l(j - k, k) * y(k);
    y(j) = s / l(0, j);
  }
  // L^T x = y.
  Vec x(n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    double s = y(j);
    const Eigen::Index imax = std::min(b, n - 1 - j);
    for (Eigen::Index i = 1; i <= imax; ++i) s -= l(i, j) * x(j + i);
    x(j) = s / l(0, j);
  }
  if (!x.allFinite()) throw NumericError("mlpg: non-finite solution");
  return x;
}

Mat banded_to_dense(const BandedSystem& system) {
  Mat a = Mat::Zero(system.t_len, system.t_len);
  for (Eigen::Index j = 0; j < system.t_len; ++j) {
    const Eigen::Index imax =
        std::min(system.half_bandwidth, system.t_len - 1 - j);
    for (Eigen::Index i = 0; i <= imax; ++i) {
      a(j + i, j) = system.band(i, j);
      a(j, j + i) = system.band(i, j);
    }
  }
  return a;
}

Mat mlpg_smooth(const PredictedTrack& track, const DeltaWindow& window,
                MlpgSource source, const Mat* rnn_statics) {
  track.validate();
  window.validate();
  const Eigen::Index t_len = track.frames();
  const Eigen::Index dim = track.dim();
  if (source == MlpgSource::kRnnMeansCartStds) {
    if (rnn_statics == nullptr) {
      throw ConfigError("mlpg: hybrid smoothing requires postfilter output");
    }
    if (rnn_statics->rows() != t_len || rnn_statics->cols() != dim) {
      throw DataError("mlpg: postfilter output shape does not match track");
    }
  }

  Mat out(t_len, dim);
  for (Eigen::Index d = 0; d < dim; ++d) {
    const Vec sm = source == MlpgSource::kRnnMeansCartStds
                       ? rnn_statics->col(d)
                       : Vec(track.static_mean.col(d));
    const BandedSystem sys = build_mlpg_system(
        sm, track.delta_mean.col(d),
        track.static_std.col(d).array().square().matrix(),
        track.delta_std.col(d).array().square().matrix(), window);
    out.col(d) = solve_banded_spd(sys);
  }
  return out;
}

}  // namespace rnnpf
