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
//
// Independent reference implementations used to check the library: finite
// differences, a recursive detached-recurrence BPTT, an exhaustive CART
// split search, and a dense MLPG solve. These deliberately avoid sharing
// code paths with the implementations under test.

#pragma once

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "rnnpf/cart.hpp"
#include "rnnpf/common.hpp"
#include "rnnpf/mlpg.hpp"
#include "rnnpf/rng.hpp"
#include "rnnpf/rnn.hpp"

namespace rnnpf::testing {

// Relative error with an absolute floor, the usual gradient-check metric.
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
}

inline Mat random_mat(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                      double lo, double hi) {
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
  }
  return m;
}

inline ElmanRnn random_net(Rng& rng, Eigen::Index input, Eigen::Index hidden,
                           Eigen::Index output, double scale) {
  return ElmanRnn::init(input, hidden, output, scale, rng);
}

// Pointers to every parameter in a fixed traversal order; the matching
// gradient entries come from grad_entries below.
inline std::vector<double*> param_ptrs(ElmanRnn& net) {
  std::vector<double*> ptrs;
  auto add_mat = [&](Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) ptrs.push_back(&m(r, c));
    }
  };
  auto add_vec = [&](Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) ptrs.push_back(&v(i));
  };
  add_mat(net.w_in);
  add_mat(net.w_rec);
  add_vec(net.b_h);
  add_mat(net.w_out);
  add_vec(net.b_o);
  return ptrs;
}

inline std::vector<double> grad_entries(const Gradients& g) {
  std::vector<double> out;
  auto add_mat = [&](const Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    }
  };
  auto add_vec = [&](const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  };
  add_mat(g.w_in);
  add_mat(g.w_rec);
  add_vec(g.b_h);
  add_mat(g.w_out);
  add_vec(g.b_o);
  return out;
}

// Central finite difference of an arbitrary scalar-valued closure over the
// network's parameters.
inline std::vector<double> fd_param_gradient(
    const ElmanRnn& net, const std::function<double(const ElmanRnn&)>& loss,
    double step) {
  ElmanRnn work = net;
  std::vector<double*> ptrs = param_ptrs(work);
  std::vector<double> grad(ptrs.size());
  for (std::size_t i = 0; i < ptrs.size(); ++i) {
    const double saved = *ptrs[i];
    *ptrs[i] = saved + step;
    const double up = loss(work);
    *ptrs[i] = saved - step;
    const double down = loss(work);
    *ptrs[i] = saved;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

inline Mat fd_input_gradient(const ElmanRnn& net, const Mat& x,
                             const Mat& target, double step) {
  Mat work = x;
  Mat grad(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double saved = work(r, c);
      work(r, c) = saved + step;
      const double up = rnn_loss(rnn_forward(net, work).y, target);
      work(r, c) = saved - step;
      const double down = rnn_loss(rnn_forward(net, work).y, target);
      work(r, c) = saved;
      grad(r, c) = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

// Recursive reference for truncated BPTT: each loss term walks its own
// detached chain, re-deriving the chain rule independently of the library's
// sweep implementations.
inline Gradients detached_bptt_oracle(const ElmanRnn& net, const Mat& x,
                                      const Mat& target,
                                      std::size_t truncation) {
  const ForwardResult fwd = rnn_forward(net, x);
  Gradients g = Gradients::zeros_like(net);
  std::function<void(const Vec&, Eigen::Index, std::size_t)> descend =
      [&](const Vec& dh, Eigen::Index s, std::size_t hops_left) {
        const Vec h = fwd.h.row(s).transpose();
        const Vec phi =
            (dh.array() * h.array() * (1.0 - h.array())).matrix();
        g.w_in += phi * x.row(s);
        g.b_h += phi;
        if (s > 0) {
          g.w_rec += phi * fwd.h.row(s - 1);
          if (hops_left > 0) {
            descend(net.w_rec.transpose() * phi, s - 1, hops_left - 1);
          }
        }
      };
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const Vec dy = 2.0 * (fwd.y.row(t) - target.row(t)).transpose();
    g.w_out += dy * fwd.h.row(t);
    g.b_o += dy;
    descend(net.w_out.transpose() * dy, t, truncation);
  }
  return g;
}

// Loss of the detached computation graph: when unrolling the loss term at
// frame t, the hidden state `truncation + 1` links back is frozen at the
// base parameters' value. Finite differences over this function are an
// independent check of the truncated gradients.
inline double detached_loss(const ElmanRnn& net, const Mat& base_h,
                            const Mat& x, const Mat& target,
                            std::size_t truncation) {
  auto sigmoid = [](const Vec& z) {
    return Vec(z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); }));
  };
  double loss = 0.0;
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const Eigen::Index first =
        std::max<Eigen::Index>(0, t - static_cast<Eigen::Index>(truncation));
    Vec h = first == 0 ? Vec(Vec::Zero(net.hidden_dim()))
                       : Vec(base_h.row(first - 1).transpose());
    for (Eigen::Index s = first; s <= t; ++s) {
      h = sigmoid(net.w_in * x.row(s).transpose() + net.w_rec * h + net.b_h);
    }
    loss += (net.w_out * h + net.b_o - target.row(t).transpose()).squaredNorm();
  }
  return loss;
}

// Exhaustive best-split search over every feature and every midpoint
// between consecutive distinct values, with two-pass SSE computation.
struct OracleSplit {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double sse_total = std::numeric_limits<double>::infinity();
};

inline double two_pass_sse(const Mat& y, const std::vector<int>& rows) {
  if (rows.empty()) return 0.0;
  Vec mean = Vec::Zero(y.cols());
  for (int r : rows) mean += y.row(r).transpose();
  mean /= static_cast<double>(rows.size());
  double sse = 0.0;
  for (int r : rows) sse += (y.row(r).transpose() - mean).squaredNorm();
  return sse;
}

inline OracleSplit exhaustive_best_split(const Mat& x, const Mat& y,
                                         int min_leaf) {
  OracleSplit best;
  const int n = static_cast<int>(x.rows());
  for (int f = 0; f < x.cols(); ++f) {
    std::vector<double> vals(n);
    for (int r = 0; r < n; ++r) vals[r] = x(r, f);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      const double thr = 0.5 * (vals[k] + vals[k + 1]);
      if (!(vals[k] < thr && thr <= vals[k + 1])) continue;
      std::vector<int> left, right;
      for (int r = 0; r < n; ++r) {
        (x(r, f) < thr ? left : right).push_back(r);
      }
      if (static_cast<int>(left.size()) < min_leaf ||
          static_cast<int>(right.size()) < min_leaf) {
        continue;
      }
      const double sse = two_pass_sse(y, left) + two_pass_sse(y, right);
      if (sse < best.sse_total) {
        best.found = true;
        best.feature = f;
        best.threshold = thr;
        best.sse_total = sse;
      }
    }
  }
  return best;
}

// Dense Cholesky solve of the same normal equations.
inline Vec dense_solve_oracle(const BandedSystem& sys) {
  const Mat a = banded_to_dense(sys);
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericError("dense oracle: factorization failed");
  }
  return llt.solve(sys.rhs);
}

}  // namespace rnnpf::testing
