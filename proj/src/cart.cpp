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

#include "rnnpf/cart.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace rnnpf {

namespace {

using json = nlohmann::ordered_json;

// Guards against accepting splits whose gain is pure floating-point residue
// (e.g. on constant-target nodes).
constexpr double kRelGainTol = 1e-12;

struct Builder {
  const Mat& ling;
  const Mat& targets;
  const CartConfig& cfg;
  std::vector<CartModel::Node> nodes;
  std::vector<int> order;  // frame indices, partitioned in place

  int build(int begin, int end, int depth) {
    const int n = end - begin;
    Vec sum = Vec::Zero(targets.cols());
    double sumsq = 0.0;
    for (int i = begin; i < end; ++i) {
      sum += targets.row(order[i]).transpose();
      sumsq += targets.row(order[i]).squaredNorm();
    }
    const double node_sse = sumsq - sum.squaredNorm() / n;
    const double gain_tol = kRelGainTol * std::max(1.0, sumsq);

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = 0.0;
    if (depth < cfg.max_depth && n >= 2 * cfg.min_leaf && node_sse > gain_tol) {
      find_best_split(begin, end, node_sse, sum, sumsq, gain_tol,
                      &best_feature, &best_threshold, &best_gain);
    }

    const int index = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (best_feature < 0) {
      make_leaf(index, begin, end, sum);
      return index;
    }

    const auto mid = std::stable_partition(
        order.begin() + begin, order.begin() + end,
        [&](int i) { return ling(i, best_feature) < best_threshold; });
    const int split = static_cast<int>(mid - order.begin());
    nodes[index].feature = best_feature;
    nodes[index].threshold = best_threshold;
    const int left = build(begin, split, depth + 1);
    const int right = build(split, end, depth + 1);
    nodes[index].left = left;
    nodes[index].right = right;
    return index;
  }

  void find_best_split(int begin, int end, double node_sse, const Vec& sum,
                       double sumsq, double gain_tol, int* best_feature,
                       double* best_threshold, double* best_gain) {
    const int n = end - begin;
    std::vector<int> sorted(order.begin() + begin, order.begin() + end);
    Vec left_sum(targets.cols());
    for (int f = 0; f < static_cast<int>(ling.cols()); ++f) {
      std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
        return ling(a, f) < ling(b, f);
      });
      left_sum.setZero();
      double left_sumsq = 0.0;
      for (int i = 0; i + 1 < n; ++i) {
        left_sum += targets.row(sorted[i]).transpose();
        left_sumsq += targets.row(sorted[i]).squaredNorm();
        const double lo = ling(sorted[i], f);
        const double hi = ling(sorted[i + 1], f);
        if (!(lo < hi)) continue;
        const int n_left = i + 1;
        const int n_right = n - n_left;
        if (n_left < cfg.min_leaf || n_right < cfg.min_leaf) continue;
        const double threshold = 0.5 * (lo + hi);
        if (!(lo < threshold && threshold <= hi)) continue;  // fp degenerate
        const double sse_left = left_sumsq - left_sum.squaredNorm() / n_left;
        const double sse_right =
            (sumsq - left_sumsq) - (sum - left_sum).squaredNorm() / n_right;
        const double gain = node_sse - sse_left - sse_right;
        // Candidates whose gains differ by less than gain_tol are treated as
        // tied so the documented tie-break (lowest feature, then lowest
        // threshold) holds even when two features induce the same partition
        // and the running sums round their equal gains apart.
        if (gain > gain_tol && gain > *best_gain + gain_tol) {
          *best_gain = gain;
          *best_feature = f;
          *best_threshold = threshold;
        }
      }
    }
  }

  void make_leaf(int index, int begin, int end, const Vec& sum) {
    const int n = end - begin;
    const Eigen::Index d = targets.cols();
    // When every member shares one target row (common for memorization-style
    // fits on deduplicated data), predict that row without averaging noise.
    bool uniform = true;
    for (int i = begin + 1; i < end && uniform; ++i) {
      uniform = targets.row(order[i]) == targets.row(order[begin]);
    }
    Vec mean = uniform ? Vec(targets.row(order[begin]).transpose())
                       : Vec(sum / n);
    Vec var = Vec::Zero(d);
    for (int i = begin; i < end; ++i) {
      var += (targets.row(order[i]).transpose() - mean)
                 .array()
                 .square()
                 .matrix();
    }
    var /= n;  // population variance
    Vec stddev(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      stddev[k] = std::max(cfg.std_floor, std::sqrt(std::max(0.0, var[k])));
    }
    nodes[index].mean = std::move(mean);
    nodes[index].stddev = std::move(stddev);
  }
};

json node_to_json(const CartModel& model, int index) {
  const CartModel::Node& node = model.nodes()[index];
  if (node.is_leaf()) {
    json j;
    j["mean"] = std::vector<double>(node.mean.data(),
                                    node.mean.data() + node.mean.size());
    j["std"] = std::vector<double>(node.stddev.data(),
                                   node.stddev.data() + node.stddev.size());
    return j;
  }
  json j;
  j["feature"] = node.feature;
  j["threshold"] = node.threshold;
  j["left"] = node_to_json(model, node.left);
  j["right"] = node_to_json(model, node.right);
  return j;
}

int node_from_json(const json& j, std::vector<CartModel::Node>& nodes) {
  const int index = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (j.contains("feature")) {
    nodes[index].feature = j.at("feature").get<int>();
    nodes[index].threshold = j.at("threshold").get<double>();
    const int left = node_from_json(j.at("left"), nodes);
    const int right = node_from_json(j.at("right"), nodes);
    nodes[index].left = left;
    nodes[index].right = right;
  } else {
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto std = j.at("std").get<std::vector<double>>();
    nodes[index].mean = Eigen::Map<const Vec>(mean.data(), mean.size());
    nodes[index].stddev = Eigen::Map<const Vec>(std.data(), std.size());
  }
  return index;
}

}  // namespace

void CartConfig::validate() const {
  if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
  if (!(std_floor > 0.0)) throw ConfigError("std_floor must be > 0");
}

int CartModel::route(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (nodes_.empty()) throw DataError("cart: empty model");
  if (x.size() != n_features_) {
    throw DataError("cart: input has " + std::to_string(x.size()) +
                    " features, model expects " + std::to_string(n_features_));
  }
  int i = 0;
  while (!nodes_[i].is_leaf()) {
    const Node& node = nodes_[i];
    i = x[node.feature] < node.threshold ? node.left : node.right;
  }
  return i;
}

CartModel train_cart(const Mat& ling, const Mat& targets,
                     const CartConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(ling.rows());
  if (targets.rows() != ling.rows()) {
    throw DataError("train_cart: ling and targets disagree on row count");
  }
  if (n < cfg.min_leaf) {
    throw DataError("train_cart: " + std::to_string(n) +
                    " frames is fewer than min_leaf");
  }
  if (!ling.allFinite() || !targets.allFinite()) {
    throw DataError("train_cart: non-finite input");
  }

  Builder builder{ling, targets, cfg, {}, std::vector<int>(n)};
  std::iota(builder.order.begin(), builder.order.end(), 0);
  builder.nodes.reserve(64);
  builder.build(0, n, 0);
  return CartModel(std::move(builder.nodes), static_cast<int>(ling.cols()),
                   static_cast<int>(targets.cols()), cfg);
}

std::pair<Vec, Vec> cart_predict(
    const CartModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const CartModel::Node& leaf = model.nodes()[model.route(x)];
  return {leaf.mean, leaf.stddev};
}

PredictedTrack cart_predict_utterance(const CartModel& m_static,
                                      const CartModel& m_delta,
                                      const Utterance& utt,
                                      const CartModel& aux) {
  const Eigen::Index t_count = utt.frames();
  const Eigen::Index d = m_static.dim();
  if (m_delta.dim() != d) throw DataError("static/delta models disagree on dim");
  if (aux.dim() != 2) throw DataError("aux model must have 2 outputs");

  PredictedTrack track;
  track.static_mean.resize(t_count, d);
  track.delta_mean.resize(t_count, d);
  track.static_std.resize(t_count, d);
  track.delta_std.resize(t_count, d);
  track.f0.resize(t_count);
  track.voicing.resize(t_count);
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const auto x = utt.ling.row(t);
    const CartModel::Node& ls = m_static.nodes()[m_static.route(x)];
    track.static_mean.row(t) = ls.mean.transpose();
    track.static_std.row(t) = ls.stddev.transpose();
    const CartModel::Node& ld = m_delta.nodes()[m_delta.route(x)];
    track.delta_mean.row(t) = ld.mean.transpose();
    track.delta_std.row(t) = ld.stddev.transpose();
    const CartModel::Node& la = aux.nodes()[aux.route(x)];
    track.f0[t] = la.mean[0];
    track.voicing[t] = la.mean[1];
  }
  return track;
}

StackedFrames stack_frames(const Corpus& corpus, const DeltaWindow& window) {
  const Eigen::Index total = corpus.total_frames();
  StackedFrames out;
  out.ling.resize(total, corpus.meta.ling_dim);
  out.statics.resize(total, corpus.meta.dim);
  out.deltas.resize(total, corpus.meta.dim);
  out.aux.resize(total, 2);
  Eigen::Index row = 0;
  for (const Utterance& u : corpus.utterances) {
    const Eigen::Index t = u.frames();
    out.ling.middleRows(row, t) = u.ling;
    out.statics.middleRows(row, t) = u.mcep_ref;
    out.deltas.middleRows(row, t) = compute_deltas(u.mcep_ref, window);
    out.aux.middleRows(row, t).col(0) = u.f0_ref;
    out.aux.middleRows(row, t).col(1) = u.voicing_ref;
    row += t;
  }
  return out;
}

void CartModel::save(const std::filesystem::path& path) const {
  json j;
  j["type"] = "cart";
  j["n_features"] = n_features_;
  j["dim"] = dim_;
  j["config"] = {{"max_depth", cfg_.max_depth},
                 {"min_leaf", cfg_.min_leaf},
                 {"std_floor", cfg_.std_floor}};
  j["root"] = node_to_json(*this, 0);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

CartModel CartModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (j.value("type", "") != "cart") {
    throw DataError(path.string() + ": not a cart model file");
  }
  CartConfig cfg;
  cfg.max_depth = j.at("config").at("max_depth").get<int>();
  cfg.min_leaf = j.at("config").at("min_leaf").get<int>();
  cfg.std_floor = j.at("config").at("std_floor").get<double>();
  std::vector<Node> nodes;
  node_from_json(j.at("root"), nodes);
  return CartModel(std::move(nodes), j.at("n_features").get<int>(),
                   j.at("dim").get<int>(), cfg);
}

}  // namespace rnnpf
