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
#include <utility>
#include <vector>

#include "rnnpf/common.hpp"
#include "rnnpf/corpus.hpp"
#include "rnnpf/features.hpp"

namespace rnnpf {

struct CartConfig {
  int max_depth = 12;
  int min_leaf = 8;          // minimum frames per leaf
  double std_floor = 1e-3;   // lower bound on leaf standard deviations

  void validate() const;
};

// Vector-output binary regression tree. Internal nodes route "left iff
// feature < threshold"; leaves carry per-dimension sample mean and
// population standard deviation (floored at std_floor).
class CartModel {
 public:
  struct Node {
    int feature = -1;       // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    Vec mean;               // leaf payload
    Vec stddev;

    bool is_leaf() const { return feature < 0; }
  };

  CartModel() = default;
  CartModel(std::vector<Node> nodes, int n_features, int dim, CartConfig cfg)
      : nodes_(std::move(nodes)), n_features_(n_features), dim_(dim),
        cfg_(cfg) {}

  const std::vector<Node>& nodes() const { return nodes_; }
  int n_features() const { return n_features_; }
  int dim() const { return dim_; }
  const CartConfig& config() const { return cfg_; }

  // Index of the leaf node x routes to.
  int route(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  void save(const std::filesystem::path& path) const;
  static CartModel load(const std::filesystem::path& path);

 private:
  std::vector<Node> nodes_;  // nodes_[0] is the root
  int n_features_ = 0;
  int dim_ = 0;
  CartConfig cfg_;
};

// Greedy top-down growth maximizing the reduction in total squared error to
// the node mean (summed over all target dimensions). Split candidates are
// midpoints between consecutive distinct sorted feature values; ties break
// toward the lowest feature index, then the lowest threshold.
CartModel train_cart(const Mat& ling, const Mat& targets,
                     const CartConfig& cfg);

std::pair<Vec, Vec> cart_predict(const CartModel& model,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& x);

// Per-frame prediction over one utterance. m_static supplies the static
// means/stds, m_delta (trained on windowed reference deltas) the delta
// means/stds, and the 2-output aux model the f0/voicing streams.
PredictedTrack cart_predict_utterance(const CartModel& m_static,
                                      const CartModel& m_delta,
                                      const Utterance& utt,
                                      const CartModel& aux);

// Stacks all frames of a corpus: (ling, mcep statics, windowed deltas,
// [f0 voicing]). Shared by training and the joint-training loop.
struct StackedFrames {
  Mat ling;
  Mat statics;
  Mat deltas;
  Mat aux;
};
StackedFrames stack_frames(const Corpus& corpus, const DeltaWindow& window);

}  // namespace rnnpf
