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

#include <cstdint>
#include <filesystem>
#include <limits>
#include <utility>
#include <vector>

#include "rnnpf/common.hpp"
#include "rnnpf/rng.hpp"

namespace rnnpf {

// Single-hidden-layer Elman network: logistic-sigmoid hidden units with a
// full recurrent connection, affine output layer.
struct ElmanRnn {
  Mat w_in;   // H x I
  Mat w_rec;  // H x H
  Vec b_h;    // H
  Mat w_out;  // O x H
  Vec b_o;    // O

  Eigen::Index input_dim() const { return w_in.cols(); }
  Eigen::Index hidden_dim() const { return w_in.rows(); }
  Eigen::Index output_dim() const { return w_out.rows(); }
  void validate() const;

  static ElmanRnn zeros(Eigen::Index input, Eigen::Index hidden,
                        Eigen::Index output);
  // Uniform(-scale, scale) weights from the given stream.
  static ElmanRnn init(Eigen::Index input, Eigen::Index hidden,
                       Eigen::Index output, double scale, Rng& rng);

  void save(const std::filesystem::path& path) const;
  static ElmanRnn load(const std::filesystem::path& path);
};

// Parameter-shaped accumulator used for gradients and ADAGRAD state.
struct Gradients {
  Mat w_in;
  Mat w_rec;
  Vec b_h;
  Mat w_out;
  Vec b_o;

  static Gradients zeros_like(const ElmanRnn& net);
  Gradients& operator+=(const Gradients& other);
  double max_abs() const;
};

// Error signals propagate through at most this many recurrent links (i.e.
// no truncation).
inline constexpr std::size_t kFullBptt =
    std::numeric_limits<std::size_t>::max();

struct ForwardResult {
  Mat y;  // T x O
  Mat h;  // T x H
};

// h_0 = 0; h_t = sigmoid(W_in x_t + W_rec h_{t-1} + b_h); y_t = W_out h_t + b_o.
ForwardResult rnn_forward(const ElmanRnn& net, const Mat& x);

// Sum of squared errors over all frames and output dimensions.
double rnn_loss(const Mat& y, const Mat& target);

// Loss and parameter gradients. `truncation` bounds how many recurrent links
// each frame's error signal may traverse on its way back; kFullBptt gives the
// exact full-sequence gradient.
std::pair<double, Gradients> rnn_bptt(const ElmanRnn& net, const Mat& x,
                                      const Mat& target,
                                      std::size_t truncation);

// Exact (untruncated) gradient of rnn_loss with respect to the inputs.
Mat rnn_input_gradients(const ElmanRnn& net, const Mat& x, const Mat& target);

// accum += g*g elementwise; params -= lr * g / (sqrt(accum) + eps).
void adagrad_update(ElmanRnn& params, const Gradients& g, Gradients& accum,
                    double lr, double eps);

struct TrainHyper {
  double lr = 0.01;
  int batch_size = 10;  // counted in utterances
  std::size_t truncation = 2;
  int max_epochs = 200;
  int patience = 5;
  double adagrad_eps = 1e-8;
  double init_scale = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;        // 1-based
  double train_sse = 0.0;
  double train_mse = 0.0;    // per frame-dimension, for readability
  double heldout_sse = 0.0;
  double heldout_mse = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  ElmanRnn net;  // parameters with the lowest recorded held-out loss
  std::vector<EpochStats> history;
  int best_epoch = 0;  // 0 when no epoch ran
  double best_heldout_sse = 0.0;
};

using SequencePair = std::pair<Mat, Mat>;  // (inputs T x I, targets T x O)

// Seeded-shuffled batches of whole utterances; per batch the gradients are
// summed in batch order and applied with one ADAGRAD step. Early stopping
// keeps the best held-out parameters and halts after `patience` epochs
// without improvement. No input or output normalization anywhere.
TrainResult train_rnn(const ElmanRnn& net0,
                      const std::vector<SequencePair>& train,
                      const std::vector<SequencePair>& heldout,
                      const TrainHyper& hyper);

void write_train_log(const std::filesystem::path& path,
                     const std::vector<EpochStats>& history);

}  // namespace rnnpf
