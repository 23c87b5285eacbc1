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

#include "rnnpf/cart.hpp"
#include "rnnpf/common.hpp"
#include "rnnpf/corpus.hpp"
#include "rnnpf/eval.hpp"
#include "rnnpf/mlpg.hpp"
#include "rnnpf/rnn.hpp"

namespace rnnpf {

// Joint CART+RNN training with auxiliary coordinates: minimize
//   E(W, Z; mu) = ||f2(Z; W) - Y||^2 + mu ||f1(X; W) - Z||^2
// by alternating over the model parameters W and the coordinates Z while mu
// follows an increasing schedule.

struct ZStepConfig {
  double lr = 0.05;         // initial step size per descent iteration
  int max_steps = 10;       // descent iterations per utterance per call
  double backtrack = 0.5;   // step-size shrink factor
  int max_backtracks = 40;  // shrink attempts before giving up an iteration

  void validate() const;
};

struct MacConfig {
  std::vector<double> mu_schedule = {1.0, 4.0, 16.0};
  int outer_iters = 2;
  int rnn_hidden = 64;  // hidden width when initializing the baseline RNN
  ZStepConfig z_step;
  TrainHyper rnn_hyper;
  CartConfig cart_cfg;

  void validate() const;
};

struct MacHistoryRow {
  int phase = 0;          // 1-based index into mu_schedule
  double mu = 0.0;
  std::string step;       // "phase" | "w/cart" | "w/rnn" | "z"
  double objective = 0.0; // E = rnn_term + mu * penalty_term
  double rnn_term = 0.0;  // ||f2(Z) - Y||^2
  double penalty_term = 0.0;  // ||f1(X) - Z||^2, unweighted
};

struct MacState {
  std::vector<Mat> z;     // per utterance, T x 2D (statics+deltas space)
  std::vector<Mat> f1_x;  // cached CART predictions of X, same shapes as z
  CartModel cart_static;
  CartModel cart_delta;
  ElmanRnn rnn;
  double mu = 0.0;
  int phase = 0;
  std::vector<MacHistoryRow> history;
};

struct MacTerms {
  double rnn_term = 0.0;
  double penalty_term = 0.0;
  double objective = 0.0;
};

MacTerms mac_terms(const MacState& state, const std::vector<Mat>& y);

// E(W, Z; mu) summed over all utterances and frames.
double mac_objective(const MacState& state, const std::vector<Mat>& y);

// Per-utterance full-gradient descent on Z with backtracking step halving;
// a step is accepted only when the utterance objective does not increase, so
// E is non-increasing across the call.
MacState z_step(const MacState& state, const std::vector<Mat>& y,
                const MacConfig& cfg);

// Retrains both CARTs from scratch on targets Z (kept only if the penalty
// term strictly decreases) and continue-trains the RNN on (Z -> Y) pairs,
// warm-started and guarded so its term never increases. When held-out
// features/targets are supplied, the continuation early-stops on them —
// evaluated through the current CARTs, the same discipline the independent
// baseline uses — and is additionally kept only if it does not worsen the
// incumbent's held-out loss, making the starting parameters the epoch-zero
// early-stopping candidate. The training-term guard applies either way.
MacState w_step(const MacState& state, const std::vector<Mat>& x,
                const std::vector<Mat>& y, const MacConfig& cfg,
                const std::vector<Mat>* heldout_x = nullptr,
                const std::vector<Mat>* heldout_y = nullptr);

struct MacResult {
  MacState state;
  McdReport mac_heldout;          // jointly trained pair, held-out MCD
  McdReport independent_heldout;  // independently trained pair, same data
};

// Trains the independent baseline (CARTs + postfilter RNN), initializes
// Z = f1(X), then runs outer_iters alternations of (w_step, z_step) per mu.
// Held-out MCD of both the joint and the independent pair is evaluated the
// same way as the basic-postfilter pipeline, without MLPG.
MacResult mac_train(const Corpus& train, const Corpus& heldout,
                    const MacConfig& cfg, const DeltaWindow& window,
                    bool include_c0);

void write_mac_history(const std::filesystem::path& path,
                       const std::vector<MacHistoryRow>& history);
std::vector<MacHistoryRow> read_mac_history(const std::filesystem::path& path);

}  // namespace rnnpf
