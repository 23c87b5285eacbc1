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
#include <optional>
#include <string>
#include <vector>

#include "rnnpf/cart.hpp"
#include "rnnpf/common.hpp"
#include "rnnpf/corpus.hpp"
#include "rnnpf/eval.hpp"
#include "rnnpf/features.hpp"
#include "rnnpf/mlpg.hpp"
#include "rnnpf/rnn.hpp"

namespace rnnpf {

enum class Mode { kBaseline, kRnnBasic, kRnnExtended };
enum class MlpgMode { kOff, kOn, kHybrid };

std::string to_string(Mode mode);
std::string to_string(MlpgMode mlpg);
Mode mode_from_string(const std::string& s);
MlpgMode mlpg_from_string(const std::string& s);

struct PipelineConfig {
  std::filesystem::path corpus_dir;
  std::filesystem::path out_dir;
  Mode mode = Mode::kBaseline;
  MlpgMode mlpg = MlpgMode::kOff;
  double heldout_fraction = 0.2;
  std::uint64_t seed = 1;
  int rnn_hidden = 64;
  bool include_c0 = false;
  bool save_tracks = true;
  DeltaWindow window;
  CartConfig cart;
  TrainHyper rnn;  // rnn.seed is overridden by the pipeline seed

  void validate() const;
};

struct PipelineResult {
  McdReport raw;                    // unsmoothed MCD of the mode's own track
  std::optional<McdReport> smoothed;  // present when mlpg != off
  int train_utterances = 0;
  int heldout_utterances = 0;
  std::string report_json;  // exact bytes written to out/report.json
};

// Inputs the postfilter consumes for the given mode; `ling` is only used in
// extended mode.
Mat postfilter_inputs(Mode mode, const PredictedTrack& track, const Mat& ling);

// Full experiment: split -> CART training -> re-prediction -> postfilter
// training (rnn modes) -> held-out prediction -> optional MLPG -> MCD.
// Writes models, logs, per-utterance tracks, and report.{json,txt} under
// cfg.out_dir. Every stage failure is rethrown with the stage name prefixed.
PipelineResult run_pipeline(const PipelineConfig& cfg);

// Side-by-side rendering of several pipeline reports (rows = runs).
std::string render_comparison(const std::vector<std::string>& labels,
                              const std::vector<std::string>& report_jsons);

}  // namespace rnnpf
