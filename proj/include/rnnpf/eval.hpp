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

#include "rnnpf/common.hpp"
#include "rnnpf/corpus.hpp"

namespace rnnpf {

struct UtteranceMcd {
  std::string id;
  Eigen::Index frames = 0;
  double mcd = 0.0;  // frame mean for this utterance, dB
};

struct McdReport {
  std::vector<UtteranceMcd> per_utterance;
  double corpus_mcd = 0.0;  // frame-weighted mean over all utterances, dB
  Eigen::Index total_frames = 0;
  Eigen::Index dim = 0;
  bool include_c0 = false;

  std::string to_json() const;
  std::string to_text() const;
};

// (10/ln 10) * sqrt(2 * sum_d (ref_d - hyp_d)^2), with d starting at 1
// unless include_c0 selects the full range.
double mcd_frame(const Vec& ref, const Vec& hyp, bool include_c0);

// Frame-weighted corpus MCD of predicted static tracks against the corpus
// references; hyp_tracks[i] pairs with corpus.utterances[i].
McdReport mcd_corpus(const Corpus& corpus, const std::vector<Mat>& hyp_tracks,
                     bool include_c0);

void write_mcd_report(const std::filesystem::path& json_path,
                      const std::filesystem::path& text_path,
                      const McdReport& report);

}  // namespace rnnpf
