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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rnnpf/common.hpp"

namespace rnnpf {

// One frame-aligned utterance: linguistic features, reference cepstral
// statics, and the auxiliary f0/voicing streams. All matrices share the
// frame count T.
struct Utterance {
  std::string id;
  Mat ling;      // T x L
  Mat mcep_ref;  // T x D
  Vec f0_ref;    // T, log-Hz, 0 for unvoiced frames
  Vec voicing_ref;  // T, entries in {0, 1}

  Eigen::Index frames() const { return mcep_ref.rows(); }
};

// Configuration of the synthetic corpus generator. Utterances are built from
// a random walk over `n_states` phone-like states with geometric durations;
// each state carries a fixed cepstral target, and the frame trajectory is the
// state step function passed through a one-pole smoother plus white noise.
struct SynthConfig {
  int n_utts = 200;
  int frames_mean = 80;
  int frames_jitter = 16;
  int n_states = 20;
  int context_width = 2;
  double noise_std = 0.3;
  double smooth_alpha = 0.85;  // one-pole coefficient, in (0, 1)
  int dim = 25;                // cepstral order D
  std::uint64_t seed = 7;

  void validate() const;
  // State one-hots for current plus +-context_width neighbours, then the two
  // position features.
  int ling_dim() const { return n_states * (1 + 2 * context_width) + 2; }
};

struct CorpusMeta {
  int dim = 0;       // D
  int ling_dim = 0;  // L
  std::vector<std::string> feature_names;
  std::uint64_t seed = 0;
  std::optional<SynthConfig> generator;
};

struct Corpus {
  CorpusMeta meta;
  std::vector<Utterance> utterances;

  Eigen::Index total_frames() const;
  // Enforces shared dimensions, finiteness, unique ids, binary voicing.
  void validate() const;
};

bool operator==(const Utterance& a, const Utterance& b);
bool operator==(const Corpus& a, const Corpus& b);

// Deterministic in cfg.seed: two calls with equal configs produce equal
// corpora.
Corpus generate_synthetic_corpus(const SynthConfig& cfg);

// Directory layout: meta.json plus utts/<id>.{ling,mcep,aux}.tsv. Text floats
// carry 17 significant digits, so load(save(c)) == c bit-exactly.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

// Seeded shuffle, then exact partition into (train, heldout). The held-out
// count is max(1, floor(fraction * N)) clamped so both sides stay non-empty;
// each half keeps the original corpus order.
std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus,
                                       double heldout_fraction,
                                       std::uint64_t seed);

}  // namespace rnnpf
