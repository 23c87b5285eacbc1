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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "rnnpf/corpus.hpp"
#include "rnnpf/rng.hpp"

namespace fs = std::filesystem;
using namespace rnnpf;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.n_utts = 6;
  cfg.frames_mean = 20;
  cfg.frames_jitter = 4;
  cfg.n_states = 5;
  cfg.context_width = 1;
  cfg.dim = 3;
  cfg.seed = 11;
  return cfg;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("tmp_corpus_test") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("substreams decorrelate by label and root") {
  CHECK(substream(1, "init") != substream(1, "split"));
  CHECK(substream(1, "init") != substream(2, "init"));
  CHECK(substream(1, "init") == substream(1, "init"));
}

TEST_CASE("rng is reproducible and shuffle is a permutation") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(7);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<int> w = v;
  c.shuffle(w);
  std::vector<int> sorted = w;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == v);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("generator is deterministic in the seed") {
  const SynthConfig cfg = small_config();
  const Corpus a = generate_synthetic_corpus(cfg);
  const Corpus b = generate_synthetic_corpus(cfg);
  CHECK(a == b);

  SynthConfig other = cfg;
  other.seed = cfg.seed + 1;
  const Corpus c = generate_synthetic_corpus(other);
  CHECK_FALSE(a == c);
}

TEST_CASE("generated corpus has consistent shapes and value ranges") {
  const SynthConfig cfg = small_config();
  const Corpus corpus = generate_synthetic_corpus(cfg);
  corpus.validate();

  CHECK(corpus.meta.dim == cfg.dim);
  CHECK(corpus.meta.ling_dim == cfg.ling_dim());
  CHECK(static_cast<int>(corpus.utterances.size()) == cfg.n_utts);
  CHECK(static_cast<int>(corpus.meta.feature_names.size()) == cfg.ling_dim());

  for (const Utterance& utt : corpus.utterances) {
    const Eigen::Index t_len = utt.frames();
    CHECK(t_len >= 1);
    CHECK(t_len >= cfg.frames_mean - cfg.frames_jitter);
    CHECK(t_len <= cfg.frames_mean + cfg.frames_jitter);
    CHECK(utt.ling.rows() == t_len);
    CHECK(utt.ling.cols() == cfg.ling_dim());
    CHECK(utt.mcep_ref.cols() == cfg.dim);
    CHECK(utt.f0_ref.size() == t_len);
    CHECK(utt.voicing_ref.size() == t_len);
    for (Eigen::Index t = 0; t < t_len; ++t) {
      const double v = utt.voicing_ref(t);
      CHECK((v == 0.0 || v == 1.0));
      if (v == 0.0) CHECK(utt.f0_ref(t) == 0.0);
      if (v == 1.0) CHECK(utt.f0_ref(t) > 0.0);
      // Current-state one-hot block sums to one; every feature is in [0, 1].
      const int s_block = cfg.n_states;
      CHECK(utt.ling.row(t).head(s_block).sum() == doctest::Approx(1.0));
      for (Eigen::Index j = 0; j < utt.ling.cols(); ++j) {
        CHECK(utt.ling(t, j) >= 0.0);
        CHECK(utt.ling(t, j) <= 1.0);
      }
    }
  }
}

TEST_CASE("save and load round-trip the corpus exactly") {
  const fs::path dir = fresh_dir("roundtrip");
  const Corpus corpus = generate_synthetic_corpus(small_config());
  save_corpus(corpus, dir);
  const Corpus loaded = load_corpus(dir);
  CHECK(loaded == corpus);
  CHECK(loaded.meta.generator.has_value());
}

TEST_CASE("load reports malformed data as DataError") {
  const fs::path dir = fresh_dir("malformed");
  const Corpus corpus = generate_synthetic_corpus(small_config());
  save_corpus(corpus, dir);

  SUBCASE("missing directory") {
    CHECK_THROWS_AS(load_corpus(dir / "nope"), DataError);
  }
  SUBCASE("corrupt numeric cell") {
    // Damage the first data cell of the first utterance file.
    fs::path victim;
    for (const auto& entry : fs::directory_iterator(dir / "utts")) {
      victim = entry.path();
      break;
    }
    REQUIRE_FALSE(victim.empty());
    std::ifstream in(victim);
    std::string header, line, rest;
    std::getline(in, header);
    std::getline(in, line);
    std::string tail((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    in.close();
    line.replace(0, 1, "x");
    std::ofstream out(victim, std::ios::trunc);
    out << header << '\n' << line << '\n' << tail;
    out.close();
    CHECK_THROWS_AS(load_corpus(dir), DataError);
  }
}

TEST_CASE("synth config validation rejects bad values") {
  SynthConfig cfg = small_config();
  SUBCASE("n_utts") { cfg.n_utts = 0; }
  SUBCASE("frames_mean") { cfg.frames_mean = 0; }
  SUBCASE("jitter too large") { cfg.frames_jitter = cfg.frames_mean; }
  SUBCASE("n_states") { cfg.n_states = 0; }
  SUBCASE("context_width") { cfg.context_width = -1; }
  SUBCASE("noise_std") { cfg.noise_std = -0.1; }
  SUBCASE("smooth_alpha low") { cfg.smooth_alpha = 0.0; }
  SUBCASE("smooth_alpha high") { cfg.smooth_alpha = 1.0; }
  SUBCASE("dim") { cfg.dim = 0; }
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("split keeps order, partitions utterances, and is seeded") {
  const SynthConfig cfg = small_config();
  Corpus corpus = generate_synthetic_corpus(cfg);

  const auto [train, hold] = split_corpus(corpus, 0.25, 99);
  CHECK(train.utterances.size() + hold.utterances.size() ==
        corpus.utterances.size());
  // floor(0.25 * 6) = 1 held-out utterance.
  CHECK(hold.utterances.size() == 1);

  std::set<std::string> seen;
  for (const auto& u : train.utterances) seen.insert(u.id);
  for (const auto& u : hold.utterances) seen.insert(u.id);
  CHECK(seen.size() == corpus.utterances.size());

  // Relative order within each half matches the original corpus order.
  auto index_of = [&](const std::string& id) {
    for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
      if (corpus.utterances[i].id == id) return i;
    }
    return corpus.utterances.size();
  };
  for (std::size_t i = 1; i < train.utterances.size(); ++i) {
    CHECK(index_of(train.utterances[i - 1].id) <
          index_of(train.utterances[i].id));
  }

  const auto [train2, hold2] = split_corpus(corpus, 0.25, 99);
  CHECK(train2 == train);
  CHECK(hold2 == hold);
}

TEST_CASE("split clamps so both halves are non-empty") {
  SynthConfig cfg = small_config();
  cfg.n_utts = 2;
  const Corpus corpus = generate_synthetic_corpus(cfg);
  const auto [train, hold] = split_corpus(corpus, 0.9, 1);
  CHECK(train.utterances.size() == 1);
  CHECK(hold.utterances.size() == 1);
}

TEST_CASE("split validates the fraction and the corpus size") {
  const Corpus corpus = generate_synthetic_corpus(small_config());
  CHECK_THROWS_AS(split_corpus(corpus, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split_corpus(corpus, 1.0, 1), ConfigError);

  SynthConfig one = small_config();
  one.n_utts = 1;
  const Corpus tiny = generate_synthetic_corpus(one);
  CHECK_THROWS_AS(split_corpus(tiny, 0.5, 1), DataError);
}

TEST_CASE("single-frame utterances use midpoint position features") {
  SynthConfig cfg = small_config();
  cfg.n_utts = 2;
  cfg.frames_mean = 1;
  cfg.frames_jitter = 0;
  const Corpus corpus = generate_synthetic_corpus(cfg);
  for (const Utterance& utt : corpus.utterances) {
    REQUIRE(utt.frames() == 1);
    const Eigen::Index l = utt.ling.cols();
    CHECK(utt.ling(0, l - 2) == 0.5);  // position in state
    CHECK(utt.ling(0, l - 1) == 0.5);  // position in utterance
  }
}
