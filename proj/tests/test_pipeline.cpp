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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "rnnpf/corpus.hpp"
#include "rnnpf/pipeline.hpp"
#include "rnnpf/rnn.hpp"

namespace fs = std::filesystem;
using namespace rnnpf;

namespace {

const fs::path kWork = "tmp_pipeline_test";

SynthConfig tiny_synth() {
  SynthConfig synth;
  synth.n_utts = 10;
  synth.frames_mean = 16;
  synth.frames_jitter = 3;
  synth.n_states = 6;
  synth.context_width = 1;
  synth.dim = 4;
  synth.seed = 51;
  return synth;
}

PipelineConfig tiny_pipeline(const fs::path& corpus_dir, const fs::path& out) {
  PipelineConfig cfg;
  cfg.corpus_dir = corpus_dir;
  cfg.out_dir = out;
  cfg.heldout_fraction = 0.2;
  cfg.seed = 1;
  cfg.rnn_hidden = 6;
  cfg.cart.min_leaf = 4;
  cfg.cart.max_depth = 6;
  cfg.rnn.max_epochs = 3;
  return cfg;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the installed binary; returns the process exit code.
int run_cli(const std::string& args) {
  const std::string cmd = std::string(RNNPF_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

struct CorpusOnDisk {
  fs::path dir;
  CorpusOnDisk() {
    dir = kWork / "corpus";
    if (!fs::exists(dir / "meta.json")) {
      fs::create_directories(kWork);
      save_corpus(generate_synthetic_corpus(tiny_synth()), dir);
    }
  }
};

}  // namespace

TEST_CASE("baseline pipeline produces a complete artifact tree") {
  const CorpusOnDisk corpus;
  const fs::path out = kWork / "baseline";
  fs::remove_all(out);
  PipelineConfig cfg = tiny_pipeline(corpus.dir, out);
  const PipelineResult result = run_pipeline(cfg);

  CHECK(result.train_utterances == 8);
  CHECK(result.heldout_utterances == 2);
  CHECK(result.raw.corpus_mcd > 0.0);
  CHECK_FALSE(result.smoothed.has_value());

  CHECK(fs::exists(out / "report.json"));
  CHECK(fs::exists(out / "report.txt"));
  CHECK(fs::exists(out / "split" / "train_ids.txt"));
  CHECK(fs::exists(out / "split" / "heldout_ids.txt"));
  CHECK(fs::exists(out / "models" / "cart_static.json"));
  CHECK(fs::exists(out / "models" / "cart_delta.json"));
  CHECK(fs::exists(out / "models" / "cart_aux.json"));
  CHECK_FALSE(fs::exists(out / "models" / "rnn.json"));

  const nlohmann::json j = nlohmann::json::parse(slurp(out / "report.json"));
  CHECK(j.at("config").at("mode") == "baseline");
  CHECK(j.at("config").at("mlpg") == "off");
  CHECK(j.at("results").at("raw_mcd").get<double>() ==
        doctest::Approx(result.raw.corpus_mcd).epsilon(1e-12));
  CHECK(j.at("data").at("heldout_utterances") == 2);
  CHECK_FALSE(j.at("results").contains("smoothed_mcd"));
  CHECK(slurp(out / "report.json") == result.report_json);
}

TEST_CASE("identical seeds give byte-identical reports") {
  const CorpusOnDisk corpus;
  PipelineConfig cfg = tiny_pipeline(corpus.dir, kWork / "rep_a");
  fs::remove_all(cfg.out_dir);
  cfg.mode = Mode::kRnnBasic;
  const PipelineResult a = run_pipeline(cfg);
  cfg.out_dir = kWork / "rep_b";
  fs::remove_all(cfg.out_dir);
  const PipelineResult b = run_pipeline(cfg);
  CHECK(a.report_json == b.report_json);
  CHECK(slurp(kWork / "rep_a" / "report.json") ==
        slurp(kWork / "rep_b" / "report.json"));
  CHECK(slurp(kWork / "rep_a" / "report.txt") ==
        slurp(kWork / "rep_b" / "report.txt"));

  cfg.out_dir = kWork / "rep_c";
  fs::remove_all(cfg.out_dir);
  cfg.seed = 2;
  const PipelineResult c = run_pipeline(cfg);
  CHECK(a.report_json != c.report_json);
}

TEST_CASE("rnn modes train a postfilter and can smooth hybrids") {
  const CorpusOnDisk corpus;
  PipelineConfig cfg = tiny_pipeline(corpus.dir, kWork / "rnn_hybrid");
  fs::remove_all(cfg.out_dir);
  cfg.mode = Mode::kRnnBasic;
  cfg.mlpg = MlpgMode::kHybrid;
  const PipelineResult result = run_pipeline(cfg);

  CHECK(fs::exists(cfg.out_dir / "models" / "rnn.json"));
  CHECK(fs::exists(cfg.out_dir / "logs" / "rnn_train.tsv"));
  REQUIRE(result.smoothed.has_value());
  CHECK(result.smoothed->corpus_mcd > 0.0);

  const nlohmann::json j = nlohmann::json::parse(result.report_json);
  CHECK(j.at("config").at("mode") == "rnn_basic");
  CHECK(j.at("config").at("mlpg") == "hybrid");
  CHECK(j.at("results").contains("smoothed_mcd"));
  CHECK(j.at("results").contains("rnn_best_epoch"));

  // Wall-clock timing stays out of the report (but lives in the train log).
  const std::string raw = result.report_json;
  CHECK(raw.find("seconds") == std::string::npos);
}

TEST_CASE("extended mode consumes wider inputs") {
  const CorpusOnDisk corpus;
  PipelineConfig cfg = tiny_pipeline(corpus.dir, kWork / "extended");
  fs::remove_all(cfg.out_dir);
  cfg.mode = Mode::kRnnExtended;
  const PipelineResult result = run_pipeline(cfg);
  CHECK(result.raw.corpus_mcd > 0.0);
  const SynthConfig synth = tiny_synth();
  const ElmanRnn net = ElmanRnn::load(cfg.out_dir / "models" / "rnn.json");
  CHECK(net.input_dim() == 4 * synth.dim + 2 + synth.ling_dim());
  CHECK(net.output_dim() == synth.dim);
}

TEST_CASE("baseline with hybrid smoothing is rejected") {
  const CorpusOnDisk corpus;
  PipelineConfig cfg = tiny_pipeline(corpus.dir, kWork / "invalid");
  cfg.mlpg = MlpgMode::kHybrid;
  CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);
}

TEST_CASE("stage failures name the failing stage") {
  PipelineConfig cfg = tiny_pipeline(kWork / "does_not_exist", kWork / "fail");
  CHECK_THROWS_WITH_AS(run_pipeline(cfg),
                       doctest::Contains("stage load-corpus"), DataError);
}

TEST_CASE("mode and mlpg parsing round-trips and rejects junk") {
  CHECK(mode_from_string("baseline") == Mode::kBaseline);
  CHECK(mode_from_string("rnn_basic") == Mode::kRnnBasic);
  CHECK(mode_from_string("rnn_extended") == Mode::kRnnExtended);
  CHECK(to_string(Mode::kRnnExtended) == "rnn_extended");
  CHECK(mlpg_from_string("hybrid") == MlpgMode::kHybrid);
  CHECK(to_string(MlpgMode::kOn) == "on");
  CHECK_THROWS_AS(mode_from_string("bogus"), ConfigError);
  CHECK_THROWS_AS(mlpg_from_string("bogus"), ConfigError);
}

TEST_CASE("comparison rendering lines up labeled runs") {
  const CorpusOnDisk corpus;
  const std::string a = slurp(kWork / "rep_a" / "report.json");
  PipelineConfig cfg = tiny_pipeline(corpus.dir, kWork / "cmp_on");
  fs::remove_all(cfg.out_dir);
  cfg.mlpg = MlpgMode::kOn;
  const PipelineResult on = run_pipeline(cfg);

  const std::string table =
      render_comparison({"basic", "baseline+mlpg"}, {a, on.report_json});
  CHECK(table.find("basic") != std::string::npos);
  CHECK(table.find("baseline+mlpg") != std::string::npos);
  CHECK(table.find("raw") != std::string::npos);
  CHECK_THROWS_AS(render_comparison({"one"}, {a, a}), ConfigError);
}

TEST_CASE("cli: full toolchain smoke test") {
  const fs::path cli = kWork / "cli";
  fs::remove_all(cli);
  fs::create_directories(cli);

  CHECK(run_cli("gen-corpus --out " + (cli / "corpus").string() +
                " --utts 8 --frames-mean 14 --frames-jitter 2 --states 5"
                " --context-width 1 --dim 3 --seed 9") == 0);
  CHECK(run_cli("split --corpus " + (cli / "corpus").string() + " --out " +
                (cli / "split").string() + " --fraction 0.25 --seed 3") == 0);
  CHECK(fs::exists(cli / "split" / "train" / "meta.json"));
  CHECK(fs::exists(cli / "split" / "heldout" / "meta.json"));

  CHECK(run_cli("train-cart --corpus " + (cli / "split" / "train").string() +
                " --out " + (cli / "models").string() +
                " --cart-min-leaf 2 --cart-max-depth 5") == 0);
  CHECK(run_cli("predict-cart --corpus " + (cli / "split" / "heldout").string() +
                " --models " + (cli / "models").string() + " --out " +
                (cli / "pred").string()) == 0);

  CHECK(run_cli("mcd --corpus " + (cli / "split" / "heldout").string() +
                " --tracks " + (cli / "pred").string() + " --out " +
                (cli / "mcd").string() + " --pred-means") == 0);
  CHECK(fs::exists(cli / "mcd" / "mcd.json"));
  CHECK(fs::exists(cli / "mcd" / "mcd.txt"));

  CHECK(run_cli("train-rnn --train " + (cli / "split" / "train").string() +
                " --heldout " + (cli / "split" / "heldout").string() +
                " --models " + (cli / "models").string() + " --out " +
                (cli / "models").string() +
                " --mode basic --hidden 4 --max-epochs 2") == 0);
  CHECK(fs::exists(cli / "models" / "rnn.json"));
  CHECK(run_cli("apply-rnn --corpus " + (cli / "split" / "heldout").string() +
                " --models " + (cli / "models").string() + " --out " +
                (cli / "post").string() + " --mode basic") == 0);

  CHECK(run_cli("mlpg --tracks " + (cli / "pred").string() + " --out " +
                (cli / "mlpg").string() + " --source cart") == 0);

  CHECK(run_cli("run-pipeline --corpus " + (cli / "corpus").string() +
                " --out " + (cli / "pipe").string() +
                " --mode rnn_basic --mlpg off --fraction 0.25 --seed 1"
                " --hidden 4 --max-epochs 2 --cart-min-leaf 2") == 0);
  CHECK(fs::exists(cli / "pipe" / "report.json"));
  CHECK(run_cli("report " + (cli / "pipe" / "report.json").string() +
                " --labels basic") == 0);
}

TEST_CASE("cli: error taxonomy maps to exit codes") {
  // Unknown flag: CLI parse error, exit 2.
  CHECK(run_cli("gen-corpus --no-such-flag") == 2);
  // Invalid configuration: exit 2.
  CHECK(run_cli("run-pipeline --corpus x --out y --mode baseline"
                " --mlpg hybrid") == 2);
  // Missing data: exit 3.
  CHECK(run_cli("train-cart --corpus " + (kWork / "missing").string() +
                " --out " + (kWork / "junk").string()) == 3);
  // No subcommand: parse error, exit 2.
  CHECK(run_cli("") == 2);
  // Help exits cleanly.
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("--version") == 0);
}
