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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rnnpf/cart.hpp"
#include "rnnpf/common.hpp"
#include "rnnpf/corpus.hpp"
#include "rnnpf/eval.hpp"
#include "rnnpf/features.hpp"
#include "rnnpf/mac.hpp"
#include "rnnpf/mlpg.hpp"
#include "rnnpf/pipeline.hpp"
#include "rnnpf/rnn.hpp"
#include "rnnpf/tsv.hpp"

namespace {

namespace fs = std::filesystem;
using namespace rnnpf;

void add_cart_options(CLI::App* cmd, CartConfig& cfg) {
  cmd->add_option("--cart-max-depth", cfg.max_depth, "Maximum tree depth");
  cmd->add_option("--cart-min-leaf", cfg.min_leaf, "Minimum frames per leaf");
  cmd->add_option("--cart-std-floor", cfg.std_floor,
                  "Lower bound on leaf standard deviations");
}

void add_rnn_options(CLI::App* cmd, TrainHyper& hyper, int* hidden) {
  cmd->add_option("--lr", hyper.lr, "Learning rate");
  cmd->add_option("--batch-size", hyper.batch_size, "Utterances per batch");
  cmd->add_option("--truncation", hyper.truncation,
                  "BPTT truncation horizon (recurrent links per error term)");
  cmd->add_option("--max-epochs", hyper.max_epochs, "Epoch limit");
  cmd->add_option("--patience", hyper.patience,
                  "Epochs without held-out improvement before stopping");
  cmd->add_option("--adagrad-eps", hyper.adagrad_eps,
                  "Denominator offset in the adaptive step");
  cmd->add_option("--init-scale", hyper.init_scale,
                  "Half-width of the uniform weight initialization");
  if (hidden != nullptr) {
    cmd->add_option("--hidden", *hidden, "Hidden layer width");
  }
}

Mode postfilter_mode_from_string(const std::string& s) {
  if (s == "basic") return Mode::kRnnBasic;
  if (s == "extended") return Mode::kRnnExtended;
  throw ConfigError("unknown postfilter mode '" + s +
                    "' (expected basic|extended)");
}

struct LoadedModels {
  CartModel statics, deltas, aux;
};

LoadedModels load_carts(const fs::path& dir) {
  return LoadedModels{CartModel::load(dir / "cart_static.json"),
                      CartModel::load(dir / "cart_delta.json"),
                      CartModel::load(dir / "cart_aux.json")};
}

std::vector<PredictedTrack> predict_corpus(const LoadedModels& m,
                                           const Corpus& corpus) {
  std::vector<PredictedTrack> tracks;
  tracks.reserve(corpus.utterances.size());
  for (const Utterance& u : corpus.utterances) {
    tracks.push_back(cart_predict_utterance(m.statics, m.deltas, u, m.aux));
  }
  return tracks;
}

int run(int argc, char** argv) {
  CLI::App app{
      "rnnpf: recurrent-network postfiltering toolkit for statistical "
      "parametric speech synthesis (CART acoustic model, Elman RNN "
      "postfilter, MLPG smoothing, MCD evaluation, joint training)"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Read options from an INI-style file (sections per "
                 "subcommand); command-line flags take precedence");
  app.set_version_flag("--version", "rnnpf 0.1.0");

  // gen-corpus -------------------------------------------------------------
  auto* gen = app.add_subcommand(
      "gen-corpus", "Generate the seeded synthetic corpus");
  SynthConfig synth;
  fs::path gen_out;
  gen->add_option("--out", gen_out, "Corpus output directory")->required();
  gen->add_option("--utts", synth.n_utts, "Number of utterances");
  gen->add_option("--frames-mean", synth.frames_mean,
                  "Mean utterance length in frames");
  gen->add_option("--frames-jitter", synth.frames_jitter,
                  "Uniform +- jitter on utterance length");
  gen->add_option("--states", synth.n_states, "Number of pseudo-phone states");
  gen->add_option("--context-width", synth.context_width,
                  "Context states encoded on each side");
  gen->add_option("--noise-std", synth.noise_std,
                  "Observation noise standard deviation");
  gen->add_option("--smooth-alpha", synth.smooth_alpha,
                  "One-pole smoothing coefficient");
  gen->add_option("--dim", synth.dim, "Cepstral dimensionality D");
  gen->add_option("--seed", synth.seed, "Corpus seed");
  gen->callback([&] {
    const Corpus corpus = generate_synthetic_corpus(synth);
    save_corpus(corpus, gen_out);
    std::printf("wrote %zu utterances (%lld frames, D=%d, L=%d) to %s\n",
                corpus.utterances.size(),
                static_cast<long long>(corpus.total_frames()), corpus.meta.dim,
                corpus.meta.ling_dim, gen_out.string().c_str());
  });

  // split ------------------------------------------------------------------
  auto* split = app.add_subcommand(
      "split", "Partition a corpus into train/heldout corpora");
  fs::path split_corpus_dir, split_out;
  double split_fraction = 0.2;
  std::uint64_t split_seed = 1;
  split->add_option("--corpus", split_corpus_dir, "Corpus directory")
      ->required();
  split->add_option("--out", split_out, "Output directory")->required();
  split->add_option("--fraction", split_fraction, "Held-out fraction");
  split->add_option("--seed", split_seed, "Shuffle seed");
  split->callback([&] {
    const Corpus corpus = load_corpus(split_corpus_dir);
    const auto [train, hold] =
        split_corpus(corpus, split_fraction, substream(split_seed, "split"));
    save_corpus(train, split_out / "train");
    save_corpus(hold, split_out / "heldout");
    std::printf("train: %zu utts, heldout: %zu utts\n",
                train.utterances.size(), hold.utterances.size());
  });

  // train-cart -------------------------------------------------------------
  auto* tcart = app.add_subcommand(
      "train-cart", "Train static/delta/aux regression trees on a corpus");
  fs::path tcart_corpus, tcart_out;
  CartConfig tcart_cfg;
  tcart->add_option("--corpus", tcart_corpus, "Training corpus directory")
      ->required();
  tcart->add_option("--out", tcart_out, "Model output directory")->required();
  add_cart_options(tcart, tcart_cfg);
  tcart->callback([&] {
    const Corpus corpus = load_corpus(tcart_corpus);
    DeltaWindow window;
    const StackedFrames stacked = stack_frames(corpus, window);
    fs::create_directories(tcart_out);
    train_cart(stacked.ling, stacked.statics, tcart_cfg)
        .save(tcart_out / "cart_static.json");
    train_cart(stacked.ling, stacked.deltas, tcart_cfg)
        .save(tcart_out / "cart_delta.json");
    train_cart(stacked.ling, stacked.aux, tcart_cfg)
        .save(tcart_out / "cart_aux.json");
    std::printf("wrote cart_static/cart_delta/cart_aux to %s\n",
                tcart_out.string().c_str());
  });

  // predict-cart -----------------------------------------------------------
  auto* pcart = app.add_subcommand(
      "predict-cart", "Re-predict a corpus with trained trees");
  fs::path pcart_corpus, pcart_models, pcart_out;
  pcart->add_option("--corpus", pcart_corpus, "Corpus directory")->required();
  pcart->add_option("--models", pcart_models, "Directory with cart_*.json")
      ->required();
  pcart->add_option("--out", pcart_out, "Track output directory")->required();
  pcart->callback([&] {
    const Corpus corpus = load_corpus(pcart_corpus);
    const LoadedModels models = load_carts(pcart_models);
    fs::create_directories(pcart_out);
    const auto tracks = predict_corpus(models, corpus);
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      save_track(tracks[i],
                 pcart_out / (corpus.utterances[i].id + ".pred.tsv"));
    }
    std::printf("wrote %zu predicted tracks to %s\n", tracks.size(),
                pcart_out.string().c_str());
  });

  // train-rnn --------------------------------------------------------------
  auto* trnn = app.add_subcommand(
      "train-rnn", "Train the postfilter on CART re-predictions");
  fs::path trnn_train, trnn_heldout, trnn_models, trnn_out;
  std::string trnn_mode = "basic";
  TrainHyper trnn_hyper;
  int trnn_hidden = 64;
  trnn->add_option("--train", trnn_train, "Training corpus directory")
      ->required();
  trnn->add_option("--heldout", trnn_heldout, "Held-out corpus directory")
      ->required();
  trnn->add_option("--models", trnn_models, "Directory with cart_*.json")
      ->required();
  trnn->add_option("--out", trnn_out, "Output directory")->required();
  trnn->add_option("--mode", trnn_mode, "Postfilter inputs: basic|extended");
  trnn->add_option("--seed", trnn_hyper.seed, "Training seed");
  add_rnn_options(trnn, trnn_hyper, &trnn_hidden);
  trnn->callback([&] {
    const Mode mode = postfilter_mode_from_string(trnn_mode);
    const Corpus train = load_corpus(trnn_train);
    const Corpus hold = load_corpus(trnn_heldout);
    const LoadedModels models = load_carts(trnn_models);
    const auto train_tracks = predict_corpus(models, train);
    const auto hold_tracks = predict_corpus(models, hold);
    std::vector<SequencePair> pairs, hpairs;
    for (std::size_t i = 0; i < train_tracks.size(); ++i) {
      pairs.emplace_back(
          postfilter_inputs(mode, train_tracks[i], train.utterances[i].ling),
          train.utterances[i].mcep_ref);
    }
    for (std::size_t i = 0; i < hold_tracks.size(); ++i) {
      hpairs.emplace_back(
          postfilter_inputs(mode, hold_tracks[i], hold.utterances[i].ling),
          hold.utterances[i].mcep_ref);
    }
    Rng init_rng(substream(trnn_hyper.seed, "init"));
    const ElmanRnn net0 =
        ElmanRnn::init(pairs.front().first.cols(), trnn_hidden,
                       train.meta.dim, trnn_hyper.init_scale, init_rng);
    const TrainResult res = train_rnn(net0, pairs, hpairs, trnn_hyper);
    fs::create_directories(trnn_out);
    res.net.save(trnn_out / "rnn.json");
    write_train_log(trnn_out / "rnn_train.tsv", res.history);
    std::printf("best epoch %d, held-out SSE %.6g (%zu epochs run)\n",
                res.best_epoch, res.best_heldout_sse, res.history.size());
  });

  // apply-rnn --------------------------------------------------------------
  auto* arnn = app.add_subcommand(
      "apply-rnn", "Run the postfilter over a corpus's CART predictions");
  fs::path arnn_corpus, arnn_models, arnn_out;
  std::string arnn_mode = "basic";
  arnn->add_option("--corpus", arnn_corpus, "Corpus directory")->required();
  arnn->add_option("--models", arnn_models,
                   "Directory with cart_*.json and rnn.json")
      ->required();
  arnn->add_option("--out", arnn_out, "Output directory")->required();
  arnn->add_option("--mode", arnn_mode, "Postfilter inputs: basic|extended");
  arnn->callback([&] {
    const Mode mode = postfilter_mode_from_string(arnn_mode);
    const Corpus corpus = load_corpus(arnn_corpus);
    const LoadedModels models = load_carts(arnn_models);
    const ElmanRnn net = ElmanRnn::load(arnn_models / "rnn.json");
    fs::create_directories(arnn_out);
    std::vector<std::string> columns;
    for (int d = 0; d < corpus.meta.dim; ++d) {
      columns.push_back("c" + std::to_string(d));
    }
    const auto tracks = predict_corpus(models, corpus);
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      const Mat y =
          rnn_forward(net, postfilter_inputs(mode, tracks[i],
                                             corpus.utterances[i].ling))
              .y;
      write_tsv(arnn_out / (corpus.utterances[i].id + ".post.tsv"), columns,
                y);
    }
    std::printf("wrote %zu postfiltered tracks to %s\n", tracks.size(),
                arnn_out.string().c_str());
  });

  // mlpg -------------------------------------------------------------------
  auto* mlpg_cmd = app.add_subcommand(
      "mlpg", "Smooth predicted tracks via the banded trajectory solve");
  fs::path mlpg_tracks, mlpg_post, mlpg_out;
  std::string mlpg_source = "cart";
  mlpg_cmd->add_option("--tracks", mlpg_tracks,
                       "Directory with <id>.pred.tsv files")
      ->required();
  mlpg_cmd->add_option("--out", mlpg_out, "Output directory")->required();
  mlpg_cmd->add_option("--source", mlpg_source,
                       "Static means: cart | hybrid (postfilter means with "
                       "CART stds)");
  mlpg_cmd->add_option("--post", mlpg_post,
                       "Directory with <id>.post.tsv (required for hybrid)");
  mlpg_cmd->callback([&] {
    MlpgSource source;
    if (mlpg_source == "cart") {
      source = MlpgSource::kCartMeans;
    } else if (mlpg_source == "hybrid") {
      source = MlpgSource::kRnnMeansCartStds;
      if (mlpg_post.empty()) {
        throw ConfigError("mlpg: --post is required with --source hybrid");
      }
    } else {
      throw ConfigError("mlpg: unknown source '" + mlpg_source + "'");
    }
    DeltaWindow window;
    fs::create_directories(mlpg_out);
    std::size_t count = 0;
    std::vector<fs::path> inputs;
    for (const auto& entry : fs::directory_iterator(mlpg_tracks)) {
      const std::string name = entry.path().filename().string();
      if (name.size() > 9 && name.ends_with(".pred.tsv")) {
        inputs.push_back(entry.path());
      }
    }
    std::sort(inputs.begin(), inputs.end());
    for (const auto& path : inputs) {
      std::string id = path.filename().string();
      id.resize(id.size() - 9);  // strip ".pred.tsv"
      const PredictedTrack track = load_track(path);
      Mat statics;
      if (source == MlpgSource::kRnnMeansCartStds) {
        const TsvTable post = read_tsv(mlpg_post / (id + ".post.tsv"));
        statics = post.values;
      }
      const Mat smoothed = mlpg_smooth(
          track, window, source,
          source == MlpgSource::kRnnMeansCartStds ? &statics : nullptr);
      std::vector<std::string> columns;
      for (Eigen::Index d = 0; d < smoothed.cols(); ++d) {
        columns.push_back("c" + std::to_string(d));
      }
      write_tsv(mlpg_out / (id + ".mlpg.tsv"), columns, smoothed);
      ++count;
    }
    if (count == 0) {
      throw DataError("mlpg: no .pred.tsv files found in " +
                      mlpg_tracks.string());
    }
    std::printf("smoothed %zu tracks into %s\n", count,
                mlpg_out.string().c_str());
  });

  // mcd --------------------------------------------------------------------
  auto* mcd_cmd = app.add_subcommand(
      "mcd", "Mel cepstral distortion of predicted tracks vs a corpus");
  fs::path mcd_corpus_dir, mcd_tracks, mcd_out;
  std::string mcd_suffix = ".post.tsv";
  bool mcd_pred_means = false;
  bool mcd_include_c0 = false;
  mcd_cmd->add_option("--corpus", mcd_corpus_dir, "Reference corpus directory")
      ->required();
  mcd_cmd->add_option("--tracks", mcd_tracks, "Predicted track directory")
      ->required();
  mcd_cmd->add_option("--out", mcd_out, "Report output directory")->required();
  mcd_cmd->add_option("--suffix", mcd_suffix,
                      "Track filename suffix after the utterance id");
  mcd_cmd->add_flag("--pred-means", mcd_pred_means,
                    "Treat tracks as <id>.pred.tsv and score the CART "
                    "static means");
  mcd_cmd->add_flag("--include-c0", mcd_include_c0,
                    "Include coefficient 0 in the distortion");
  mcd_cmd->callback([&] {
    const Corpus corpus = load_corpus(mcd_corpus_dir);
    std::vector<Mat> tracks;
    for (const Utterance& u : corpus.utterances) {
      if (mcd_pred_means) {
        tracks.push_back(
            load_track(mcd_tracks / (u.id + ".pred.tsv")).static_mean);
      } else {
        tracks.push_back(read_tsv(mcd_tracks / (u.id + mcd_suffix)).values);
      }
    }
    const McdReport report = mcd_corpus(corpus, tracks, mcd_include_c0);
    fs::create_directories(mcd_out);
    write_mcd_report(mcd_out / "mcd.json", mcd_out / "mcd.txt", report);
    std::printf("corpus MCD: %.4f dB over %lld frames\n", report.corpus_mcd,
                static_cast<long long>(report.total_frames));
  });

  // mac-train --------------------------------------------------------------
  auto* mac = app.add_subcommand(
      "mac-train", "Joint CART+postfilter training via auxiliary coordinates");
  fs::path mac_train_dir, mac_heldout_dir, mac_out;
  MacConfig mac_cfg;
  bool mac_include_c0 = false;
  std::vector<double> mac_mu;
  mac->add_option("--train", mac_train_dir, "Training corpus directory")
      ->required();
  mac->add_option("--heldout", mac_heldout_dir, "Held-out corpus directory")
      ->required();
  mac->add_option("--out", mac_out, "Output directory")->required();
  mac->add_option("--mu", mac_mu, "Ascending penalty schedule");
  mac->add_option("--outer-iters", mac_cfg.outer_iters,
                  "Alternations (w-step, z-step) per mu");
  mac->add_option("--z-lr", mac_cfg.z_step.lr, "Z-step initial step size");
  mac->add_option("--z-steps", mac_cfg.z_step.max_steps,
                  "Z-step descent iterations per utterance");
  mac->add_option("--z-backtrack", mac_cfg.z_step.backtrack,
                  "Z-step backtracking shrink factor");
  mac->add_option("--seed", mac_cfg.rnn_hyper.seed, "Training seed");
  mac->add_flag("--include-c0", mac_include_c0,
                "Include coefficient 0 in the reported MCD");
  add_cart_options(mac, mac_cfg.cart_cfg);
  add_rnn_options(mac, mac_cfg.rnn_hyper, &mac_cfg.rnn_hidden);
  mac->callback([&] {
    if (!mac_mu.empty()) mac_cfg.mu_schedule = mac_mu;
    const Corpus train = load_corpus(mac_train_dir);
    const Corpus hold = load_corpus(mac_heldout_dir);
    DeltaWindow window;
    const MacResult res =
        mac_train(train, hold, mac_cfg, window, mac_include_c0);
    fs::create_directories(mac_out);
    write_mac_history(mac_out / "mac_history.tsv", res.state.history);
    res.state.cart_static.save(mac_out / "cart_static.json");
    res.state.cart_delta.save(mac_out / "cart_delta.json");
    res.state.rnn.save(mac_out / "rnn.json");
    nlohmann::ordered_json j;
    j["mac_heldout_mcd"] = res.mac_heldout.corpus_mcd;
    j["independent_heldout_mcd"] = res.independent_heldout.corpus_mcd;
    j["heldout_frames"] = res.mac_heldout.total_frames;
    j["include_c0"] = mac_include_c0;
    std::ofstream out(mac_out / "mac_report.json");
    if (!out) throw DataError("cannot write mac_report.json");
    out << j.dump(2) << "\n";
    std::printf(
        "held-out MCD: %.4f dB (joint) vs %.4f dB (independent)\n",
        res.mac_heldout.corpus_mcd, res.independent_heldout.corpus_mcd);
  });

  // run-pipeline -----------------------------------------------------------
  auto* pipe = app.add_subcommand(
      "run-pipeline", "Full experiment: split, train, predict, evaluate");
  PipelineConfig pcfg;
  std::string pipe_mode = "baseline";
  std::string pipe_mlpg = "off";
  bool pipe_no_tracks = false;
  pipe->add_option("--corpus", pcfg.corpus_dir, "Corpus directory")
      ->required();
  pipe->add_option("--out", pcfg.out_dir, "Output directory")->required();
  pipe->add_option("--mode", pipe_mode,
                   "Experiment arm: baseline|rnn_basic|rnn_extended");
  pipe->add_option("--mlpg", pipe_mlpg, "Trajectory smoothing: off|on|hybrid");
  pipe->add_option("--fraction", pcfg.heldout_fraction, "Held-out fraction");
  pipe->add_option("--seed", pcfg.seed, "Root seed (split/init/shuffle)");
  pipe->add_flag("--include-c0", pcfg.include_c0,
                 "Include coefficient 0 in the distortion");
  pipe->add_flag("--no-save-tracks", pipe_no_tracks,
                 "Skip writing per-utterance track files");
  add_cart_options(pipe, pcfg.cart);
  add_rnn_options(pipe, pcfg.rnn, &pcfg.rnn_hidden);
  pipe->callback([&] {
    pcfg.mode = mode_from_string(pipe_mode);
    pcfg.mlpg = mlpg_from_string(pipe_mlpg);
    pcfg.save_tracks = !pipe_no_tracks;
    const PipelineResult res = run_pipeline(pcfg);
    std::printf("raw MCD: %.4f dB", res.raw.corpus_mcd);
    if (res.smoothed) {
      std::printf(", smoothed MCD: %.4f dB", res.smoothed->corpus_mcd);
    }
    std::printf(" (report in %s)\n",
                (pcfg.out_dir / "report.json").string().c_str());
  });

  // report -----------------------------------------------------------------
  auto* rep = app.add_subcommand(
      "report", "Render a side-by-side comparison of pipeline reports");
  std::vector<fs::path> rep_files;
  std::vector<std::string> rep_labels;
  rep->add_option("reports", rep_files, "report.json files")
      ->required()
      ->expected(-1);
  rep->add_option("--labels", rep_labels,
                  "Row labels (default: parent directory names)");
  rep->callback([&] {
    std::vector<std::string> labels = rep_labels;
    std::vector<std::string> bodies;
    for (std::size_t i = 0; i < rep_files.size(); ++i) {
      std::ifstream in(rep_files[i]);
      if (!in) throw DataError("cannot read " + rep_files[i].string());
      std::string body((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
      bodies.push_back(std::move(body));
      if (labels.size() <= i) {
        labels.push_back(rep_files[i].parent_path().filename().string());
      }
    }
    std::fputs(render_comparison(labels, bodies).c_str(), stdout);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const rnnpf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return rnnpf::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
