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

#include "rnnpf/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <utility>

#include "json.hpp"
#include "rnnpf/tsv.hpp"

namespace rnnpf {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError("stage " + name + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError("stage " + name + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError("stage " + name + ": " + e.what());
  }
}

void write_id_list(const fs::path& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const Utterance& u : corpus.utterances) out << u.id << "\n";
}

std::vector<std::string> static_columns(Eigen::Index dim) {
  std::vector<std::string> names;
  for (Eigen::Index d = 0; d < dim; ++d) {
    names.push_back("c" + std::to_string(d));
  }
  return names;
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kBaseline: return "baseline";
    case Mode::kRnnBasic: return "rnn_basic";
    case Mode::kRnnExtended: return "rnn_extended";
  }
  throw ConfigError("unknown mode value");
}

std::string to_string(MlpgMode mlpg) {
  switch (mlpg) {
    case MlpgMode::kOff: return "off";
    case MlpgMode::kOn: return "on";
    case MlpgMode::kHybrid: return "hybrid";
  }
  throw ConfigError("unknown mlpg value");
}

Mode mode_from_string(const std::string& s) {
  if (s == "baseline") return Mode::kBaseline;
  if (s == "rnn_basic") return Mode::kRnnBasic;
  if (s == "rnn_extended") return Mode::kRnnExtended;
  throw ConfigError("unknown mode '" + s +
                    "' (expected baseline|rnn_basic|rnn_extended)");
}

MlpgMode mlpg_from_string(const std::string& s) {
  if (s == "off") return MlpgMode::kOff;
  if (s == "on") return MlpgMode::kOn;
  if (s == "hybrid") return MlpgMode::kHybrid;
  throw ConfigError("unknown mlpg setting '" + s +
                    "' (expected off|on|hybrid)");
}

void PipelineConfig::validate() const {
  if (corpus_dir.empty()) throw ConfigError("pipeline: corpus dir not set");
  if (out_dir.empty()) throw ConfigError("pipeline: output dir not set");
  if (!(heldout_fraction > 0.0 && heldout_fraction < 1.0)) {
    throw ConfigError("pipeline: heldout_fraction must lie in (0, 1)");
  }
  if (rnn_hidden < 1) throw ConfigError("pipeline: rnn_hidden must be >= 1");
  if (mlpg == MlpgMode::kHybrid && mode == Mode::kBaseline) {
    throw ConfigError(
        "pipeline: hybrid MLPG needs a postfilter mode (it reuses the "
        "postfilter's static means)");
  }
  window.validate();
  cart.validate();
  rnn.validate();
}

Mat postfilter_inputs(Mode mode, const PredictedTrack& track,
                      const Mat& ling) {
  switch (mode) {
    case Mode::kRnnBasic:
      return assemble_basic_inputs(track);
    case Mode::kRnnExtended:
      return assemble_extended_inputs(track, ling);
    case Mode::kBaseline:
      break;
  }
  throw ConfigError("baseline mode has no postfilter inputs");
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();

  const Corpus corpus =
      stage("load-corpus", [&] { return load_corpus(cfg.corpus_dir); });

  fs::create_directories(cfg.out_dir / "split");
  fs::create_directories(cfg.out_dir / "models");
  fs::create_directories(cfg.out_dir / "logs");
  if (cfg.save_tracks) {
    fs::create_directories(cfg.out_dir / "pred");
    fs::create_directories(cfg.out_dir / "post");
    if (cfg.mlpg != MlpgMode::kOff) {
      fs::create_directories(cfg.out_dir / "mlpg");
    }
  }

  auto [train, hold] = stage("split", [&] {
    auto parts =
        split_corpus(corpus, cfg.heldout_fraction, substream(cfg.seed, "split"));
    write_id_list(cfg.out_dir / "split" / "train_ids.txt", parts.first);
    write_id_list(cfg.out_dir / "split" / "heldout_ids.txt", parts.second);
    return parts;
  });

  struct Carts {
    CartModel statics, deltas, aux;
  };
  const Carts carts = stage("train-cart", [&] {
    const StackedFrames stacked = stack_frames(train, cfg.window);
    Carts c{train_cart(stacked.ling, stacked.statics, cfg.cart),
            train_cart(stacked.ling, stacked.deltas, cfg.cart),
            train_cart(stacked.ling, stacked.aux, cfg.cart)};
    c.statics.save(cfg.out_dir / "models" / "cart_static.json");
    c.deltas.save(cfg.out_dir / "models" / "cart_delta.json");
    c.aux.save(cfg.out_dir / "models" / "cart_aux.json");
    return c;
  });

  // Re-predict both splits with the trained trees: train-side tracks feed the
  // postfilter's training data, held-out tracks are what we evaluate.
  auto predict_split = [&](const Corpus& part) {
    std::vector<PredictedTrack> tracks;
    tracks.reserve(part.utterances.size());
    for (const Utterance& u : part.utterances) {
      tracks.push_back(
          cart_predict_utterance(carts.statics, carts.deltas, u, carts.aux));
    }
    return tracks;
  };
  const auto [train_tracks, hold_tracks] = stage("predict-cart", [&] {
    auto tt = predict_split(train);
    auto ht = predict_split(hold);
    if (cfg.save_tracks) {
      for (std::size_t i = 0; i < ht.size(); ++i) {
        save_track(ht[i],
                   cfg.out_dir / "pred" / (hold.utterances[i].id + ".pred.tsv"));
      }
    }
    return std::make_pair(std::move(tt), std::move(ht));
  });

  std::optional<ElmanRnn> net;
  std::optional<TrainResult> train_res;
  if (cfg.mode != Mode::kBaseline) {
    train_res = stage("train-rnn", [&] {
      TrainHyper hyper = cfg.rnn;
      hyper.seed = cfg.seed;
      std::vector<SequencePair> pairs, hpairs;
      for (std::size_t i = 0; i < train.utterances.size(); ++i) {
        pairs.emplace_back(postfilter_inputs(cfg.mode, train_tracks[i],
                                             train.utterances[i].ling),
                           train.utterances[i].mcep_ref);
      }
      for (std::size_t i = 0; i < hold.utterances.size(); ++i) {
        hpairs.emplace_back(postfilter_inputs(cfg.mode, hold_tracks[i],
                                              hold.utterances[i].ling),
                            hold.utterances[i].mcep_ref);
      }
      Rng init_rng(substream(hyper.seed, "init"));
      const ElmanRnn net0 =
          ElmanRnn::init(pairs.front().first.cols(), cfg.rnn_hidden,
                         train.meta.dim, hyper.init_scale, init_rng);
      TrainResult res = train_rnn(net0, pairs, hpairs, hyper);
      res.net.save(cfg.out_dir / "models" / "rnn.json");
      write_train_log(cfg.out_dir / "logs" / "rnn_train.tsv", res.history);
      return res;
    });
    net = train_res->net;
  }

  const std::vector<Mat> raw_tracks = stage("apply-rnn", [&] {
    std::vector<Mat> tracks;
    for (std::size_t i = 0; i < hold.utterances.size(); ++i) {
      if (cfg.mode == Mode::kBaseline) {
        tracks.push_back(hold_tracks[i].static_mean);
      } else {
        tracks.push_back(
            rnn_forward(*net, postfilter_inputs(cfg.mode, hold_tracks[i],
                                                hold.utterances[i].ling))
                .y);
      }
      if (cfg.save_tracks) {
        write_tsv(cfg.out_dir / "post" / (hold.utterances[i].id + ".post.tsv"),
                  static_columns(train.meta.dim), tracks.back());
      }
    }
    return tracks;
  });

  std::optional<std::vector<Mat>> smoothed_tracks;
  if (cfg.mlpg != MlpgMode::kOff) {
    smoothed_tracks = stage("mlpg", [&] {
      std::vector<Mat> tracks;
      for (std::size_t i = 0; i < hold.utterances.size(); ++i) {
        const bool hybrid = cfg.mlpg == MlpgMode::kHybrid;
        tracks.push_back(mlpg_smooth(
            hold_tracks[i], cfg.window,
            hybrid ? MlpgSource::kRnnMeansCartStds : MlpgSource::kCartMeans,
            hybrid ? &raw_tracks[i] : nullptr));
        if (cfg.save_tracks) {
          write_tsv(
              cfg.out_dir / "mlpg" / (hold.utterances[i].id + ".mlpg.tsv"),
              static_columns(train.meta.dim), tracks.back());
        }
      }
      return tracks;
    });
  }

  PipelineResult result;
  result.train_utterances = static_cast<int>(train.utterances.size());
  result.heldout_utterances = static_cast<int>(hold.utterances.size());
  stage("mcd", [&] {
    result.raw = mcd_corpus(hold, raw_tracks, cfg.include_c0);
    if (smoothed_tracks) {
      result.smoothed = mcd_corpus(hold, *smoothed_tracks, cfg.include_c0);
    }
    return 0;
  });

  stage("report", [&] {
    ordered_json j;
    j["tool"] = "rnnpf";
    ordered_json jc;
    jc["mode"] = to_string(cfg.mode);
    jc["mlpg"] = to_string(cfg.mlpg);
    jc["seed"] = cfg.seed;
    jc["heldout_fraction"] = cfg.heldout_fraction;
    jc["include_c0"] = cfg.include_c0;
    jc["rnn_hidden"] = cfg.rnn_hidden;
    jc["delta_window"] = cfg.window.coeffs;
    jc["cart"] = {{"max_depth", cfg.cart.max_depth},
                  {"min_leaf", cfg.cart.min_leaf},
                  {"std_floor", cfg.cart.std_floor}};
    jc["rnn"] = {{"lr", cfg.rnn.lr},
                 {"batch_size", cfg.rnn.batch_size},
                 {"truncation", cfg.rnn.truncation},
                 {"max_epochs", cfg.rnn.max_epochs},
                 {"patience", cfg.rnn.patience},
                 {"adagrad_eps", cfg.rnn.adagrad_eps},
                 {"init_scale", cfg.rnn.init_scale}};
    j["config"] = std::move(jc);
    ordered_json jd;
    jd["dim"] = train.meta.dim;
    jd["ling_dim"] = train.meta.ling_dim;
    jd["train_utterances"] = result.train_utterances;
    jd["heldout_utterances"] = result.heldout_utterances;
    jd["train_frames"] = train.total_frames();
    jd["heldout_frames"] = hold.total_frames();
    j["data"] = std::move(jd);
    ordered_json jr;
    jr["raw_mcd"] = result.raw.corpus_mcd;
    if (result.smoothed) jr["smoothed_mcd"] = result.smoothed->corpus_mcd;
    if (train_res) {
      jr["rnn_best_epoch"] = train_res->best_epoch;
      jr["rnn_best_heldout_sse"] = train_res->best_heldout_sse;
      jr["rnn_epochs_run"] = train_res->history.size();
    }
    j["results"] = std::move(jr);
    j["raw"] = ordered_json::parse(result.raw.to_json());
    if (result.smoothed) {
      j["smoothed"] = ordered_json::parse(result.smoothed->to_json());
    }
    result.report_json = j.dump(2) + "\n";

    std::ofstream out(cfg.out_dir / "report.json");
    if (!out) throw DataError("cannot write report.json");
    out << result.report_json;

    std::string text;
    char line[160];
    auto add = [&](const char* key, const std::string& value) {
      std::snprintf(line, sizeof(line), "%-16s %s\n", key, value.c_str());
      text += line;
    };
    add("mode", to_string(cfg.mode));
    add("mlpg", to_string(cfg.mlpg));
    add("train", std::to_string(result.train_utterances) + " utts, " +
                     std::to_string(train.total_frames()) + " frames");
    add("heldout", std::to_string(result.heldout_utterances) + " utts, " +
                       std::to_string(hold.total_frames()) + " frames");
    std::snprintf(line, sizeof(line), "%-16s %.4f dB\n", "raw MCD",
                  result.raw.corpus_mcd);
    text += line;
    if (result.smoothed) {
      std::snprintf(line, sizeof(line), "%-16s %.4f dB\n", "smoothed MCD",
                    result.smoothed->corpus_mcd);
      text += line;
    }
    text += "\nper-utterance (raw):\n" + result.raw.to_text();
    if (result.smoothed) {
      text += "\nper-utterance (smoothed):\n" + result.smoothed->to_text();
    }
    std::ofstream tout(cfg.out_dir / "report.txt");
    if (!tout) throw DataError("cannot write report.txt");
    tout << text;
    return 0;
  });

  return result;
}

std::string render_comparison(const std::vector<std::string>& labels,
                              const std::vector<std::string>& report_jsons) {
  if (labels.size() != report_jsons.size()) {
    throw ConfigError("comparison: label and report counts differ");
  }
  std::string text;
  char line[200];
  std::snprintf(line, sizeof(line), "%-20s %-14s %-8s %12s %14s\n", "run",
                "mode", "mlpg", "raw_mcd", "smoothed_mcd");
  text += line;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ordered_json j;
    try {
      j = ordered_json::parse(report_jsons[i]);
    } catch (const ordered_json::parse_error& e) {
      throw DataError("comparison: report " + labels[i] +
                      " is not valid JSON: " + e.what());
    }
    const std::string mode = j.at("config").at("mode").get<std::string>();
    const std::string mlpg = j.at("config").at("mlpg").get<std::string>();
    const double raw = j.at("results").at("raw_mcd").get<double>();
    std::string smoothed = "-";
    if (j.at("results").contains("smoothed_mcd")) {
      std::snprintf(line, sizeof(line), "%.4f",
                    j.at("results").at("smoothed_mcd").get<double>());
      smoothed = line;
    }
    std::snprintf(line, sizeof(line), "%-20s %-14s %-8s %12.4f %14s\n",
                  labels[i].c_str(), mode.c_str(), mlpg.c_str(), raw,
                  smoothed.c_str());
    text += line;
  }
  return text;
}

}  // namespace rnnpf
