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

#include "rnnpf/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "json.hpp"
#include "rnnpf/rng.hpp"
#include "rnnpf/tsv.hpp"

namespace rnnpf {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Mean state duration of the geometric hold, in frames.
constexpr double kMeanStateDuration = 8.0;
constexpr double kVoicedProbability = 0.8;
constexpr double kF0Base = 4.7;       // log-Hz, ~110 Hz
constexpr double kF0StateStd = 0.2;
constexpr double kF0NoiseStd = 0.02;

std::vector<std::string> make_feature_names(const SynthConfig& cfg) {
  std::vector<std::string> names;
  names.reserve(cfg.ling_dim());
  for (int s = 0; s < cfg.n_states; ++s) {
    names.push_back("cur_s" + std::to_string(s));
  }
  for (int k = 1; k <= cfg.context_width; ++k) {
    for (int s = 0; s < cfg.n_states; ++s) {
      names.push_back("prev" + std::to_string(k) + "_s" + std::to_string(s));
    }
  }
  for (int k = 1; k <= cfg.context_width; ++k) {
    for (int s = 0; s < cfg.n_states; ++s) {
      names.push_back("next" + std::to_string(k) + "_s" + std::to_string(s));
    }
  }
  names.push_back("pos_state");
  names.push_back("pos_utt");
  return names;
}

std::vector<std::string> mcep_column_names(int dim) {
  std::vector<std::string> names;
  names.reserve(dim);
  for (int d = 0; d < dim; ++d) names.push_back("c" + std::to_string(d));
  return names;
}

json synth_config_to_json(const SynthConfig& cfg) {
  return json{{"n_utts", cfg.n_utts},
              {"frames_mean", cfg.frames_mean},
              {"frames_jitter", cfg.frames_jitter},
              {"n_states", cfg.n_states},
              {"context_width", cfg.context_width},
              {"noise_std", cfg.noise_std},
              {"smooth_alpha", cfg.smooth_alpha},
              {"dim", cfg.dim},
              {"seed", cfg.seed}};
}

SynthConfig synth_config_from_json(const json& j) {
  SynthConfig cfg;
  cfg.n_utts = j.at("n_utts").get<int>();
  cfg.frames_mean = j.at("frames_mean").get<int>();
  cfg.frames_jitter = j.at("frames_jitter").get<int>();
  cfg.n_states = j.at("n_states").get<int>();
  cfg.context_width = j.at("context_width").get<int>();
  cfg.noise_std = j.at("noise_std").get<double>();
  cfg.smooth_alpha = j.at("smooth_alpha").get<double>();
  cfg.dim = j.at("dim").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

void check_finite(const Mat& m, const std::string& what,
                  const std::string& id) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        throw DataError("utterance '" + id + "': non-finite value in " + what +
                        " at frame " + std::to_string(r));
      }
    }
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (n_utts < 1) throw ConfigError("n_utts must be >= 1");
  if (frames_mean < 1) throw ConfigError("frames_mean must be >= 1");
  if (frames_jitter < 0) throw ConfigError("frames_jitter must be >= 0");
  if (frames_jitter >= frames_mean) {
    throw ConfigError("frames_jitter must be < frames_mean");
  }
  if (n_states < 2) throw ConfigError("n_states must be >= 2");
  if (context_width < 0) throw ConfigError("context_width must be >= 0");
  if (noise_std < 0.0) throw ConfigError("noise_std must be >= 0");
  if (!(smooth_alpha > 0.0 && smooth_alpha < 1.0)) {
    throw ConfigError("smooth_alpha must be in (0, 1)");
  }
  if (dim < 1) throw ConfigError("dim must be >= 1");
}

Eigen::Index Corpus::total_frames() const {
  Eigen::Index n = 0;
  for (const Utterance& u : utterances) n += u.frames();
  return n;
}

void Corpus::validate() const {
  std::set<std::string> ids;
  for (const Utterance& u : utterances) {
    if (!ids.insert(u.id).second) {
      throw DataError("duplicate utterance id '" + u.id + "'");
    }
    const Eigen::Index t = u.frames();
    if (t < 1) throw DataError("utterance '" + u.id + "': empty (T=0)");
    if (u.ling.rows() != t || u.f0_ref.size() != t ||
        u.voicing_ref.size() != t) {
      throw DataError("utterance '" + u.id + "': frame counts disagree");
    }
    if (u.mcep_ref.cols() != meta.dim) {
      throw DataError("utterance '" + u.id + "': mcep dim " +
                      std::to_string(u.mcep_ref.cols()) + " != meta dim " +
                      std::to_string(meta.dim));
    }
    if (u.ling.cols() != meta.ling_dim) {
      throw DataError("utterance '" + u.id + "': ling dim " +
                      std::to_string(u.ling.cols()) + " != meta ling_dim " +
                      std::to_string(meta.ling_dim));
    }
    check_finite(u.ling, "ling", u.id);
    check_finite(u.mcep_ref, "mcep", u.id);
    check_finite(u.f0_ref, "f0", u.id);
    for (Eigen::Index r = 0; r < t; ++r) {
      const double v = u.voicing_ref[r];
      if (v != 0.0 && v != 1.0) {
        throw DataError("utterance '" + u.id + "': voicing not in {0,1} at frame " +
                        std::to_string(r));
      }
    }
  }
  if (static_cast<int>(meta.feature_names.size()) != meta.ling_dim) {
    throw DataError("meta: feature_names size != ling_dim");
  }
}

bool operator==(const Utterance& a, const Utterance& b) {
  return a.id == b.id && a.ling == b.ling && a.mcep_ref == b.mcep_ref &&
         a.f0_ref == b.f0_ref && a.voicing_ref == b.voicing_ref;
}

bool operator==(const Corpus& a, const Corpus& b) {
  if (a.meta.dim != b.meta.dim || a.meta.ling_dim != b.meta.ling_dim ||
      a.meta.feature_names != b.meta.feature_names ||
      a.meta.seed != b.meta.seed) {
    return false;
  }
  return a.utterances == b.utterances;
}

Corpus generate_synthetic_corpus(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int S = cfg.n_states;
  const int D = cfg.dim;
  const int L = cfg.ling_dim();
  const double p_stay = 1.0 - 1.0 / kMeanStateDuration;

  // Per-state targets, drawn once.
  Mat state_target(S, D);
  for (int s = 0; s < S; ++s) {
    for (int d = 0; d < D; ++d) state_target(s, d) = rng.gaussian();
  }
  std::vector<double> state_f0(S);
  std::vector<double> state_voiced(S);
  for (int s = 0; s < S; ++s) {
    const double g = rng.gaussian();
    const bool voiced = rng.uniform() < kVoicedProbability;
    state_voiced[s] = voiced ? 1.0 : 0.0;
    state_f0[s] = voiced ? kF0Base + kF0StateStd * g : 0.0;
  }

  Corpus corpus;
  corpus.meta.dim = D;
  corpus.meta.ling_dim = L;
  corpus.meta.feature_names = make_feature_names(cfg);
  corpus.meta.seed = cfg.seed;
  corpus.meta.generator = cfg;
  corpus.utterances.reserve(cfg.n_utts);

  for (int uidx = 0; uidx < cfg.n_utts; ++uidx) {
    int t_frames = cfg.frames_mean;
    if (cfg.frames_jitter > 0) {
      t_frames += static_cast<int>(
                      rng.uniform_below(2 * cfg.frames_jitter + 1)) -
                  cfg.frames_jitter;
    }
    t_frames = std::max(1, t_frames);

    // Segment the utterance: geometric hold per state, no self-transitions.
    std::vector<int> seg_state;
    std::vector<int> seg_len;
    int filled = 0;
    int prev_state = -1;
    while (filled < t_frames) {
      int s = static_cast<int>(rng.uniform_below(S));
      while (s == prev_state) s = static_cast<int>(rng.uniform_below(S));
      int len = 1;
      while (filled + len < t_frames && rng.uniform() < p_stay) ++len;
      seg_state.push_back(s);
      seg_len.push_back(len);
      filled += len;
      prev_state = s;
    }
    const int n_segs = static_cast<int>(seg_state.size());

    Utterance utt;
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "utt_%04d", uidx);
    utt.id = idbuf;
    utt.ling = Mat::Zero(t_frames, L);
    utt.mcep_ref = Mat::Zero(t_frames, D);
    utt.f0_ref = Vec::Zero(t_frames);
    utt.voicing_ref = Vec::Zero(t_frames);

    const double a = cfg.smooth_alpha;
    Vec smooth = state_target.row(seg_state[0]).transpose();
    double f0_noise = 0.0;
    int frame = 0;
    for (int seg = 0; seg < n_segs; ++seg) {
      const int s = seg_state[seg];
      const Vec target = state_target.row(s).transpose();
      for (int k = 0; k < seg_len[seg]; ++k, ++frame) {
        smooth = a * smooth + (1.0 - a) * target;
        for (int d = 0; d < D; ++d) {
          utt.mcep_ref(frame, d) =
              smooth[d] + cfg.noise_std * rng.gaussian();
        }
        f0_noise = a * f0_noise + (1.0 - a) * (kF0NoiseStd * rng.gaussian());
        if (state_voiced[s] != 0.0) {
          utt.f0_ref[frame] = state_f0[s] + f0_noise;
          utt.voicing_ref[frame] = 1.0;
        }

        // Linguistic encoding: current/previous/next state one-hots plus
        // positions.
        utt.ling(frame, s) = 1.0;
        for (int c = 1; c <= cfg.context_width; ++c) {
          if (seg - c >= 0) {
            utt.ling(frame, S * c + seg_state[seg - c]) = 1.0;
          }
          if (seg + c < n_segs) {
            utt.ling(frame, S * (cfg.context_width + c) + seg_state[seg + c]) =
                1.0;
          }
        }
        const int pos_state_col = S * (1 + 2 * cfg.context_width);
        utt.ling(frame, pos_state_col) =
            seg_len[seg] > 1 ? static_cast<double>(k) / (seg_len[seg] - 1)
                             : 0.5;
        utt.ling(frame, pos_state_col + 1) =
            t_frames > 1 ? static_cast<double>(frame) / (t_frames - 1) : 0.5;
      }
    }
    corpus.utterances.push_back(std::move(utt));
  }
  corpus.validate();
  return corpus;
}

void save_corpus(const Corpus& corpus, const fs::path& dir) {
  corpus.validate();
  std::error_code ec;
  fs::create_directories(dir / "utts", ec);
  if (ec) {
    throw DataError("cannot create directory " + (dir / "utts").string() +
                    ": " + ec.message());
  }

  json meta;
  meta["dim"] = corpus.meta.dim;
  meta["ling_dim"] = corpus.meta.ling_dim;
  meta["feature_names"] = corpus.meta.feature_names;
  meta["seed"] = corpus.meta.seed;
  meta["generator"] = corpus.meta.generator
                          ? synth_config_to_json(*corpus.meta.generator)
                          : json(nullptr);
  json ids = json::array();
  for (const Utterance& u : corpus.utterances) ids.push_back(u.id);
  meta["utterances"] = ids;
  {
    std::ofstream out(dir / "meta.json");
    if (!out) throw DataError("cannot write " + (dir / "meta.json").string());
    out << meta.dump(2) << '\n';
  }

  for (const Utterance& u : corpus.utterances) {
    write_tsv(dir / "utts" / (u.id + ".ling.tsv"), corpus.meta.feature_names,
              u.ling);
    write_tsv(dir / "utts" / (u.id + ".mcep.tsv"),
              mcep_column_names(corpus.meta.dim), u.mcep_ref);
    Mat aux(u.frames(), 2);
    aux.col(0) = u.f0_ref;
    aux.col(1) = u.voicing_ref;
    write_tsv(dir / "utts" / (u.id + ".aux.tsv"), {"f0", "voicing"}, aux);
  }
}

Corpus load_corpus(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  std::ifstream in(meta_path);
  if (!in) throw DataError("cannot open " + meta_path.string());
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(meta_path.string() + ": " + e.what());
  }

  Corpus corpus;
  try {
    corpus.meta.dim = meta.at("dim").get<int>();
    corpus.meta.ling_dim = meta.at("ling_dim").get<int>();
    corpus.meta.feature_names =
        meta.at("feature_names").get<std::vector<std::string>>();
    corpus.meta.seed = meta.at("seed").get<std::uint64_t>();
    if (!meta.at("generator").is_null()) {
      corpus.meta.generator = synth_config_from_json(meta.at("generator"));
    }
  } catch (const json::exception& e) {
    throw DataError(meta_path.string() + ": " + e.what());
  }

  const auto ids = meta.at("utterances").get<std::vector<std::string>>();
  for (const std::string& id : ids) {
    Utterance utt;
    utt.id = id;
    const fs::path ling_path = dir / "utts" / (id + ".ling.tsv");
    const TsvTable ling = read_tsv(ling_path);
    if (static_cast<int>(ling.columns.size()) != corpus.meta.ling_dim) {
      throw DataError(ling_path.string() + ": has " +
                      std::to_string(ling.columns.size()) +
                      " columns, meta ling_dim is " +
                      std::to_string(corpus.meta.ling_dim));
    }
    utt.ling = ling.values;

    const fs::path mcep_path = dir / "utts" / (id + ".mcep.tsv");
    const TsvTable mcep = read_tsv(mcep_path);
    if (static_cast<int>(mcep.columns.size()) != corpus.meta.dim) {
      throw DataError(mcep_path.string() + ": has " +
                      std::to_string(mcep.columns.size()) +
                      " columns, meta dim is " +
                      std::to_string(corpus.meta.dim));
    }
    utt.mcep_ref = mcep.values;

    const fs::path aux_path = dir / "utts" / (id + ".aux.tsv");
    const TsvTable aux = read_tsv(aux_path);
    if (aux.columns != std::vector<std::string>{"f0", "voicing"}) {
      throw DataError(aux_path.string() + ": expected columns f0, voicing");
    }
    if (aux.values.rows() != utt.mcep_ref.rows() ||
        utt.ling.rows() != utt.mcep_ref.rows()) {
      throw DataError("utterance '" + id + "': frame counts disagree across files");
    }
    utt.f0_ref = aux.values.col(0);
    utt.voicing_ref = aux.values.col(1);
    corpus.utterances.push_back(std::move(utt));
  }
  corpus.validate();
  return corpus;
}

std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus,
                                       double heldout_fraction,
                                       std::uint64_t seed) {
  if (!(heldout_fraction > 0.0 && heldout_fraction < 1.0)) {
    throw ConfigError("heldout_fraction must be in (0, 1)");
  }
  const std::size_t n = corpus.utterances.size();
  if (n < 2) {
    throw DataError("cannot split a corpus with fewer than 2 utterances");
  }
  std::size_t n_heldout = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(heldout_fraction * n)));
  n_heldout = std::min(n_heldout, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<bool> heldout(n, false);
  for (std::size_t i = 0; i < n_heldout; ++i) heldout[order[i]] = true;

  Corpus train, hold;
  train.meta = corpus.meta;
  hold.meta = corpus.meta;
  for (std::size_t i = 0; i < n; ++i) {
    (heldout[i] ? hold : train).utterances.push_back(corpus.utterances[i]);
  }
  return {std::move(train), std::move(hold)};
}

}  // namespace rnnpf
