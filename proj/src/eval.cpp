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

#include "rnnpf/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "json.hpp"

namespace rnnpf {

double mcd_frame(const Vec& ref, const Vec& hyp, bool include_c0) {
  if (ref.size() != hyp.size()) {
    throw DataError("mcd: frame dimensions differ");
  }
  const Eigen::Index start = include_c0 ? 0 : 1;
  if (ref.size() <= start) {
    throw DataError("mcd: no coefficients left after excluding c0");
  }
  const Eigen::Index n = ref.size() - start;
  const double sq =
      (ref.segment(start, n) - hyp.segment(start, n)).squaredNorm();
  return 10.0 / std::numbers::ln10 * std::sqrt(2.0 * sq);
}

McdReport mcd_corpus(const Corpus& corpus, const std::vector<Mat>& hyp_tracks,
                     bool include_c0) {
  if (hyp_tracks.size() != corpus.utterances.size()) {
    throw DataError("mcd: track count does not match corpus");
  }
  McdReport report;
  report.dim = corpus.meta.dim;
  report.include_c0 = include_c0;
  double total = 0.0;
  for (std::size_t i = 0; i < corpus.utterances.size(); ++i) {
    const Utterance& utt = corpus.utterances[i];
    const Mat& hyp = hyp_tracks[i];
    if (hyp.rows() != utt.mcep_ref.rows() || hyp.cols() != utt.mcep_ref.cols()) {
      throw DataError("mcd: utterance " + utt.id +
                      " has mismatched track shape");
    }
    double sum = 0.0;
    for (Eigen::Index t = 0; t < hyp.rows(); ++t) {
      sum += mcd_frame(utt.mcep_ref.row(t).transpose(), hyp.row(t).transpose(),
                       include_c0);
    }
    UtteranceMcd u;
    u.id = utt.id;
    u.frames = hyp.rows();
    u.mcd = sum / static_cast<double>(hyp.rows());
    report.per_utterance.push_back(std::move(u));
    total += sum;
    report.total_frames += hyp.rows();
  }
  if (report.total_frames == 0) throw DataError("mcd: corpus has no frames");
  report.corpus_mcd = total / static_cast<double>(report.total_frames);
  return report;
}

std::string McdReport::to_json() const {
  nlohmann::ordered_json j;
  j["metric"] = "mel_cepstral_distortion_db";
  j["dim"] = dim;
  j["include_c0"] = include_c0;
  j["total_frames"] = total_frames;
  j["corpus_mcd"] = corpus_mcd;
  nlohmann::ordered_json utts = nlohmann::ordered_json::array();
  for (const auto& u : per_utterance) {
    nlohmann::ordered_json e;
    e["id"] = u.id;
    e["frames"] = u.frames;
    e["mcd"] = u.mcd;
    utts.push_back(std::move(e));
  }
  j["utterances"] = std::move(utts);
  return j.dump(2) + "\n";
}

std::string McdReport::to_text() const {
  char line[160];
  std::string out;
  std::snprintf(line, sizeof(line), "%-12s %8s %10s\n", "utterance", "frames",
                "mcd_db");
  out += line;
  for (const auto& u : per_utterance) {
    std::snprintf(line, sizeof(line), "%-12s %8lld %10.4f\n", u.id.c_str(),
                  static_cast<long long>(u.frames), u.mcd);
    out += line;
  }
  std::snprintf(line, sizeof(line), "%-12s %8lld %10.4f\n", "corpus",
                static_cast<long long>(total_frames), corpus_mcd);
  out += line;
  return out;
}

void write_mcd_report(const std::filesystem::path& json_path,
                      const std::filesystem::path& text_path,
                      const McdReport& report) {
  {
    std::ofstream out(json_path);
    if (!out) throw DataError("cannot write " + json_path.string());
    out << report.to_json();
  }
  {
    std::ofstream out(text_path);
    if (!out) throw DataError("cannot write " + text_path.string());
    out << report.to_text();
  }
}

}  // namespace rnnpf
