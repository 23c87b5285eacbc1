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

#include "rnnpf/mac.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>

#include "rnnpf/tsv.hpp"

namespace rnnpf {

namespace {

Mat predict_f1(const CartModel& cart_static, const CartModel& cart_delta,
               const Mat& ling) {
  const Eigen::Index t_len = ling.rows();
  const Eigen::Index dim = cart_static.dim();
  Mat f1(t_len, 2 * dim);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const auto [sm, ss] = cart_predict(cart_static, ling.row(t));
    const auto [dm, ds] = cart_predict(cart_delta, ling.row(t));
    f1.row(t).head(dim) = sm.transpose();
    f1.row(t).tail(dim) = dm.transpose();
  }
  return f1;
}

void check_state(const MacState& state, const std::vector<Mat>& y) {
  if (state.z.size() != y.size() || state.f1_x.size() != y.size()) {
    throw DataError("mac: state and target utterance counts differ");
  }
  for (std::size_t u = 0; u < y.size(); ++u) {
    if (state.z[u].rows() != y[u].rows() ||
        state.f1_x[u].rows() != y[u].rows() ||
        state.z[u].cols() != state.rnn.input_dim() ||
        state.f1_x[u].cols() != state.rnn.input_dim() ||
        y[u].cols() != state.rnn.output_dim()) {
      throw DataError("mac: inconsistent shapes at utterance " +
                      std::to_string(u));
    }
  }
}

void record(MacState& state, const std::string& label,
            const std::vector<Mat>& y) {
  const MacTerms terms = mac_terms(state, y);
  MacHistoryRow row;
  row.phase = state.phase;
  row.mu = state.mu;
  row.step = label;
  row.objective = terms.objective;
  row.rnn_term = terms.rnn_term;
  row.penalty_term = terms.penalty_term;
  state.history.push_back(std::move(row));
}

double rnn_term_of(const ElmanRnn& net, const std::vector<Mat>& z,
                   const std::vector<Mat>& y) {
  double sum = 0.0;
  for (std::size_t u = 0; u < z.size(); ++u) {
    sum += rnn_loss(rnn_forward(net, z[u]).y, y[u]);
  }
  return sum;
}

double penalty_of(const std::vector<Mat>& f1_x, const std::vector<Mat>& z) {
  double sum = 0.0;
  for (std::size_t u = 0; u < z.size(); ++u) {
    sum += (f1_x[u] - z[u]).squaredNorm();
  }
  return sum;
}

double sse_on(const ElmanRnn& net, const std::vector<SequencePair>& pairs) {
  double sum = 0.0;
  for (const auto& [x, y] : pairs) {
    sum += rnn_loss(rnn_forward(net, x).y, y);
  }
  return sum;
}

}  // namespace

void ZStepConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("mac: z-step lr must be > 0");
  if (max_steps < 0) throw ConfigError("mac: z-step max_steps must be >= 0");
  if (!(backtrack > 0.0 && backtrack < 1.0)) {
    throw ConfigError("mac: z-step backtrack factor must lie in (0, 1)");
  }
  if (max_backtracks < 1) {
    throw ConfigError("mac: z-step max_backtracks must be >= 1");
  }
}

void MacConfig::validate() const {
  if (mu_schedule.empty()) throw ConfigError("mac: mu_schedule is empty");
  double prev = 0.0;
  for (double mu : mu_schedule) {
    if (!(mu > prev)) {
      throw ConfigError("mac: mu_schedule must be strictly increasing and > 0");
    }
    prev = mu;
  }
  if (outer_iters < 1) throw ConfigError("mac: outer_iters must be >= 1");
  if (rnn_hidden < 1) throw ConfigError("mac: rnn_hidden must be >= 1");
  z_step.validate();
  rnn_hyper.validate();
  cart_cfg.validate();
}

MacTerms mac_terms(const MacState& state, const std::vector<Mat>& y) {
  check_state(state, y);
  // The objective is accumulated per utterance with exactly the arithmetic
  // the z-step's acceptance test uses; fp addition is monotone, so the
  // emitted history inherits the backtracking guarantee bit-for-bit.
  MacTerms terms;
  for (std::size_t u = 0; u < y.size(); ++u) {
    const double rnn_u = rnn_loss(rnn_forward(state.rnn, state.z[u]).y, y[u]);
    const double pen_u = (state.f1_x[u] - state.z[u]).squaredNorm();
    terms.rnn_term += rnn_u;
    terms.penalty_term += pen_u;
    terms.objective += rnn_u + state.mu * pen_u;
  }
  return terms;
}

double mac_objective(const MacState& state, const std::vector<Mat>& y) {
  return mac_terms(state, y).objective;
}

MacState z_step(const MacState& state, const std::vector<Mat>& y,
                const MacConfig& cfg) {
  cfg.validate();
  check_state(state, y);
  MacState next = state;
  for (std::size_t u = 0; u < y.size(); ++u) {
    Mat& z = next.z[u];
    const Mat& f1 = next.f1_x[u];
    const Mat& target = y[u];
    auto objective = [&](const Mat& cand) {
      return rnn_loss(rnn_forward(next.rnn, cand).y, target) +
             next.mu * (f1 - cand).squaredNorm();
    };
    double obj = objective(z);
    for (int it = 0; it < cfg.z_step.max_steps; ++it) {
      const Mat grad = rnn_input_gradients(next.rnn, z, target) +
                       2.0 * next.mu * (z - f1);
      double lr = cfg.z_step.lr;
      bool accepted = false;
      double val = obj;
      for (int bt = 0; bt < cfg.z_step.max_backtracks; ++bt) {
        const Mat cand = z - lr * grad;
        val = objective(cand);
        if (val <= obj) {
          z = cand;
          accepted = true;
          break;
        }
        lr *= cfg.z_step.backtrack;
      }
      if (!accepted || val == obj) break;  // stationary or plateau
      obj = val;
    }
  }
  record(next, "z", y);
  return next;
}

MacState w_step(const MacState& state, const std::vector<Mat>& x,
                const std::vector<Mat>& y, const MacConfig& cfg,
                const std::vector<Mat>* heldout_x,
                const std::vector<Mat>* heldout_y) {
  cfg.validate();
  check_state(state, y);
  if (x.size() != y.size()) {
    throw DataError("mac: feature and target utterance counts differ");
  }
  if ((heldout_x == nullptr) != (heldout_y == nullptr) ||
      (heldout_x != nullptr && heldout_x->size() != heldout_y->size())) {
    throw DataError("mac: held-out features and targets must pair up");
  }
  MacState next = state;
  const Eigen::Index dim = next.rnn.output_dim();

  // CART half: refit both trees on the Z halves, keep them only if the
  // penalty term strictly improves (ties retain the incumbent, which makes a
  // no-op schedule exactly reproduce the independent baseline).
  Eigen::Index total = 0;
  for (const Mat& z : next.z) total += z.rows();
  Mat ling(total, x.front().cols());
  Mat z_static(total, dim);
  Mat z_delta(total, dim);
  Eigen::Index row = 0;
  for (std::size_t u = 0; u < y.size(); ++u) {
    const Eigen::Index t_len = next.z[u].rows();
    if (x[u].rows() != t_len || x[u].cols() != ling.cols()) {
      throw DataError("mac: feature shape mismatch at utterance " +
                      std::to_string(u));
    }
    ling.middleRows(row, t_len) = x[u];
    z_static.middleRows(row, t_len) = next.z[u].leftCols(dim);
    z_delta.middleRows(row, t_len) = next.z[u].rightCols(dim);
    row += t_len;
  }
  CartModel cand_static = train_cart(ling, z_static, cfg.cart_cfg);
  CartModel cand_delta = train_cart(ling, z_delta, cfg.cart_cfg);
  std::vector<Mat> cand_f1(y.size());
  for (std::size_t u = 0; u < y.size(); ++u) {
    cand_f1[u] = predict_f1(cand_static, cand_delta, x[u]);
  }
  if (penalty_of(cand_f1, next.z) < penalty_of(next.f1_x, next.z)) {
    next.cart_static = std::move(cand_static);
    next.cart_delta = std::move(cand_delta);
    next.f1_x = std::move(cand_f1);
  }
  record(next, "w/cart", y);

  // RNN half: warm-started continuation on (Z -> Y); the early-stopped
  // candidate is kept only if it does not worsen the term, so the RNN part
  // of E never increases across a w-step. With a monitoring set the
  // incumbent additionally acts as the epoch-zero candidate: training
  // returns the best epoch it saw, so a continuation whose every epoch is
  // worse on the monitor than its starting parameters must not replace
  // them.
  std::vector<SequencePair> pairs;
  pairs.reserve(y.size());
  for (std::size_t u = 0; u < y.size(); ++u) {
    pairs.emplace_back(next.z[u], y[u]);
  }
  std::vector<SequencePair> monitor;
  if (heldout_x != nullptr) {
    monitor.reserve(heldout_x->size());
    for (std::size_t u = 0; u < heldout_x->size(); ++u) {
      monitor.emplace_back(
          predict_f1(next.cart_static, next.cart_delta, (*heldout_x)[u]),
          (*heldout_y)[u]);
    }
  }
  TrainResult trained = train_rnn(next.rnn, pairs,
                                  monitor.empty() ? pairs : monitor,
                                  cfg.rnn_hyper);
  const bool monitor_ok =
      monitor.empty() ||
      sse_on(trained.net, monitor) <= sse_on(next.rnn, monitor);
  if (monitor_ok && rnn_term_of(trained.net, next.z, y) <=
                        rnn_term_of(next.rnn, next.z, y)) {
    next.rnn = std::move(trained.net);
  }
  record(next, "w/rnn", y);
  return next;
}

MacResult mac_train(const Corpus& train, const Corpus& heldout,
                    const MacConfig& cfg, const DeltaWindow& window,
                    bool include_c0) {
  cfg.validate();
  window.validate();
  if (train.meta.dim != heldout.meta.dim ||
      train.meta.ling_dim != heldout.meta.ling_dim) {
    throw DataError("mac: train and heldout corpora have mismatched schemas");
  }
  const Eigen::Index dim = train.meta.dim;

  // Independent baseline: CARTs on the references, postfilter RNN on the
  // CART re-predictions, exactly as the basic pipeline trains them.
  const StackedFrames stacked = stack_frames(train, window);
  CartModel cart_static0 = train_cart(stacked.ling, stacked.statics,
                                      cfg.cart_cfg);
  CartModel cart_delta0 = train_cart(stacked.ling, stacked.deltas,
                                     cfg.cart_cfg);

  std::vector<Mat> x, y, f1_x0;
  for (const Utterance& utt : train.utterances) {
    x.push_back(utt.ling);
    y.push_back(utt.mcep_ref);
    f1_x0.push_back(predict_f1(cart_static0, cart_delta0, utt.ling));
  }
  std::vector<SequencePair> train_pairs, heldout_pairs;
  for (std::size_t u = 0; u < y.size(); ++u) {
    train_pairs.emplace_back(f1_x0[u], y[u]);
  }
  std::vector<Mat> f1_h0;
  for (const Utterance& utt : heldout.utterances) {
    f1_h0.push_back(predict_f1(cart_static0, cart_delta0, utt.ling));
    heldout_pairs.emplace_back(f1_h0.back(), utt.mcep_ref);
  }
  Rng init_rng(substream(cfg.rnn_hyper.seed, "init"));
  const ElmanRnn net_init = ElmanRnn::init(
      2 * dim, cfg.rnn_hidden, dim, cfg.rnn_hyper.init_scale, init_rng);
  TrainResult baseline =
      train_rnn(net_init, train_pairs, heldout_pairs, cfg.rnn_hyper);

  MacState state;
  state.z = f1_x0;  // Z initialized to f1(X)
  state.f1_x = std::move(f1_x0);
  state.cart_static = cart_static0;
  state.cart_delta = cart_delta0;
  state.rnn = baseline.net;

  std::vector<Mat> heldout_x, heldout_y;
  for (const Utterance& utt : heldout.utterances) {
    heldout_x.push_back(utt.ling);
    heldout_y.push_back(utt.mcep_ref);
  }

  for (std::size_t p = 0; p < cfg.mu_schedule.size(); ++p) {
    state.phase = static_cast<int>(p) + 1;
    state.mu = cfg.mu_schedule[p];
    record(state, "phase", y);
    for (int iter = 0; iter < cfg.outer_iters; ++iter) {
      state = w_step(state, x, y, cfg, &heldout_x, &heldout_y);
      state = z_step(state, y, cfg);
    }
  }

  auto heldout_tracks = [&](const CartModel& cs, const CartModel& cd,
                            const ElmanRnn& net) {
    std::vector<Mat> tracks;
    for (const Utterance& utt : heldout.utterances) {
      tracks.push_back(rnn_forward(net, predict_f1(cs, cd, utt.ling)).y);
    }
    return tracks;
  };
  MacResult result;
  result.mac_heldout = mcd_corpus(
      heldout,
      heldout_tracks(state.cart_static, state.cart_delta, state.rnn),
      include_c0);
  result.independent_heldout = mcd_corpus(
      heldout, heldout_tracks(cart_static0, cart_delta0, baseline.net),
      include_c0);
  result.state = std::move(state);
  return result;
}

void write_mac_history(const std::filesystem::path& path,
                       const std::vector<MacHistoryRow>& history) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "phase\tmu\tstep\tobjective\tpenalty\trnn\n";
  for (const auto& row : history) {
    out << row.phase << '\t' << format_double(row.mu) << '\t' << row.step
        << '\t' << format_double(row.objective) << '\t'
        << format_double(row.penalty_term) << '\t'
        << format_double(row.rnn_term) << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<MacHistoryRow> read_mac_history(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(path.string() + ": empty history file");
  }
  auto parse_num = [&](const std::string& field, int lineno) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end != field.c_str() + field.size() || field.empty() || errno != 0) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": invalid number '" + field + "'");
    }
    return v;
  };
  std::vector<MacHistoryRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 6) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": expected 6 columns");
    }
    MacHistoryRow row;
    row.phase = static_cast<int>(parse_num(fields[0], lineno));
    row.mu = parse_num(fields[1], lineno);
    row.step = fields[2];
    row.objective = parse_num(fields[3], lineno);
    row.penalty_term = parse_num(fields[4], lineno);
    row.rnn_term = parse_num(fields[5], lineno);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace rnnpf
