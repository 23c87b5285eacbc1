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

#include "rnnpf/rnn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "json.hpp"
#include "rnnpf/tsv.hpp"

namespace rnnpf {

namespace {

using ordered_json = nlohmann::ordered_json;

Vec sigmoid(const Vec& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

void check_finite(const Mat& m, const std::string& what) {
  if (!m.allFinite()) {
    throw NumericError(what + " contains a non-finite value");
  }
}

ordered_json mat_to_json(const Mat& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json vec_to_json(const Vec& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Mat mat_from_json(const ordered_json& j, Eigen::Index rows, Eigen::Index cols,
                  const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw DataError("rnn model: " + what + " has wrong row count");
  }
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw DataError("rnn model: " + what + " has wrong column count");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

Vec vec_from_json(const ordered_json& j, Eigen::Index n,
                  const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw DataError("rnn model: " + what + " has wrong length");
  }
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v(i) = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

}  // namespace

void ElmanRnn::validate() const {
  const Eigen::Index h = hidden_dim();
  if (w_in.rows() == 0 || w_in.cols() == 0 || w_out.rows() == 0) {
    throw ConfigError("rnn: all layer dimensions must be positive");
  }
  if (w_rec.rows() != h || w_rec.cols() != h || b_h.size() != h ||
      w_out.cols() != h || b_o.size() != w_out.rows()) {
    throw ConfigError("rnn: inconsistent parameter shapes");
  }
  if (!w_in.allFinite() || !w_rec.allFinite() || !b_h.allFinite() ||
      !w_out.allFinite() || !b_o.allFinite()) {
    throw NumericError("rnn: parameters contain a non-finite value");
  }
}

ElmanRnn ElmanRnn::zeros(Eigen::Index input, Eigen::Index hidden,
                         Eigen::Index output) {
  ElmanRnn net;
  net.w_in = Mat::Zero(hidden, input);
  net.w_rec = Mat::Zero(hidden, hidden);
  net.b_h = Vec::Zero(hidden);
  net.w_out = Mat::Zero(output, hidden);
  net.b_o = Vec::Zero(output);
  net.validate();
  return net;
}

ElmanRnn ElmanRnn::init(Eigen::Index input, Eigen::Index hidden,
                        Eigen::Index output, double scale, Rng& rng) {
  ElmanRnn net = zeros(input, hidden, output);
  auto fill_mat = [&](Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = rng.uniform(-scale, scale);
      }
    }
  };
  auto fill_vec = [&](Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v(i) = rng.uniform(-scale, scale);
    }
  };
  fill_mat(net.w_in);
  fill_mat(net.w_rec);
  fill_vec(net.b_h);
  fill_mat(net.w_out);
  fill_vec(net.b_o);
  return net;
}

void ElmanRnn::save(const std::filesystem::path& path) const {
  validate();
  ordered_json j;
  j["type"] = "elman_rnn";
  j["input_dim"] = input_dim();
  j["hidden_dim"] = hidden_dim();
  j["output_dim"] = output_dim();
  j["w_in"] = mat_to_json(w_in);
  j["w_rec"] = mat_to_json(w_rec);
  j["b_h"] = vec_to_json(b_h);
  j["w_out"] = mat_to_json(w_out);
  j["b_o"] = vec_to_json(b_o);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw DataError("failed writing " + path.string());
}

ElmanRnn ElmanRnn::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  ordered_json j;
  try {
    in >> j;
  } catch (const ordered_json::parse_error& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
  if (j.value("type", "") != std::string("elman_rnn")) {
    throw DataError(path.string() + ": not an elman_rnn model file");
  }
  const auto input = j.at("input_dim").get<Eigen::Index>();
  const auto hidden = j.at("hidden_dim").get<Eigen::Index>();
  const auto output = j.at("output_dim").get<Eigen::Index>();
  if (input <= 0 || hidden <= 0 || output <= 0) {
    throw DataError(path.string() + ": dimensions must be positive");
  }
  ElmanRnn net;
  net.w_in = mat_from_json(j.at("w_in"), hidden, input, "w_in");
  net.w_rec = mat_from_json(j.at("w_rec"), hidden, hidden, "w_rec");
  net.b_h = vec_from_json(j.at("b_h"), hidden, "b_h");
  net.w_out = mat_from_json(j.at("w_out"), output, hidden, "w_out");
  net.b_o = vec_from_json(j.at("b_o"), output, "b_o");
  net.validate();
  return net;
}

Gradients Gradients::zeros_like(const ElmanRnn& net) {
  Gradients g;
  g.w_in = Mat::Zero(net.w_in.rows(), net.w_in.cols());
  g.w_rec = Mat::Zero(net.w_rec.rows(), net.w_rec.cols());
  g.b_h = Vec::Zero(net.b_h.size());
  g.w_out = Mat::Zero(net.w_out.rows(), net.w_out.cols());
  g.b_o = Vec::Zero(net.b_o.size());
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  w_in += other.w_in;
  w_rec += other.w_rec;
  b_h += other.b_h;
  w_out += other.w_out;
  b_o += other.b_o;
  return *this;
}

double Gradients::max_abs() const {
  double m = w_in.cwiseAbs().maxCoeff();
  m = std::max(m, w_rec.cwiseAbs().maxCoeff());
  m = std::max(m, b_h.cwiseAbs().maxCoeff());
  m = std::max(m, w_out.cwiseAbs().maxCoeff());
  m = std::max(m, b_o.cwiseAbs().maxCoeff());
  return m;
}

ForwardResult rnn_forward(const ElmanRnn& net, const Mat& x) {
  if (x.cols() != net.input_dim()) {
    throw DataError("rnn_forward: input has " + std::to_string(x.cols()) +
                    " columns, model expects " +
                    std::to_string(net.input_dim()));
  }
  const Eigen::Index t_len = x.rows();
  const Eigen::Index hd = net.hidden_dim();
  ForwardResult res;
  res.h.resize(t_len, hd);
  res.y.resize(t_len, net.output_dim());
  Vec h_prev = Vec::Zero(hd);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    Vec z = net.w_in * x.row(t).transpose() + net.w_rec * h_prev + net.b_h;
    Vec h = sigmoid(z);
    res.h.row(t) = h.transpose();
    res.y.row(t) = (net.w_out * h + net.b_o).transpose();
    h_prev = std::move(h);
  }
  check_finite(res.y, "rnn_forward output");
  return res;
}

double rnn_loss(const Mat& y, const Mat& target) {
  if (y.rows() != target.rows() || y.cols() != target.cols()) {
    throw DataError("rnn_loss: prediction and target shapes differ");
  }
  return (y - target).squaredNorm();
}

std::pair<double, Gradients> rnn_bptt(const ElmanRnn& net, const Mat& x,
                                      const Mat& target,
                                      std::size_t truncation) {
  const ForwardResult fwd = rnn_forward(net, x);
  if (target.rows() != x.rows() || target.cols() != net.output_dim()) {
    throw DataError("rnn_bptt: target shape does not match model output");
  }
  const Eigen::Index t_len = x.rows();
  const double loss = rnn_loss(fwd.y, target);
  Gradients g = Gradients::zeros_like(net);
  const Mat err = 2.0 * (fwd.y - target);  // dL/dy, T x O

  if (truncation == kFullBptt) {
    // Single reverse sweep; carry holds W_rec^T phi_{t+1}.
    Vec carry = Vec::Zero(net.hidden_dim());
    for (Eigen::Index t = t_len - 1; t >= 0; --t) {
      const Vec ey = err.row(t).transpose();
      const Vec h = fwd.h.row(t).transpose();
      g.w_out += ey * h.transpose();
      g.b_o += ey;
      const Vec eh = net.w_out.transpose() * ey + carry;
      const Vec phi =
          eh.cwiseProduct(h).cwiseProduct((1.0 - h.array()).matrix());
      g.w_in += phi * x.row(t);
      if (t > 0) g.w_rec += phi * fwd.h.row(t - 1);
      g.b_h += phi;
      carry = net.w_rec.transpose() * phi;
    }
  } else {
    // Each frame's error descends through at most `truncation` recurrent
    // links; O(T * truncation * H^2).
    for (Eigen::Index t = 0; t < t_len; ++t) {
      const Vec ey = err.row(t).transpose();
      const Vec h_t = fwd.h.row(t).transpose();
      g.w_out += ey * h_t.transpose();
      g.b_o += ey;
      Vec eh = net.w_out.transpose() * ey;
      for (std::size_t hop = 0;; ++hop) {
        const Eigen::Index s = t - static_cast<Eigen::Index>(hop);
        if (s < 0) break;
        const Vec h = fwd.h.row(s).transpose();
        const Vec phi =
            eh.cwiseProduct(h).cwiseProduct((1.0 - h.array()).matrix());
        g.w_in += phi * x.row(s);
        if (s > 0) g.w_rec += phi * fwd.h.row(s - 1);
        g.b_h += phi;
        if (hop == truncation) break;
        eh = net.w_rec.transpose() * phi;
      }
    }
  }
  return {loss, std::move(g)};
}

Mat rnn_input_gradients(const ElmanRnn& net, const Mat& x, const Mat& target) {
  const ForwardResult fwd = rnn_forward(net, x);
  if (target.rows() != x.rows() || target.cols() != net.output_dim()) {
    throw DataError("rnn_input_gradients: target shape mismatch");
  }
  const Eigen::Index t_len = x.rows();
  Mat gx = Mat::Zero(t_len, x.cols());
  const Mat err = 2.0 * (fwd.y - target);
  Vec carry = Vec::Zero(net.hidden_dim());
  for (Eigen::Index t = t_len - 1; t >= 0; --t) {
    const Vec ey = err.row(t).transpose();
    const Vec h = fwd.h.row(t).transpose();
    const Vec eh = net.w_out.transpose() * ey + carry;
    const Vec phi = eh.cwiseProduct(h).cwiseProduct((1.0 - h.array()).matrix());
    gx.row(t) = (net.w_in.transpose() * phi).transpose();
    carry = net.w_rec.transpose() * phi;
  }
  return gx;
}

void adagrad_update(ElmanRnn& params, const Gradients& g, Gradients& accum,
                    double lr, double eps) {
  // A zero gradient always means a zero step, even when the accumulator and
  // eps are both zero (the unguarded quotient would be 0/0 there).
  auto step_mat = [&](Mat& p, const Mat& grad, Mat& acc) {
    acc.array() += grad.array().square();
    p.array() -= (grad.array() == 0.0)
                     .select(0.0, lr * grad.array() /
                                      (acc.array().sqrt() + eps));
  };
  auto step_vec = [&](Vec& p, const Vec& grad, Vec& acc) {
    acc.array() += grad.array().square();
    p.array() -= (grad.array() == 0.0)
                     .select(0.0, lr * grad.array() /
                                      (acc.array().sqrt() + eps));
  };
  step_mat(params.w_in, g.w_in, accum.w_in);
  step_mat(params.w_rec, g.w_rec, accum.w_rec);
  step_vec(params.b_h, g.b_h, accum.b_h);
  step_mat(params.w_out, g.w_out, accum.w_out);
  step_vec(params.b_o, g.b_o, accum.b_o);
}

void TrainHyper::validate() const {
  if (lr < 0.0 || !std::isfinite(lr)) {
    throw ConfigError("rnn training: lr must be finite and >= 0");
  }
  if (batch_size < 1) throw ConfigError("rnn training: batch_size must be >= 1");
  if (truncation < 1) throw ConfigError("rnn training: truncation must be >= 1");
  if (max_epochs < 0) throw ConfigError("rnn training: max_epochs must be >= 0");
  if (patience < 1) throw ConfigError("rnn training: patience must be >= 1");
  if (adagrad_eps <= 0.0) {
    throw ConfigError("rnn training: adagrad_eps must be > 0");
  }
  if (init_scale < 0.0) {
    throw ConfigError("rnn training: init_scale must be >= 0");
  }
}

namespace {

// Total scalar output entries, for per-element MSE reporting.
double output_count(const std::vector<SequencePair>& set) {
  double n = 0.0;
  for (const auto& [x, y] : set) n += static_cast<double>(y.rows() * y.cols());
  return n;
}

double evaluate_sse(const ElmanRnn& net,
                    const std::vector<SequencePair>& set) {
  double sse = 0.0;
  for (const auto& [x, y] : set) sse += rnn_loss(rnn_forward(net, x).y, y);
  return sse;
}

void check_pairs(const ElmanRnn& net, const std::vector<SequencePair>& set,
                 const std::string& what) {
  for (const auto& [x, y] : set) {
    if (x.rows() != y.rows()) {
      throw DataError("rnn training: " + what +
                      " pair has mismatched frame counts");
    }
    if (x.cols() != net.input_dim() || y.cols() != net.output_dim()) {
      throw DataError("rnn training: " + what +
                      " pair dimensions do not match the model");
    }
  }
}

}  // namespace

TrainResult train_rnn(const ElmanRnn& net0,
                      const std::vector<SequencePair>& train,
                      const std::vector<SequencePair>& heldout,
                      const TrainHyper& hyper) {
  hyper.validate();
  net0.validate();
  if (train.empty()) throw ConfigError("rnn training: train set is empty");
  if (heldout.empty()) throw ConfigError("rnn training: heldout set is empty");
  check_pairs(net0, train, "train");
  check_pairs(net0, heldout, "heldout");

  TrainResult result;
  result.net = net0;
  result.best_epoch = 0;

  ElmanRnn net = net0;
  Gradients accum = Gradients::zeros_like(net);
  Rng shuffle_rng(substream(hyper.seed, "shuffle"));
  const double train_n = output_count(train);
  const double heldout_n = output_count(heldout);

  // The initial parameters are deliberately not an early-stopping candidate:
  // the best-so-far loss starts at +inf, so epoch 1 always records a model.
  double best = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    const auto tic = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);
    double train_sse = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(hyper.batch_size)) {
      const std::size_t stop = std::min(
          order.size(), start + static_cast<std::size_t>(hyper.batch_size));
      Gradients batch_grad = Gradients::zeros_like(net);
      for (std::size_t k = start; k < stop; ++k) {
        const auto& [x, y] = train[order[k]];
        auto [loss, grad] = rnn_bptt(net, x, y, hyper.truncation);
        train_sse += loss;
        batch_grad += grad;
      }
      adagrad_update(net, batch_grad, accum, hyper.lr, hyper.adagrad_eps);
    }
    net.validate();
    const double heldout_sse = evaluate_sse(net, heldout);
    const auto toc = std::chrono::steady_clock::now();

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_sse = train_sse;
    stats.train_mse = train_sse / train_n;
    stats.heldout_sse = heldout_sse;
    stats.heldout_mse = heldout_sse / heldout_n;
    stats.seconds = std::chrono::duration<double>(toc - tic).count();
    result.history.push_back(stats);

    if (heldout_sse < best) {
      best = heldout_sse;
      result.net = net;
      result.best_epoch = epoch;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs >= hyper.patience) break;
    }
  }

  result.best_heldout_sse =
      result.history.empty() ? evaluate_sse(net0, heldout) : best;
  return result;
}

void write_train_log(const std::filesystem::path& path,
                     const std::vector<EpochStats>& history) {
  Mat rows(static_cast<Eigen::Index>(history.size()), 6);
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& s = history[i];
    const auto r = static_cast<Eigen::Index>(i);
    rows(r, 0) = static_cast<double>(s.epoch);
    rows(r, 1) = s.train_sse;
    rows(r, 2) = s.train_mse;
    rows(r, 3) = s.heldout_sse;
    rows(r, 4) = s.heldout_mse;
    rows(r, 5) = s.seconds;
  }
  write_tsv(path,
            {"epoch", "train_sse", "train_mse", "heldout_sse", "heldout_mse",
             "seconds"},
            rows);
}

}  // namespace rnnpf
