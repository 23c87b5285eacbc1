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

#include <filesystem>
#include <fstream>

#include "rnnpf/features.hpp"
#include "rnnpf/rng.hpp"
#include "rnnpf/tsv.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace rnnpf;

namespace {

PredictedTrack random_track(Eigen::Index t, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  PredictedTrack track;
  track.static_mean = testing::random_mat(rng, t, d, -1.0, 1.0);
  track.delta_mean = testing::random_mat(rng, t, d, -1.0, 1.0);
  track.static_std = testing::random_mat(rng, t, d, 0.1, 2.0);
  track.delta_std = testing::random_mat(rng, t, d, 0.1, 2.0);
  track.f0 = testing::random_mat(rng, t, 1, 3.0, 6.0).col(0);
  track.voicing = Vec::Ones(t);
  return track;
}

}  // namespace

TEST_CASE("delta window validation") {
  DeltaWindow w;
  w.validate();  // default window is valid
  CHECK(w.half_width() == 1);

  w.coeffs = {1.0, 0.0};
  CHECK_THROWS_AS(w.validate(), ConfigError);  // even length
  w.coeffs = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(w.validate(), ConfigError);  // all zero
  w.coeffs = {};
  CHECK_THROWS_AS(w.validate(), ConfigError);

  w.coeffs = {0.25, 0.0, -0.5, 0.0, 0.25};
  w.validate();
  CHECK(w.half_width() == 2);
}

TEST_CASE("deltas of a ramp with edge replication") {
  Mat x(3, 1);
  x << 0.0, 1.0, 2.0;
  const Mat d = compute_deltas(x, DeltaWindow{});
  REQUIRE(d.rows() == 3);
  REQUIRE(d.cols() == 1);
  // Edges replicate the boundary frame: 0.5*(x1 - x0), interior 0.5*(x2 - x0).
  CHECK(d(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d(2, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("deltas of a constant signal vanish") {
  const Mat x = Mat::Constant(7, 3, 4.25);
  const Mat d = compute_deltas(x, DeltaWindow{});
  CHECK(d.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("deltas of a single frame vanish under replication") {
  Mat x(1, 2);
  x << 3.0, -1.0;
  const Mat d = compute_deltas(x, DeltaWindow{});
  CHECK(d.rows() == 1);
  CHECK(d.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("wider window matches a hand-expanded convolution") {
  DeltaWindow w;
  w.coeffs = {0.25, 0.0, -0.5, 0.0, 0.25};  // second-order style window
  Mat x(4, 1);
  x << 1.0, 2.0, 4.0, 8.0;
  const Mat d = compute_deltas(x, w);
  auto at = [&](Eigen::Index t) {
    double acc = 0.0;
    for (int k = -2; k <= 2; ++k) {
      const Eigen::Index s = std::clamp<Eigen::Index>(t + k, 0, 3);
      acc += w.coeffs[static_cast<std::size_t>(k + 2)] * x(s, 0);
    }
    return acc;
  };
  for (Eigen::Index t = 0; t < 4; ++t) {
    CHECK(d(t, 0) == doctest::Approx(at(t)).epsilon(1e-15));
  }
}

TEST_CASE("basic inputs concatenate static and delta means") {
  const PredictedTrack track = random_track(5, 3, 21);
  const Mat in = assemble_basic_inputs(track);
  REQUIRE(in.rows() == 5);
  REQUIRE(in.cols() == 6);
  CHECK(in.leftCols(3) == track.static_mean);
  CHECK(in.rightCols(3) == track.delta_mean);
}

TEST_CASE("extended inputs append stds, aux streams, and ling") {
  const PredictedTrack track = random_track(4, 2, 22);
  Rng rng(5);
  const Mat ling = testing::random_mat(rng, 4, 7, 0.0, 1.0);
  const Mat in = assemble_extended_inputs(track, ling);
  REQUIRE(in.rows() == 4);
  REQUIRE(in.cols() == 4 * 2 + 2 + 7);
  CHECK(in.middleCols(0, 2) == track.static_mean);
  CHECK(in.middleCols(2, 2) == track.delta_mean);
  CHECK(in.middleCols(4, 2) == track.static_std);
  CHECK(in.middleCols(6, 2) == track.delta_std);
  CHECK(in.col(8) == track.f0);
  CHECK(in.col(9) == track.voicing);
  CHECK(in.rightCols(7) == ling);

  const Mat bad = testing::random_mat(rng, 3, 7, 0.0, 1.0);
  CHECK_THROWS_AS(assemble_extended_inputs(track, bad), DataError);
}

TEST_CASE("track validation rejects inconsistent shapes and bad stds") {
  PredictedTrack track = random_track(4, 2, 23);
  track.validate();

  SUBCASE("short delta mean") { track.delta_mean = Mat::Zero(3, 2); }
  SUBCASE("wrong std width") { track.static_std = Mat::Ones(4, 3); }
  SUBCASE("non-positive std") { track.delta_std(1, 1) = 0.0; }
  SUBCASE("aux length") { track.f0 = Vec::Zero(5); }
  CHECK_THROWS_AS(track.validate(), DataError);
}

TEST_CASE("track save/load round-trips bitwise") {
  const fs::path dir = "tmp_features_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const PredictedTrack track = random_track(6, 3, 24);
  save_track(track, dir / "u.tsv");
  const PredictedTrack loaded = load_track(dir / "u.tsv");
  CHECK(loaded.static_mean == track.static_mean);
  CHECK(loaded.delta_mean == track.delta_mean);
  CHECK(loaded.static_std == track.static_std);
  CHECK(loaded.delta_std == track.delta_std);
  CHECK(loaded.f0 == track.f0);
  CHECK(loaded.voicing == track.voicing);

  std::ofstream bad(dir / "bad.tsv");
  bad << "stat_0\tunexpected\n1.0\t2.0\n";
  bad.close();
  CHECK_THROWS_AS(load_track(dir / "bad.tsv"), DataError);
}

TEST_CASE("tsv formatting round-trips doubles at full precision") {
  const fs::path dir = "tmp_features_test";
  fs::create_directories(dir);
  Mat values(5, 1);
  values << 0.1, -1.0 / 3.0, 1e-300, 12345.678901234567, 0.0;
  write_tsv(dir / "prec.tsv", {"v"}, values);
  const TsvTable table = read_tsv(dir / "prec.tsv");
  REQUIRE(table.values.rows() == 5);
  CHECK(table.values == values);
  CHECK(table.columns == std::vector<std::string>{"v"});
}
