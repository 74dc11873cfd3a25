// Copyright 2026 The ewscore Authors
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
#include <doctest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "ew/errors.hpp"
#include "ew/evalharness.hpp"
#include "ew/predict.hpp"

using namespace ew;

TEST_CASE("fuse concatenates in visual, audio, text order") {
  std::vector<double> v(7, 0.0), a(7, 0.0), t(4, 0.0);
  CHECK(fuse(v, a, t) == std::vector<double>(18, 0.0));
  t[0] = 0.5;
  auto fused = fuse(v, a, t);
  CHECK(fused.size() == 18);
  CHECK(fused[14] == 0.5);  // text.pos_rate
  CHECK_THROWS_AS(fuse(std::vector<double>(6, 0.0), a, t), DimensionMismatch);
}

TEST_CASE("round_score: nearest integer, ties up, clamped") {
  CHECK(round_score(2.4) == 2);
  CHECK(round_score(2.5) == 3);
  CHECK(round_score(4.0) == 4);
  CHECK(round_score(1.0) == 1);
  CHECK(round_score(1.5) == 2);
  CHECK(round_score(3.5) == 4);
  CHECK(round_score(3.49999) == 3);
  for (int k = 1; k <= 4; ++k) CHECK(round_score(round_score(static_cast<double>(k))) == k);
  CHECK_THROWS_AS(round_score(4.51), OutOfRange);
  CHECK_THROWS_AS(round_score(0.4), OutOfRange);
}

TEST_CASE("standardizer centers and scales training columns") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  Matrix x(60, 18);
  for (double& v : x.data) v = u(rng);
  auto s = Standardizer::fit(x);
  Matrix z = s.transform(x);
  for (std::size_t c = 0; c < z.cols; ++c) {
    double mean = 0;
    for (std::size_t r = 0; r < z.rows; ++r) mean += z[r][c];
    mean /= static_cast<double>(z.rows);
    double var = 0;
    for (std::size_t r = 0; r < z.rows; ++r) var += (z[r][c] - mean) * (z[r][c] - mean);
    var /= static_cast<double>(z.rows);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);
  }
}

TEST_CASE("constant features keep std 1 and warn") {
  Matrix x(10, 2);
  for (std::size_t r = 0; r < 10; ++r) {
    x[r][0] = 3.0;
    x[r][1] = static_cast<double>(r);
  }
  std::vector<std::string> warnings;
  auto s = Standardizer::fit(x, &warnings);
  CHECK(s.stddev()[0] == 1.0);
  CHECK(warnings.size() == 1);
  auto z = s.transform(std::vector<double>{3.0, 4.5});
  CHECK(z[0] == 0.0);
}

TEST_CASE("standardizer json round trip") {
  Matrix x(5, 3);
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (double& v : x.data) v = u(rng);
  auto s = Standardizer::fit(x);
  auto restored = Standardizer::from_json(s.to_json());
  CHECK(restored.mean() == s.mean());
  CHECK(restored.stddev() == s.stddev());
}

namespace {

/// Training set with a linear signal in feature 0, grouped into lessons.
struct GridData {
  Matrix x;
  std::vector<double> y;
  std::vector<std::string> groups;
};

GridData grid_data(std::size_t n, std::uint64_t seed, double noise = 0.15) {
  GridData d;
  d.x = Matrix(n, 18);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> g(0.0, noise);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < 18; ++c) d.x[r][c] = u(rng);
    double v = 2.5 + 1.1 * d.x[r][0] + g(rng);
    d.y.push_back(std::clamp(v, 1.0, 4.0));
    d.groups.push_back("lesson" + std::to_string(r / 4));
  }
  return d;
}

}  // namespace

TEST_CASE("fit_model regression recovers a planted signal out of sample") {
  auto train = grid_data(64, 41);
  ModelSpec spec;
  spec.family = ModelFamily::random_forest;
  spec.task = Task::regression;
  spec.seed = 5;
  auto model = fit_model(spec, train.x, train.y, train.groups);

  auto test = grid_data(48, 42);
  std::vector<double> pred, truth;
  for (std::size_t r = 0; r < test.x.rows; ++r) {
    auto e = predict_score(model, test.x.row(r), {"t", static_cast<int>(r)});
    pred.push_back(e.value);
    truth.push_back(test.y[r]);
    CHECK(e.value >= 1.0);
    CHECK(e.value <= 4.0);
    CHECK(*e.rounded == round_score(e.value));
  }
  CHECK(pearson(pred, truth) > 0.85);
}

TEST_CASE("fit_model on perfectly linear labels reaches r of one out of sample") {
  auto train = grid_data(64, 49, 0.0);  // noise-free: labels linear in feature 0
  ModelSpec spec;
  spec.family = ModelFamily::support_vector;
  spec.task = Task::regression;
  spec.seed = 3;
  auto model = fit_model(spec, train.x, train.y, train.groups);
  auto test = grid_data(48, 50, 0.0);
  std::vector<double> pred;
  for (std::size_t r = 0; r < test.x.rows; ++r)
    pred.push_back(predict_score(model, test.x.row(r), {"t", 0}).value);
  CHECK(pearson(pred, test.y) > 0.99);
}

TEST_CASE("fit_model rejects degenerate inputs") {
  auto d = grid_data(20, 43);
  std::vector<double> constant(d.y.size(), 2.0);
  ModelSpec spec;
  CHECK_THROWS_AS(fit_model(spec, d.x, constant, d.groups), DegenerateLabels);

  Matrix small(5, 18);
  std::vector<double> y{1, 2, 3, 2, 1};
  std::vector<std::string> g{"a", "a", "b", "b", "c"};
  CHECK_THROWS_AS(fit_model(spec, small, y, g), InsufficientData);

  std::vector<double> bad = d.y;
  bad[0] = 5.0;
  CHECK_THROWS_AS(fit_model(spec, d.x, bad, d.groups), OutOfRange);
}

TEST_CASE("fit_model grid selection is deterministic under a seed") {
  auto d = grid_data(48, 44);
  for (auto family : {ModelFamily::random_forest, ModelFamily::support_vector,
                      ModelFamily::two_layer_feedforward}) {
    ModelSpec spec;
    spec.family = family;
    spec.task = Task::regression;
    spec.seed = 77;
    auto m1 = fit_model(spec, d.x, d.y, d.groups);
    auto m2 = fit_model(spec, d.x, d.y, d.groups);
    CHECK(m1.chosen == m2.chosen);
    auto row = d.x.row(0);
    CHECK(m1.estimator.predict_value(m1.standardizer.transform(row)) ==
          m2.estimator.predict_value(m2.standardizer.transform(row)));
  }
}

TEST_CASE("classification estimators emit the class as value and rounded") {
  auto d = grid_data(60, 45, 0.05);
  ModelSpec spec;
  spec.family = ModelFamily::random_forest;
  spec.task = Task::classification;
  spec.seed = 9;
  auto model = fit_model(spec, d.x, d.y, d.groups);
  CHECK(model.train_accuracy > 0.7);
  auto e = predict_score(model, d.x.row(0), {"t", 0});
  CHECK(e.value == std::floor(e.value));  // integral class value
  CHECK(*e.rounded == static_cast<int>(e.value));
  CHECK(e.value >= 1.0);
  CHECK(e.value <= 4.0);
}

TEST_CASE("regression predictions are clamped to the scale") {
  // A hand-built network whose output is exactly 4.7 for a unit input:
  // w2 inverts tanh(1e-3), so out = 1 + 3.7.
  nlohmann::json j = {{"inputs", 1}, {"hidden", 1},  {"outputs", 1},
                      {"softmax", false}, {"seed", 0},
                      {"w1", {1e-3}},     {"b1", {0.0}},
                      {"w2", {1.0 / std::tanh(1e-3)}}, {"b2", {3.7}}};
  auto est = Estimator::make_mlp(Mlp::from_json(j), Task::regression);
  double v = est.predict_value({1.0});
  CHECK(v == 4.0);  // clamped from ~4.7
}

TEST_CASE("ensemble weights follow train r with the epsilon floor") {
  auto w = ensemble_weights({0.6, 0.4});
  CHECK(w[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(0.4).epsilon(1e-12));

  auto w2 = ensemble_weights({0.5, -0.2});
  CHECK(w2[0] == doctest::Approx(0.5 / 0.51).epsilon(1e-12));
  CHECK(w2[1] == doctest::Approx(0.01 / 0.51).epsilon(1e-12));
}

namespace {
ScoreEstimate est_of(double v) {
  ScoreEstimate e;
  e.segment = {"L", 0};
  e.value = v;
  return e;
}
}  // namespace

TEST_CASE("combine: unweighted average") {
  EnsembleSpec spec;
  auto e = combine({est_of(2.0), est_of(3.0)}, spec);
  CHECK(e.value == 2.5);
  CHECK(e.source == Source::ensemble);
  CHECK(*e.rounded == 3);
}

TEST_CASE("combine: weighted average matches hand computation") {
  EnsembleSpec spec;
  spec.mode = EnsembleSpec::Mode::weighted;
  spec.weights = ensemble_weights({0.6, 0.4});
  auto e = combine({est_of(2.0), est_of(3.0)}, spec);
  CHECK(e.value == doctest::Approx(2.4).epsilon(1e-12));

  spec.weights = ensemble_weights({0.5, -0.2});
  auto e2 = combine({est_of(2.0), est_of(3.0)}, spec);
  CHECK(e2.value == doctest::Approx(1.03 / 0.51).epsilon(1e-12));  // ~2.0196
}

TEST_CASE("combine is idempotent on identical estimates") {
  std::mt19937_64 rng(46);
  std::uniform_real_distribution<double> u(1.0, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    double v = u(rng);
    EnsembleSpec spec;
    spec.mode = EnsembleSpec::Mode::weighted;
    spec.weights = ensemble_weights({u(rng) / 4.0, u(rng) / 4.0});
    auto e = combine({est_of(v), est_of(v)}, spec);
    CHECK(e.value == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("combine stays within the convex hull of its inputs") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> u(1.0, 4.0);
  for (int trial = 0; trial < 50; ++trial) {
    double a = u(rng), b = u(rng), c = u(rng);
    EnsembleSpec spec;
    spec.mode = EnsembleSpec::Mode::weighted;
    spec.weights = ensemble_weights({u(rng), u(rng), u(rng)});
    auto e = combine({est_of(a), est_of(b), est_of(c)}, spec);
    CHECK(e.value >= std::min({a, b, c}) - 1e-12);
    CHECK(e.value <= std::max({a, b, c}) + 1e-12);
  }
}

TEST_CASE("weighted combine without weights is an error") {
  EnsembleSpec spec;
  spec.mode = EnsembleSpec::Mode::weighted;
  CHECK_THROWS_AS(combine({est_of(2.0), est_of(3.0)}, spec), MissingTrainPerformance);
}

TEST_CASE("trained model json round trip preserves predictions") {
  auto d = grid_data(48, 48);
  ModelSpec spec;
  spec.family = ModelFamily::support_vector;
  spec.task = Task::regression;
  spec.seed = 11;
  auto model = fit_model(spec, d.x, d.y, d.groups);
  auto restored = TrainedModel::from_json(model.to_json());
  for (std::size_t r = 0; r < 10; ++r) {
    auto row = d.x.row(r);
    CHECK(predict_score(restored, row, {"t", 0}).value ==
          predict_score(model, row, {"t", 0}).value);
  }
}
