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

// Times the serial reference paths against the OpenMP kernels and checks
// that both produce the same numbers.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "ew/explain.hpp"
#include "ew/forest.hpp"
#include "ew/parallel.hpp"
#include "ew/util.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ew::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  ew::Matrix m(rows, cols);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (double& v : m.data) v = d(rng);
  return m;
}

struct Timing {
  double serial = 0.0;
  double parallel = 0.0;
};

void report(const char* name, const Timing& t, double max_diff) {
  std::printf("%-28s serial %8.3f s   omp %8.3f s   speedup %5.2fx   max|diff| %.3g\n", name,
              t.serial, t.parallel, t.serial / t.parallel, max_diff);
}

}  // namespace

int main() {
  const int hw = ew::par::hardware_threads();
  std::printf("threads: serial=1 vs omp=%d\n\n", hw);

  // --- kernel matrix
  {
    auto x = random_matrix(1600, 18, 1);
    ew::par::KernelParams p;
    p.gamma = 1.0 / 18.0;
    Timing t;
    ew::par::set_threads(1);
    auto t0 = Clock::now();
    auto k1 = ew::par::kernel_matrix_serial(x, p);
    t.serial = seconds_since(t0);
    ew::par::set_threads(hw);
    t0 = Clock::now();
    auto k2 = ew::par::kernel_matrix(x, p);
    t.parallel = seconds_since(t0);
    double diff = 0.0;
    for (std::size_t i = 0; i < k1.data.size(); ++i)
      diff = std::max(diff, std::abs(k1.data[i] - k2.data[i]));
    report("rbf kernel matrix 1600x1600", t, diff);
  }

  // --- column means
  {
    auto x = random_matrix(200000, 18, 2);
    Timing t;
    ew::par::set_threads(1);
    auto t0 = Clock::now();
    auto m1 = ew::par::column_means_serial(x, {});
    t.serial = seconds_since(t0);
    ew::par::set_threads(hw);
    t0 = Clock::now();
    auto m2 = ew::par::column_means(x, {});
    t.parallel = seconds_since(t0);
    double diff = 0.0;
    for (std::size_t i = 0; i < m1.size(); ++i) diff = std::max(diff, std::abs(m1[i] - m2[i]));
    report("column means 200k x 18", t, diff);
  }

  // --- forest training (per-tree parallelism; outputs match bit for bit)
  {
    auto x = random_matrix(400, 18, 3);
    std::vector<double> y;
    for (std::size_t r = 0; r < x.rows; ++r)
      y.push_back(1.0 + 1.5 * (x[r][0] + 1.0) + 0.3 * x[r][5]);
    ew::RandomForest::Config cfg;
    cfg.n_trees = 300;
    cfg.seed = 4;
    Timing t;
    ew::par::set_threads(1);
    ew::RandomForest f1(cfg);
    auto t0 = Clock::now();
    f1.fit(x, y);
    t.serial = seconds_since(t0);
    ew::par::set_threads(hw);
    ew::RandomForest f2(cfg);
    t0 = Clock::now();
    f2.fit(x, y);
    t.parallel = seconds_since(t0);
    double diff = 0.0;
    for (std::size_t r = 0; r < 50; ++r) {
      auto row = x.row(r);
      diff = std::max(diff, std::abs(f1.predict(row) - f2.predict(row)));
    }
    report("forest fit 400x18, 300 trees", t, diff);
  }

  // --- Shapley attribution (per-draw parallelism; outputs match bit for bit)
  {
    auto bg = random_matrix(100, 18, 5);
    std::vector<double> w(18);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (double& v : w) v = d(rng);
    ew::PredictFn f = [&w](const std::vector<double>& row) {
      double s = 0.0;
      for (std::size_t i = 0; i < row.size(); ++i) s += w[i] * row[i];
      return s;
    };
    std::vector<double> target(18, 0.7);
    Timing t;
    ew::par::set_threads(1);
    auto t0 = Clock::now();
    auto a1 = ew::attribute(f, bg, target, 2000, 7);
    t.serial = seconds_since(t0);
    ew::par::set_threads(hw);
    t0 = Clock::now();
    auto a2 = ew::attribute(f, bg, target, 2000, 7);
    t.parallel = seconds_since(t0);
    double diff = 0.0;
    for (std::size_t i = 0; i < a1.phi.size(); ++i)
      diff = std::max(diff, std::abs(a1.phi[i] - a2.phi[i]));
    report("shapley 18 feats x 2000 draws", t, diff);
  }

  return 0;
}
