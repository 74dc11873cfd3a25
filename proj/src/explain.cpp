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

#include "ew/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "ew/errors.hpp"
#include "ew/parallel.hpp"

namespace ew {

AttributionRow attribute(const PredictFn& f, const Matrix& background,
                         const std::vector<double>& target, int budget, std::uint64_t seed) {
  if (background.rows == 0) throw EmptyBackground("attribute: empty background");
  const auto n = target.size();
  if (background.cols != n) throw DimensionMismatch("attribute: background vs target width");
  if (budget < 2 * static_cast<int>(n))
    throw Error("attribute: budget must be >= 2 x feature count");

  AttributionRow row;
  row.values = target;
  row.phi.assign(n, 0.0);
  row.prediction = f(target);

  // Background predictions are reused by every draw.
  std::vector<double> f_bg(background.rows);
  for (std::size_t b = 0; b < background.rows; ++b) f_bg[b] = f(background.row(b));
  double base = 0.0;
  for (double v : f_bg) base += v;
  base /= static_cast<double>(background.rows);
  row.base_value = base;

  const auto draws = static_cast<std::size_t>(budget);
  // Per-draw contributions land in a private slot; the final reduction runs
  // in draw order, so the result does not depend on the thread count.
  Matrix contrib(draws, n);
  std::vector<double> f_b_used(draws, 0.0);
  par::parallel_for(draws, [&](std::size_t d) {
    std::mt19937_64 rng(mix_seed(seed, d));
    const std::size_t b = d % background.rows;  // round-robin coverage
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);

    std::vector<double> x = background.row(b);
    double prev = f_bg[b];
    f_b_used[d] = prev;
    for (std::size_t j : perm) {
      x[j] = target[j];
      double v = f(x);
      contrib[d][j] = v - prev;
      prev = v;
    }
  });
  for (std::size_t d = 0; d < draws; ++d)
    for (std::size_t j = 0; j < n; ++j) row.phi[j] += contrib[d][j];
  for (double& p : row.phi) p /= static_cast<double>(draws);

  double sum_phi = 0.0;
  for (double p : row.phi) sum_phi += p;
  row.efficiency_residual = std::abs(row.base_value + sum_phi - row.prediction);
  return row;
}

std::vector<double> exact_shapley(const PredictFn& f, const Matrix& background,
                                  const std::vector<double>& target) {
  if (background.rows == 0) throw EmptyBackground("exact_shapley: empty background");
  const auto n = target.size();
  if (n > 16) throw Error("exact_shapley: feature count capped at 16");

  // v(mask) = mean over background of f(features in mask from target, rest
  // from the background row).
  const std::size_t n_masks = std::size_t{1} << n;
  std::vector<double> value(n_masks, 0.0);
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    double acc = 0.0;
    for (std::size_t b = 0; b < background.rows; ++b) {
      std::vector<double> x = background.row(b);
      for (std::size_t j = 0; j < n; ++j)
        if (mask & (std::size_t{1} << j)) x[j] = target[j];
      acc += f(x);
    }
    value[mask] = acc / static_cast<double>(background.rows);
  }

  std::vector<double> fact(n + 1, 1.0);
  for (std::size_t i = 1; i <= n; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);

  std::vector<double> phi(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      auto s = static_cast<std::size_t>(std::popcount(mask));
      double w = fact[s] * fact[n - s - 1] / fact[n];
      phi[j] += w * (value[mask | bit] - value[mask]);
    }
  }
  return phi;
}

Matrix stratified_background(const Matrix& rows, const std::vector<int>& strata,
                             std::size_t cap, std::uint64_t seed) {
  if (rows.rows != strata.size()) throw DimensionMismatch("stratified_background: strata size");
  if (rows.rows <= cap || cap == 0) return rows;

  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < strata.size(); ++i) groups[strata[i]].push_back(i);

  // Proportional quotas with largest remainders.
  struct Quota {
    int stratum;
    std::size_t take;
    double remainder;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (const auto& [s, members] : groups) {
    double exact = static_cast<double>(cap) * static_cast<double>(members.size()) /
                   static_cast<double>(rows.rows);
    auto base = static_cast<std::size_t>(std::floor(exact));
    base = std::min(base, members.size());
    quotas.push_back({s, base, exact - std::floor(exact)});
    assigned += base;
  }
  std::sort(quotas.begin(), quotas.end(), [](const Quota& a, const Quota& b) {
    if (a.remainder != b.remainder) return a.remainder > b.remainder;
    return a.stratum < b.stratum;
  });
  for (auto& q : quotas) {
    if (assigned >= cap) break;
    if (q.take < groups[q.stratum].size()) {
      ++q.take;
      ++assigned;
    }
  }

  Matrix out;
  std::sort(quotas.begin(), quotas.end(),
            [](const Quota& a, const Quota& b) { return a.stratum < b.stratum; });
  for (const auto& q : quotas) {
    auto members = groups[q.stratum];
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(q.stratum)));
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i = 0; i < q.take; ++i) out.push_row(rows.row(members[i]));
  }
  return out;
}

AttributionSummary summarize(const std::vector<AttributionRow>& rows, int top_n) {
  if (rows.empty()) throw Error("summarize: no attribution rows");
  const auto n = rows[0].phi.size();
  AttributionSummary s;
  s.importance.assign(n, 0.0);
  for (const auto& r : rows) {
    if (r.phi.size() != n) throw DimensionMismatch("summarize: inconsistent widths");
    for (std::size_t j = 0; j < n; ++j) s.importance[j] += std::abs(r.phi[j]);
  }
  s.ranking.resize(n);
  std::iota(s.ranking.begin(), s.ranking.end(), std::size_t{0});
  std::stable_sort(s.ranking.begin(), s.ranking.end(), [&](std::size_t a, std::size_t b) {
    return s.importance[a] > s.importance[b];
  });
  s.top_n = std::min<int>(top_n, static_cast<int>(n));
  for (int k = 0; k < s.top_n; ++k) {
    std::size_t j = s.ranking[static_cast<std::size_t>(k)];
    std::vector<std::pair<double, double>> dep;
    dep.reserve(rows.size());
    for (const auto& r : rows) dep.emplace_back(r.values[j], r.phi[j]);
    s.dependence.push_back(std::move(dep));
  }
  return s;
}

}  // namespace ew
