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

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ew/types.hpp"
#include "ew/util.hpp"

namespace ew {

/// Model under explanation, already composed with its standardizer: raw
/// feature row in, score out.
using PredictFn = std::function<double(const std::vector<double>&)>;

/// Per-row additive attribution. base_value + sum(phi) equals the prediction
/// up to efficiency_residual.
struct AttributionRow {
  SegmentId segment;
  int fold = -1;
  std::vector<double> values;  // raw feature values of the explained row
  std::vector<double> phi;     // one Shapley value per feature
  double base_value = 0.0;     // mean prediction over the background set
  double prediction = 0.0;
  double efficiency_residual = 0.0;
};

/// Permutation-walk sampling estimate of the Shapley values, with the
/// background set providing absent-feature values. `budget` counts
/// permutation draws (each costs n_features model evaluations) and must be
/// at least 2 x n_features; draws cycle the background rows round-robin, so
/// whenever budget is a multiple of the background size the attributions sum
/// to prediction - base exactly. Draw d derives its own RNG from (seed, d),
/// making the result independent of thread count.
AttributionRow attribute(const PredictFn& f, const Matrix& background,
                         const std::vector<double>& target, int budget, std::uint64_t seed);

/// Exhaustive enumeration over all 2^n coalitions; the test oracle for small
/// feature counts (guarded to n <= 16).
std::vector<double> exact_shapley(const PredictFn& f, const Matrix& background,
                                  const std::vector<double>& target);

/// Background subsampling: keep at most `cap` rows, allocated across strata
/// proportionally (largest remainder), rows drawn without replacement under
/// the seed.
Matrix stratified_background(const Matrix& rows, const std::vector<int>& strata,
                             std::size_t cap, std::uint64_t seed);

struct AttributionSummary {
  std::vector<std::size_t> ranking;   // feature indices, descending importance
  std::vector<double> importance;     // sum of |phi| per feature (index-aligned)
  // Per top-ranked feature: (feature value, phi) pairs across rows, for
  // dependence inspection.
  std::vector<std::vector<std::pair<double, double>>> dependence;
  int top_n = 0;
};

/// Importance = sum of |phi| over all rows (gathered across test folds);
/// ranking is descending, ties broken by feature index.
AttributionSummary summarize(const std::vector<AttributionRow>& rows, int top_n = 10);

}  // namespace ew
