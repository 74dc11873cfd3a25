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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ew/types.hpp"

namespace ew {

/// Lesson-grouped fold assignment: all segments of a lesson share a fold and
/// each fold approximates the global distribution of rounded mean scores.
struct FoldAssignment {
  int k = 0;
  std::map<SegmentId, int> fold_of;
  std::vector<int> strata_used;  // observed rounded scores
  std::uint64_t seed = 0;

  std::vector<SegmentId> segments_in(int fold) const;
};

/// Greedy largest-first assignment of lessons to folds, balancing both fold
/// sizes and per-stratum counts; a lesson's profile is the multiset of its
/// segments' rounded mean scores. Deterministic under seed. Throws
/// TooFewLessons when there are fewer lessons than folds.
FoldAssignment make_folds(const std::vector<Segment>& segments, int k, std::uint64_t seed);

/// Product-moment correlation. Preconditions: equal lengths >= 3 and both
/// inputs non-constant; constant input raises ConstantInput (callers skip
/// and report — substituting 0 would bias averages).
double pearson(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value for H0: r = 0, via the t transform with n-2 degrees of
/// freedom.
double pearson_p_value(double r, std::size_t n);

struct CorrelationReport {
  std::vector<double> per_unit_r;  // per fold, or per rater
  std::vector<std::size_t> n_per_unit;
  double mean_r = 0.0;
  double standard_error = 0.0;  // sample std over units / sqrt(unit count)
  std::vector<std::string> excluded;  // skipped units with reasons
};

/// Mean and standard error over the provided unit correlations.
CorrelationReport summarize_correlations(std::vector<double> rs, std::vector<std::size_t> ns);

/// Per-fold r between a source's estimates and the human means, averaged
/// over folds. A fold with constant input propagates ConstantInput tagged
/// with the fold id.
CorrelationReport evaluate_source(const std::vector<std::vector<double>>& estimates_per_fold,
                                  const std::vector<std::vector<double>>& human_per_fold);

/// Leave-one-rater-out reliability: for every rater, r between their scores
/// and the co-raters' mean on shared multi-rated segments. Raters with fewer
/// than 3 usable segments or constant vectors are skipped and listed.
CorrelationReport leave_one_rater_out_irr(const std::vector<Segment>& segments);

}  // namespace ew
