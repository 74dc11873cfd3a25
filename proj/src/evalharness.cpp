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

#include "ew/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "ew/errors.hpp"
#include "ew/predict.hpp"
#include "ew/util.hpp"

namespace ew {

std::vector<SegmentId> FoldAssignment::segments_in(int fold) const {
  std::vector<SegmentId> out;
  for (const auto& [id, f] : fold_of)
    if (f == fold) out.push_back(id);
  return out;
}

FoldAssignment make_folds(const std::vector<Segment>& segments, int k, std::uint64_t seed) {
  if (k < 2) throw Error("make_folds: k must be >= 2");

  // Lesson profiles: multiset of rounded mean scores per lesson.
  struct LessonProfile {
    LessonId id;
    std::vector<SegmentId> segments;
    std::vector<int> strata;  // rounded mean score per segment
  };
  std::map<LessonId, LessonProfile> by_lesson;
  std::set<int> strata_seen;
  for (const auto& s : segments) {
    auto& lp = by_lesson[s.id.lesson];
    lp.id = s.id.lesson;
    lp.segments.push_back(s.id);
    int stratum = s.ratings.empty() ? 0 : round_score(mean_human_rating(s).value);
    lp.strata.push_back(stratum);
    strata_seen.insert(stratum);
  }
  if (by_lesson.size() < static_cast<std::size_t>(k))
    throw TooFewLessons(std::to_string(by_lesson.size()) + " lessons for k=" + std::to_string(k));

  std::vector<int> strata(strata_seen.begin(), strata_seen.end());
  auto stratum_index = [&strata](int s) {
    return static_cast<std::size_t>(std::lower_bound(strata.begin(), strata.end(), s) -
                                    strata.begin());
  };

  std::vector<LessonProfile> lessons;
  lessons.reserve(by_lesson.size());
  for (auto& [id, lp] : by_lesson) lessons.push_back(std::move(lp));

  // Largest lessons first; the seed shuffles ties so distinct seeds explore
  // distinct (still deterministic) assignments.
  std::mt19937_64 rng(seed);
  std::shuffle(lessons.begin(), lessons.end(), rng);
  std::stable_sort(lessons.begin(), lessons.end(), [](const auto& a, const auto& b) {
    return a.segments.size() > b.segments.size();
  });

  const auto ns = strata.size();
  std::vector<std::vector<double>> fold_strata(static_cast<std::size_t>(k),
                                               std::vector<double>(ns, 0.0));
  std::vector<double> fold_sizes(static_cast<std::size_t>(k), 0.0);

  FoldAssignment out;
  out.k = k;
  out.seed = seed;
  out.strata_used = strata;

  for (const auto& lesson : lessons) {
    std::vector<double> add(ns, 0.0);
    for (int s : lesson.strata) add[stratum_index(s)] += 1.0;

    // Cost of placing the lesson in fold f: spread of per-stratum counts
    // across folds after the hypothetical add, plus a mild size-balance term.
    int best_f = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int f = 0; f < k; ++f) {
      double cost = 0.0;
      for (std::size_t s = 0; s < ns; ++s) {
        double mean = 0.0;
        for (int g = 0; g < k; ++g)
          mean += fold_strata[static_cast<std::size_t>(g)][s] + (g == f ? add[s] : 0.0);
        mean /= static_cast<double>(k);
        for (int g = 0; g < k; ++g) {
          double v = fold_strata[static_cast<std::size_t>(g)][s] + (g == f ? add[s] : 0.0) - mean;
          cost += v * v;
        }
      }
      double size_term = fold_sizes[static_cast<std::size_t>(f)] +
                         static_cast<double>(lesson.segments.size());
      cost += 1e-3 * size_term * size_term;
      if (cost < best_cost - 1e-12) {
        best_cost = cost;
        best_f = f;
      }
    }
    for (std::size_t s = 0; s < ns; ++s)
      fold_strata[static_cast<std::size_t>(best_f)][s] += add[s];
    fold_sizes[static_cast<std::size_t>(best_f)] += static_cast<double>(lesson.segments.size());
    for (const auto& sid : lesson.segments) out.fold_of[sid] = best_f;
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("pearson: length mismatch");
  if (x.size() < 3) throw InsufficientData("pearson: need >= 3 pairs");
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ConstantInput("pearson: constant input");
  return sxy / std::sqrt(sxx * syy);
}

double pearson_p_value(double r, std::size_t n) {
  if (n < 3) return 1.0;
  double df = static_cast<double>(n - 2);
  double t = r * std::sqrt(df / std::max(1e-15, 1.0 - r * r));
  // Student-t survival via the regularized incomplete beta function,
  // evaluated with a continued fraction (Lentz).
  double xx = df / (df + t * t);
  double a = df / 2.0, b = 0.5;
  auto betacf = [](double aa, double bb, double x) {
    const int kMaxIter = 200;
    const double eps = 3e-14, fpmin = 1e-300;
    double qab = aa + bb, qap = aa + 1.0, qam = aa - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
      int m2 = 2 * m;
      double num = m * (bb - m) * x / ((qam + m2) * (aa + m2));
      d = 1.0 + num * d;
      if (std::abs(d) < fpmin) d = fpmin;
      c = 1.0 + num / c;
      if (std::abs(c) < fpmin) c = fpmin;
      d = 1.0 / d;
      h *= d * c;
      num = -(aa + m) * (qab + m) * x / ((aa + m2) * (qap + m2));
      d = 1.0 + num * d;
      if (std::abs(d) < fpmin) d = fpmin;
      c = 1.0 + num / c;
      if (std::abs(c) < fpmin) c = fpmin;
      d = 1.0 / d;
      double del = d * c;
      h *= del;
      if (std::abs(del - 1.0) < eps) break;
    }
    return h;
  };
  auto ibeta = [&](double aa, double bb, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln = std::lgamma(aa + bb) - std::lgamma(aa) - std::lgamma(bb) +
                aa * std::log(x) + bb * std::log(1.0 - x);
    double front = std::exp(ln);
    if (x < (aa + 1.0) / (aa + bb + 2.0)) return front * betacf(aa, bb, x) / aa;
    return 1.0 - front * betacf(bb, aa, 1.0 - x) / bb;
  };
  return std::clamp(ibeta(a, b, xx), 0.0, 1.0);
}

CorrelationReport summarize_correlations(std::vector<double> rs, std::vector<std::size_t> ns) {
  CorrelationReport rep;
  rep.per_unit_r = std::move(rs);
  rep.n_per_unit = std::move(ns);
  const auto k = rep.per_unit_r.size();
  if (k == 0) return rep;
  double sum = 0.0;
  for (double r : rep.per_unit_r) sum += r;
  rep.mean_r = sum / static_cast<double>(k);
  if (k >= 2) {
    double ss = 0.0;
    for (double r : rep.per_unit_r) {
      double d = r - rep.mean_r;
      ss += d * d;
    }
    double sd = std::sqrt(ss / static_cast<double>(k - 1));  // sample std
    rep.standard_error = sd / std::sqrt(static_cast<double>(k));
  }
  return rep;
}

CorrelationReport evaluate_source(const std::vector<std::vector<double>>& estimates_per_fold,
                                  const std::vector<std::vector<double>>& human_per_fold) {
  if (estimates_per_fold.size() != human_per_fold.size())
    throw DimensionMismatch("evaluate_source: fold count mismatch");
  std::vector<double> rs;
  std::vector<std::size_t> ns;
  for (std::size_t f = 0; f < estimates_per_fold.size(); ++f) {
    const auto& est = estimates_per_fold[f];
    const auto& hum = human_per_fold[f];
    if (est.size() < 3)
      throw InsufficientData("fold " + std::to_string(f) + ": fewer than 3 scored segments");
    try {
      rs.push_back(pearson(est, hum));
    } catch (const ConstantInput&) {
      throw ConstantInput("fold " + std::to_string(f) + ": constant input");
    }
    ns.push_back(est.size());
  }
  return summarize_correlations(std::move(rs), std::move(ns));
}

CorrelationReport leave_one_rater_out_irr(const std::vector<Segment>& segments) {
  // Collect, per rater, the (own score, co-rater mean) pairs on segments
  // with at least two ratings.
  std::map<RaterId, std::vector<std::pair<double, double>>> pairs;
  bool any_multi = false;
  for (const auto& seg : segments) {
    if (seg.ratings.size() < 2) continue;  // single-rated segments contribute nothing here
    any_multi = true;
    for (const auto& r : seg.ratings) {
      double others = 0.0;
      int n = 0;
      for (const auto& o : seg.ratings) {
        if (&o == &r) continue;
        others += o.score;
        ++n;
      }
      pairs[r.rater].push_back({static_cast<double>(r.score), others / n});
    }
  }
  if (!any_multi) throw NoDoubleRatedSegments("corpus has no multi-rated segments");

  std::vector<double> rs;
  std::vector<std::size_t> ns;
  std::vector<std::string> excluded;
  for (const auto& [rater, xy] : pairs) {
    if (xy.size() < 3) {
      excluded.push_back(rater + ": fewer than 3 shared segments");
      continue;
    }
    std::vector<double> own, other;
    for (auto [a, b] : xy) {
      own.push_back(a);
      other.push_back(b);
    }
    try {
      rs.push_back(pearson(own, other));
      ns.push_back(own.size());
    } catch (const ConstantInput&) {
      excluded.push_back(rater + ": constant ratings");
    }
  }
  auto rep = summarize_correlations(std::move(rs), std::move(ns));
  rep.excluded = std::move(excluded);
  return rep;
}

}  // namespace ew
