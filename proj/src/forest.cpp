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

#include "ew/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "ew/errors.hpp"
#include "ew/parallel.hpp"

using nlohmann::json;

namespace ew {

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // impurity decrease; > 0 for a usable split
};

double gini(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double g = 1.0;
  for (int c : counts) {
    double p = static_cast<double>(c) / total;
    g -= p * p;
  }
  return g;
}

}  // namespace

void RandomForest::fit(const Matrix& x, const std::vector<double>& y) {
  if (x.rows != y.size()) throw DimensionMismatch("forest fit: rows vs targets");
  if (x.rows == 0) throw InsufficientData("forest fit: empty matrix");
  if (cfg_.classification && cfg_.n_classes <= 0) {
    int mx = 0;
    for (double v : y) mx = std::max(mx, static_cast<int>(v));
    cfg_.n_classes = mx + 1;
  }
  trees_.assign(static_cast<std::size_t>(cfg_.n_trees), {});
  par::parallel_for(static_cast<std::size_t>(cfg_.n_trees), [&](std::size_t t) {
    trees_[t] = grow_tree(x, y, mix_seed(cfg_.seed, t));
  });
}

RandomForest::Tree RandomForest::grow_tree(const Matrix& x, const std::vector<double>& y,
                                           std::uint64_t tree_seed) const {
  std::mt19937_64 rng(tree_seed);
  const std::size_t n = x.rows;
  const int p = static_cast<int>(x.cols);
  int mtry = cfg_.mtry;
  if (mtry <= 0)
    mtry = cfg_.classification
               ? std::max(1, static_cast<int>(std::round(std::sqrt(static_cast<double>(p)))))
               : std::max(1, p / 3);
  mtry = std::min(mtry, p);

  // Bootstrap sample.
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = pick(rng);

  Tree tree;
  std::vector<int> features(static_cast<std::size_t>(p));
  std::iota(features.begin(), features.end(), 0);

  // Recursive CART growth; work holds (node index, row subset, depth).
  struct Item {
    int node;
    std::vector<std::size_t> rows;
    int depth;
  };
  tree.nodes.emplace_back();
  std::vector<Item> stack{{0, std::move(rows), 0}};

  auto make_leaf = [&](Node& node, const std::vector<std::size_t>& subset) {
    if (cfg_.classification) {
      node.class_votes.assign(static_cast<std::size_t>(cfg_.n_classes), 0.0);
      for (std::size_t r : subset)
        node.class_votes[static_cast<std::size_t>(y[r])] += 1.0;
    } else {
      double s = 0.0;
      for (std::size_t r : subset) s += y[r];
      node.value = subset.empty() ? 0.0 : s / static_cast<double>(subset.size());
    }
  };

  auto best_split = [&](const std::vector<std::size_t>& subset,
                        std::mt19937_64& local_rng) -> SplitChoice {
    SplitChoice best;
    // Sample the feature subset without replacement (partial Fisher-Yates).
    std::vector<int> feats = features;
    for (int i = 0; i < mtry; ++i) {
      std::uniform_int_distribution<int> d(i, p - 1);
      std::swap(feats[static_cast<std::size_t>(i)], feats[static_cast<std::size_t>(d(local_rng))]);
    }
    const auto m = subset.size();
    std::vector<std::pair<double, double>> vals(m);  // (feature value, target)
    for (int fi = 0; fi < mtry; ++fi) {
      int f = feats[static_cast<std::size_t>(fi)];
      for (std::size_t i = 0; i < m; ++i)
        vals[i] = {x[subset[i]][static_cast<std::size_t>(f)], y[subset[i]]};
      std::sort(vals.begin(), vals.end());
      if (vals.front().first == vals.back().first) continue;

      if (cfg_.classification) {
        std::vector<int> left_c(static_cast<std::size_t>(cfg_.n_classes), 0);
        std::vector<int> right_c(static_cast<std::size_t>(cfg_.n_classes), 0);
        for (std::size_t i = 0; i < m; ++i) ++right_c[static_cast<std::size_t>(vals[i].second)];
        double parent = gini(right_c, static_cast<int>(m));
        for (std::size_t i = 0; i + 1 < m; ++i) {
          int cls = static_cast<int>(vals[i].second);
          ++left_c[static_cast<std::size_t>(cls)];
          --right_c[static_cast<std::size_t>(cls)];
          if (vals[i].first == vals[i + 1].first) continue;
          auto nl = static_cast<double>(i + 1), nr = static_cast<double>(m - i - 1);
          double score = parent - (nl * gini(left_c, static_cast<int>(nl)) +
                                   nr * gini(right_c, static_cast<int>(nr))) /
                                      static_cast<double>(m);
          if (score > best.score + 1e-15) {
            best = {f, 0.5 * (vals[i].first + vals[i + 1].first), score};
          }
        }
      } else {
        double sum_r = 0.0, sumsq_r = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          sum_r += vals[i].second;
          sumsq_r += vals[i].second * vals[i].second;
        }
        double parent = sumsq_r - sum_r * sum_r / static_cast<double>(m);
        double sum_l = 0.0, sumsq_l = 0.0;
        for (std::size_t i = 0; i + 1 < m; ++i) {
          sum_l += vals[i].second;
          sumsq_l += vals[i].second * vals[i].second;
          sum_r -= vals[i].second;
          sumsq_r -= vals[i].second * vals[i].second;
          if (vals[i].first == vals[i + 1].first) continue;
          auto nl = static_cast<double>(i + 1), nr = static_cast<double>(m - i - 1);
          double sse = (sumsq_l - sum_l * sum_l / nl) + (sumsq_r - sum_r * sum_r / nr);
          double score = parent - sse;
          if (score > best.score + 1e-15) {
            best = {f, 0.5 * (vals[i].first + vals[i + 1].first), score};
          }
        }
      }
    }
    return best;
  };

  while (!stack.empty()) {
    Item item = std::move(stack.back());
    stack.pop_back();
    Node& node = tree.nodes[static_cast<std::size_t>(item.node)];

    bool pure = true;
    for (std::size_t i = 1; i < item.rows.size(); ++i)
      if (y[item.rows[i]] != y[item.rows[0]]) {
        pure = false;
        break;
      }
    bool depth_capped = cfg_.max_depth > 0 && item.depth >= cfg_.max_depth;
    if (pure || depth_capped ||
        item.rows.size() < static_cast<std::size_t>(cfg_.min_samples_split)) {
      make_leaf(node, item.rows);
      continue;
    }
    SplitChoice split = best_split(item.rows, rng);
    if (split.feature < 0) {
      make_leaf(node, item.rows);
      continue;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t r : item.rows) {
      if (x[r][static_cast<std::size_t>(split.feature)] <= split.threshold)
        left.push_back(r);
      else
        right.push_back(r);
    }
    if (left.empty() || right.empty()) {
      make_leaf(node, item.rows);
      continue;
    }
    int left_idx = static_cast<int>(tree.nodes.size());
    int right_idx = left_idx + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    // re-acquire: emplace_back may have reallocated the node storage
    Node& parent_node = tree.nodes[static_cast<std::size_t>(item.node)];
    parent_node.feature = split.feature;
    parent_node.threshold = split.threshold;
    parent_node.left = left_idx;
    parent_node.right = right_idx;
    stack.push_back({right_idx, std::move(right), item.depth + 1});
    stack.push_back({left_idx, std::move(left), item.depth + 1});
  }
  return tree;
}

double RandomForest::predict_tree(const Tree& t, const std::vector<double>& row) const {
  int idx = 0;
  while (t.nodes[static_cast<std::size_t>(idx)].feature >= 0) {
    const Node& n = t.nodes[static_cast<std::size_t>(idx)];
    idx = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  const Node& leaf = t.nodes[static_cast<std::size_t>(idx)];
  if (!cfg_.classification) return leaf.value;
  // Leaf majority; ties to the lowest class.
  int best = 0;
  for (int c = 1; c < cfg_.n_classes; ++c)
    if (leaf.class_votes[static_cast<std::size_t>(c)] >
        leaf.class_votes[static_cast<std::size_t>(best)])
      best = c;
  return static_cast<double>(best);
}

double RandomForest::predict(const std::vector<double>& row) const {
  if (trees_.empty()) throw Error("forest: not fitted");
  if (cfg_.classification) {
    std::vector<int> votes(static_cast<std::size_t>(cfg_.n_classes), 0);
    for (const auto& t : trees_)
      ++votes[static_cast<std::size_t>(static_cast<int>(predict_tree(t, row)))];
    int best = 0;
    for (int c = 1; c < cfg_.n_classes; ++c)
      if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
    return static_cast<double>(best);
  }
  double s = 0.0;
  for (const auto& t : trees_) s += predict_tree(t, row);
  return s / static_cast<double>(trees_.size());
}

json RandomForest::to_json() const {
  json jtrees = json::array();
  for (const auto& t : trees_) {
    json jnodes = json::array();
    for (const auto& n : t.nodes) {
      jnodes.push_back({{"f", n.feature},
                        {"t", n.threshold},
                        {"l", n.left},
                        {"r", n.right},
                        {"v", n.value},
                        {"c", n.class_votes}});
    }
    jtrees.push_back(std::move(jnodes));
  }
  return json{{"n_trees", cfg_.n_trees},
              {"max_depth", cfg_.max_depth},
              {"min_samples_split", cfg_.min_samples_split},
              {"mtry", cfg_.mtry},
              {"classification", cfg_.classification},
              {"n_classes", cfg_.n_classes},
              {"seed", cfg_.seed},
              {"trees", jtrees}};
}

RandomForest RandomForest::from_json(const json& j) {
  Config cfg;
  cfg.n_trees = j.at("n_trees").get<int>();
  cfg.max_depth = j.at("max_depth").get<int>();
  cfg.min_samples_split = j.at("min_samples_split").get<int>();
  cfg.mtry = j.at("mtry").get<int>();
  cfg.classification = j.at("classification").get<bool>();
  cfg.n_classes = j.at("n_classes").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  RandomForest f(cfg);
  for (const auto& jt : j.at("trees")) {
    Tree t;
    for (const auto& jn : jt) {
      Node n;
      n.feature = jn.at("f").get<int>();
      n.threshold = jn.at("t").get<double>();
      n.left = jn.at("l").get<int>();
      n.right = jn.at("r").get<int>();
      n.value = jn.at("v").get<double>();
      n.class_votes = jn.at("c").get<std::vector<double>>();
      t.nodes.push_back(std::move(n));
    }
    f.trees_.push_back(std::move(t));
  }
  return f;
}

}  // namespace ew
