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
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ew/util.hpp"

namespace ew {

/// Bagged CART ensemble. Trees draw a bootstrap sample and consider a random
/// feature subset at every split. Each tree owns an RNG seeded from
/// (seed, tree index), so training is reproducible for any thread count;
/// the tree loop runs through par::parallel_for.
class RandomForest {
 public:
  struct Config {
    int n_trees = 100;
    int max_depth = 0;  // 0 = unlimited
    int min_samples_split = 2;
    int mtry = 0;  // 0 = sqrt(p) for classification, p/3 for regression
    bool classification = false;
    int n_classes = 0;  // classification only; labels are 0-based
    std::uint64_t seed = 1;
  };

  RandomForest() = default;
  explicit RandomForest(const Config& cfg) : cfg_(cfg) {}

  /// Regression: y holds real targets. Classification: y holds 0-based class
  /// indices (cast to double).
  void fit(const Matrix& x, const std::vector<double>& y);

  /// Regression: mean of tree means. Classification: majority vote over
  /// trees, ties to the lowest class index; returned as the class value.
  double predict(const std::vector<double>& row) const;

  const Config& config() const { return cfg_; }

  nlohmann::json to_json() const;
  static RandomForest from_json(const nlohmann::json& j);

 private:
  struct Node {
    int feature = -1;        // -1 = leaf
    double threshold = 0.0;  // go left when x[feature] <= threshold
    int left = -1, right = -1;
    double value = 0.0;               // regression leaf mean
    std::vector<double> class_votes;  // classification leaf distribution
  };
  struct Tree {
    std::vector<Node> nodes;
  };

  Config cfg_;
  std::vector<Tree> trees_;

  Tree grow_tree(const Matrix& x, const std::vector<double>& y, std::uint64_t tree_seed) const;
  double predict_tree(const Tree& t, const std::vector<double>& row) const;
};

}  // namespace ew
