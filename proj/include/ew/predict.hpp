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

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ew/forest.hpp"
#include "ew/mlp.hpp"
#include "ew/svm.hpp"
#include "ew/types.hpp"
#include "ew/util.hpp"

namespace ew {

/// Per-feature mean/std computed from training rows only. Constant features
/// keep std 1 and emit a warning instead of dividing by zero.
class Standardizer {
 public:
  Standardizer() = default;

  static Standardizer fit(const Matrix& train, std::vector<std::string>* warnings = nullptr);

  std::vector<double> transform(const std::vector<double>& row) const;
  Matrix transform(const Matrix& m) const;

  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return std_; }

  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);

 private:
  std::vector<double> mean_, std_;
};

/// Concatenation in the fixed (visual, audio, text) order; see
/// feature_names() for the canonical labels.
std::vector<double> fuse(const std::vector<double>& visual, const std::vector<double>& audio,
                         const std::vector<double>& text);

/// Nearest integer in 1..4; ties at .5 round up. OutOfRange outside [1,4].
int round_score(double value);

enum class ModelFamily { random_forest, support_vector, two_layer_feedforward };
enum class Task { classification, regression };

std::string to_string(ModelFamily f);
std::string to_string(Task t);
ModelFamily family_from_string(const std::string& s);
Task task_from_string(const std::string& s);

/// Hyperparameter grid: named axes, each a list of candidate values; the
/// search enumerates the cartesian product in axis-name order.
using HyperGrid = std::map<std::string, std::vector<double>>;

HyperGrid default_grid(ModelFamily family);

struct ModelSpec {
  ModelFamily family = ModelFamily::random_forest;
  Task task = Task::regression;
  HyperGrid grid;  // empty = default_grid(family)
  std::uint64_t seed = 1;
};

/// One fitted configuration behind a uniform predict surface.
class Estimator {
 public:
  Estimator() = default;

  /// Regression values are clamped to [1,4]; classification returns the
  /// predicted class as a value in {1,2,3,4}.
  double predict_value(const std::vector<double>& standardized_row) const;

  Task task() const { return task_; }

  nlohmann::json to_json() const;
  static Estimator from_json(const nlohmann::json& j);

  static Estimator make_forest(RandomForest f, Task t);
  static Estimator make_svm(SvmModel m, Task t);
  static Estimator make_mlp(Mlp m, Task t);

 private:
  Task task_ = Task::regression;
  // exactly one is set
  std::shared_ptr<RandomForest> forest_;
  std::shared_ptr<SvmModel> svm_;
  std::shared_ptr<Mlp> mlp_;
};

struct TrainedModel {
  ModelSpec spec;
  Standardizer standardizer;
  Estimator estimator;
  std::map<std::string, double> chosen;  // winning grid point
  double inner_score = 0.0;              // mean inner-fold r or accuracy
  std::optional<double> train_pearson;   // in-sample r vs training labels
  double train_accuracy = 0.0;           // classification only
  int fold = -1;

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);
};

/// Grid search over an inner grouped 3-fold split of the training rows
/// (groups = lessons, so no lesson leaks across the inner split), scored by
/// Pearson r (regression) or accuracy (classification); the winner is refit
/// on all rows. Labels arrive as real human means; classification trains on
/// their round_score values. Throws InsufficientData (< 10 rows) and
/// DegenerateLabels (all labels equal).
TrainedModel fit_model(const ModelSpec& spec, const Matrix& rows,
                       const std::vector<double>& labels,
                       const std::vector<std::string>& groups);

/// Standardize with the training-fold statistics and predict.
ScoreEstimate predict_score(const TrainedModel& model, const std::vector<double>& raw_row,
                            const SegmentId& segment);

struct EnsembleSpec {
  enum class Mode { unweighted, weighted };
  Mode mode = Mode::unweighted;
  std::vector<double> weights;  // weighted mode: one per estimate, sum 1
};

/// Weights proportional to max(train r, eps), normalized to sum 1.
std::vector<double> ensemble_weights(const std::vector<double>& train_r, double eps = 0.01);

/// Convex combination of >= 2 estimates for one segment. Weighted mode
/// without matching weights throws MissingTrainPerformance.
ScoreEstimate combine(const std::vector<ScoreEstimate>& estimates, const EnsembleSpec& spec);

}  // namespace ew
