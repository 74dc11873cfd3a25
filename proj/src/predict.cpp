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

#include "ew/predict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "ew/errors.hpp"
#include "ew/evalharness.hpp"

using nlohmann::json;

namespace ew {

Standardizer Standardizer::fit(const Matrix& train, std::vector<std::string>* warnings) {
  if (train.rows == 0) throw InsufficientData("standardizer: no rows");
  Standardizer s;
  s.mean_.assign(train.cols, 0.0);
  s.std_.assign(train.cols, 1.0);
  for (std::size_t c = 0; c < train.cols; ++c) {
    double m = 0.0;
    for (std::size_t r = 0; r < train.rows; ++r) m += train[r][c];
    m /= static_cast<double>(train.rows);
    double var = 0.0;
    for (std::size_t r = 0; r < train.rows; ++r) {
      double d = train[r][c] - m;
      var += d * d;
    }
    var /= static_cast<double>(train.rows);  // population variance
    s.mean_[c] = m;
    if (var > 0.0) {
      s.std_[c] = std::sqrt(var);
    } else {
      s.std_[c] = 1.0;
      if (warnings)
        warnings->push_back("feature " + std::to_string(c) + " is constant; std set to 1");
    }
  }
  return s;
}

std::vector<double> Standardizer::transform(const std::vector<double>& row) const {
  if (row.size() != mean_.size()) throw DimensionMismatch("standardizer: row width");
  std::vector<double> out(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) out[i] = (row[i] - mean_[i]) / std_[i];
  return out;
}

Matrix Standardizer::transform(const Matrix& m) const {
  if (m.cols != mean_.size()) throw DimensionMismatch("standardizer: matrix width");
  Matrix out(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) out[r][c] = (m[r][c] - mean_[c]) / std_[c];
  return out;
}

json Standardizer::to_json() const { return json{{"mean", mean_}, {"std", std_}}; }

Standardizer Standardizer::from_json(const json& j) {
  Standardizer s;
  s.mean_ = j.at("mean").get<std::vector<double>>();
  s.std_ = j.at("std").get<std::vector<double>>();
  return s;
}

std::vector<double> fuse(const std::vector<double>& visual, const std::vector<double>& audio,
                         const std::vector<double>& text) {
  if (visual.size() != kVisualDim || audio.size() != kAudioDim || text.size() != kTextDim)
    throw DimensionMismatch("fuse: expected 7+7+4 components");
  std::vector<double> out;
  out.reserve(kFusedDim);
  out.insert(out.end(), visual.begin(), visual.end());
  out.insert(out.end(), audio.begin(), audio.end());
  out.insert(out.end(), text.begin(), text.end());
  return out;
}

int round_score(double value) {
  constexpr double slack = 1e-9;  // float drift across [1,4] arithmetic
  if (value < 1.0 - slack || value > 4.0 + slack)
    throw OutOfRange("score " + format_double(value) + " outside [1,4]");
  int r = static_cast<int>(std::floor(value + 0.5));  // ties at .5 round up
  return std::clamp(r, 1, 4);
}

std::string to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::random_forest: return "random_forest";
    case ModelFamily::support_vector: return "support_vector";
    case ModelFamily::two_layer_feedforward: return "two_layer_feedforward";
  }
  return "random_forest";
}

std::string to_string(Task t) {
  return t == Task::classification ? "classification" : "regression";
}

ModelFamily family_from_string(const std::string& s) {
  if (s == "random_forest" || s == "rf") return ModelFamily::random_forest;
  if (s == "support_vector" || s == "svm") return ModelFamily::support_vector;
  if (s == "two_layer_feedforward" || s == "mlp") return ModelFamily::two_layer_feedforward;
  throw Error("unknown model family: " + s);
}

Task task_from_string(const std::string& s) {
  if (s == "classification") return Task::classification;
  if (s == "regression") return Task::regression;
  throw Error("unknown task: " + s);
}

HyperGrid default_grid(ModelFamily family) {
  switch (family) {
    case ModelFamily::random_forest:
      return {{"n_trees", {100, 300}}, {"max_depth", {0, 10}}};
    case ModelFamily::support_vector:
      return {{"rbf", {1, 0}}, {"c", {0.1, 1, 10}}};
    case ModelFamily::two_layer_feedforward:
      return {{"hidden", {32, 64}}, {"l2", {1e-4, 1e-3}}};
  }
  return {};
}

Estimator Estimator::make_forest(RandomForest f, Task t) {
  Estimator e;
  e.task_ = t;
  e.forest_ = std::make_shared<RandomForest>(std::move(f));
  return e;
}

Estimator Estimator::make_svm(SvmModel m, Task t) {
  Estimator e;
  e.task_ = t;
  e.svm_ = std::make_shared<SvmModel>(std::move(m));
  return e;
}

Estimator Estimator::make_mlp(Mlp m, Task t) {
  Estimator e;
  e.task_ = t;
  e.mlp_ = std::make_shared<Mlp>(std::move(m));
  return e;
}

double Estimator::predict_value(const std::vector<double>& row) const {
  double raw;
  if (forest_) {
    raw = forest_->predict(row);
    if (task_ == Task::classification) return raw + 1.0;  // classes stored 0-based
  } else if (svm_) {
    raw = svm_->predict(row);
    if (task_ == Task::classification) return raw + 1.0;
  } else if (mlp_) {
    if (task_ == Task::classification) return static_cast<double>(mlp_->predict_class(row)) + 1.0;
    raw = mlp_->predict_value(row);
  } else {
    throw Error("estimator: empty");
  }
  return std::clamp(raw, 1.0, 4.0);
}

json Estimator::to_json() const {
  json j;
  j["task"] = ew::to_string(task_);
  if (forest_) {
    j["kind"] = "forest";
    j["model"] = forest_->to_json();
  } else if (svm_) {
    j["kind"] = "svm";
    j["model"] = svm_->to_json();
  } else if (mlp_) {
    j["kind"] = "mlp";
    j["model"] = mlp_->to_json();
  }
  return j;
}

Estimator Estimator::from_json(const json& j) {
  Task t = task_from_string(j.at("task").get<std::string>());
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "forest") return make_forest(RandomForest::from_json(j.at("model")), t);
  if (kind == "svm") return make_svm(SvmModel::from_json(j.at("model")), t);
  if (kind == "mlp") return make_mlp(Mlp::from_json(j.at("model")), t);
  throw Error("unknown estimator kind: " + kind);
}

namespace {

std::vector<std::map<std::string, double>> enumerate_grid(const HyperGrid& grid) {
  std::vector<std::map<std::string, double>> points{{}};
  for (const auto& [name, values] : grid) {
    std::vector<std::map<std::string, double>> next;
    for (const auto& base : points)
      for (double v : values) {
        auto p = base;
        p[name] = v;
        next.push_back(std::move(p));
      }
    points = std::move(next);
  }
  return points;
}

Estimator fit_point(const ModelSpec& spec, const std::map<std::string, double>& point,
                    const Matrix& x, const std::vector<double>& y_real,
                    const std::vector<int>& y_class, std::uint64_t seed) {
  auto get = [&point](const std::string& k, double dflt) {
    auto it = point.find(k);
    return it == point.end() ? dflt : it->second;
  };
  const bool cls = spec.task == Task::classification;
  std::vector<double> targets;
  if (cls)
    for (int c : y_class) targets.push_back(static_cast<double>(c));

  switch (spec.family) {
    case ModelFamily::random_forest: {
      RandomForest::Config cfg;
      cfg.n_trees = static_cast<int>(get("n_trees", 100));
      cfg.max_depth = static_cast<int>(get("max_depth", 0));
      cfg.classification = cls;
      cfg.n_classes = 4;
      cfg.seed = seed;
      RandomForest f(cfg);
      f.fit(x, cls ? targets : y_real);
      return Estimator::make_forest(std::move(f), spec.task);
    }
    case ModelFamily::support_vector: {
      SvmModel::Config cfg;
      cfg.rbf = get("rbf", 1) != 0.0;
      cfg.c = get("c", 1.0);
      cfg.epsilon = get("epsilon", 0.1);
      cfg.classification = cls;
      SvmModel m(cfg);
      m.fit(x, cls ? targets : y_real);
      return Estimator::make_svm(std::move(m), spec.task);
    }
    case ModelFamily::two_layer_feedforward: {
      Mlp::Config cfg;
      cfg.inputs = static_cast<int>(x.cols);
      cfg.hidden = static_cast<int>(get("hidden", 32));
      cfg.outputs = cls ? 4 : 1;
      cfg.softmax_output = cls;
      cfg.l2 = get("l2", 1e-4);
      cfg.learning_rate = 0.01;
      cfg.epochs = 800;
      cfg.validation_fraction = 0.15;  // early stopping against overfit
      cfg.patience = 60;
      cfg.seed = seed;
      Mlp net(cfg);
      if (cls)
        net.fit_classes(x, y_class);
      else
        net.fit(x, y_real);
      return Estimator::make_mlp(std::move(net), spec.task);
    }
  }
  throw Error("unreachable model family");
}

/// Deterministic grouped split: groups ordered by size (desc) then first
/// appearance, dealt to the currently smallest fold.
std::vector<int> grouped_folds(const std::vector<std::string>& groups, int k) {
  std::map<std::string, std::vector<std::size_t>> members;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (!members.count(groups[i])) order.push_back(groups[i]);
    members[groups[i]].push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    return members[a].size() > members[b].size();
  });
  std::vector<std::size_t> fold_size(static_cast<std::size_t>(k), 0);
  std::vector<int> fold_of(groups.size(), 0);
  for (const auto& g : order) {
    int smallest = 0;
    for (int f = 1; f < k; ++f)
      if (fold_size[static_cast<std::size_t>(f)] < fold_size[static_cast<std::size_t>(smallest)])
        smallest = f;
    for (std::size_t i : members[g]) fold_of[i] = smallest;
    fold_size[static_cast<std::size_t>(smallest)] += members[g].size();
  }
  return fold_of;
}

}  // namespace

TrainedModel fit_model(const ModelSpec& spec, const Matrix& rows,
                       const std::vector<double>& labels,
                       const std::vector<std::string>& groups) {
  if (rows.rows < 10) throw InsufficientData("fit_model: need >= 10 training rows");
  if (rows.rows != labels.size() || rows.rows != groups.size())
    throw DimensionMismatch("fit_model: rows vs labels vs groups");
  bool all_equal = std::all_of(labels.begin(), labels.end(),
                               [&](double v) { return v == labels[0]; });
  if (all_equal) throw DegenerateLabels("fit_model: all labels identical");
  for (double v : labels)
    if (v < 1.0 || v > 4.0) throw OutOfRange("label outside [1,4]");

  std::vector<int> class_labels;  // 0-based
  for (double v : labels) class_labels.push_back(round_score(v) - 1);

  const HyperGrid grid = spec.grid.empty() ? default_grid(spec.family) : spec.grid;
  const auto points = enumerate_grid(grid);
  const bool cls = spec.task == Task::classification;

  constexpr int kInnerFolds = 3;
  const auto inner = grouped_folds(groups, kInnerFolds);

  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t best_point = 0;
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    double sum = 0.0;
    int used = 0;
    for (int f = 0; f < kInnerFolds; ++f) {
      Matrix xtr, xte;
      std::vector<double> ytr;
      std::vector<int> ctr;
      std::vector<double> yte;
      std::vector<int> cte;
      for (std::size_t i = 0; i < rows.rows; ++i) {
        if (inner[i] == f) {
          xte.push_row(rows.row(i));
          yte.push_back(labels[i]);
          cte.push_back(class_labels[i]);
        } else {
          xtr.push_row(rows.row(i));
          ytr.push_back(labels[i]);
          ctr.push_back(class_labels[i]);
        }
      }
      if (xtr.rows < 3 || xte.rows < 3) continue;
      Standardizer std_inner = Standardizer::fit(xtr);
      Matrix xtr_s = std_inner.transform(xtr);
      Matrix xte_s = std_inner.transform(xte);
      Estimator est;
      try {
        est = fit_point(spec, points[pi], xtr_s, ytr, ctr,
                        mix_seed(spec.seed, 100 + static_cast<std::uint64_t>(f)));
      } catch (const DegenerateLabels&) {
        continue;  // inner slice collapsed to one class
      }
      std::vector<double> pred;
      for (std::size_t i = 0; i < xte_s.rows; ++i)
        pred.push_back(est.predict_value(xte_s.row(i)));
      if (cls) {
        int correct = 0;
        for (std::size_t i = 0; i < pred.size(); ++i)
          if (static_cast<int>(pred[i]) == cte[i] + 1) ++correct;
        sum += static_cast<double>(correct) / static_cast<double>(pred.size());
        ++used;
      } else {
        try {
          sum += pearson(pred, yte);
          ++used;
        } catch (const ConstantInput&) {
          // undefined r: skip this fold rather than coercing to 0
        }
      }
    }
    double score = used ? sum / used : -std::numeric_limits<double>::infinity();
    if (score > best_score) {
      best_score = score;
      best_point = pi;
    }
  }

  TrainedModel out;
  out.spec = spec;
  out.spec.grid = grid;
  out.chosen = points[best_point];
  out.inner_score = best_score;
  std::vector<std::string> warnings;
  out.standardizer = Standardizer::fit(rows, &warnings);
  Matrix xs = out.standardizer.transform(rows);
  out.estimator = fit_point(spec, points[best_point], xs, labels, class_labels,
                            mix_seed(spec.seed, 0));

  // In-sample training performance, used by the weighted ensemble.
  std::vector<double> train_pred;
  for (std::size_t i = 0; i < xs.rows; ++i)
    train_pred.push_back(out.estimator.predict_value(xs.row(i)));
  try {
    out.train_pearson = pearson(train_pred, labels);
  } catch (const ConstantInput&) {
    out.train_pearson = std::nullopt;
  }
  if (cls) {
    int correct = 0;
    for (std::size_t i = 0; i < train_pred.size(); ++i)
      if (static_cast<int>(train_pred[i]) == class_labels[i] + 1) ++correct;
    out.train_accuracy = static_cast<double>(correct) / static_cast<double>(train_pred.size());
  }
  return out;
}

ScoreEstimate predict_score(const TrainedModel& model, const std::vector<double>& raw_row,
                            const SegmentId& segment) {
  if (raw_row.size() != model.standardizer.mean().size())
    throw DimensionMismatch("predict_score: row width");
  ScoreEstimate e;
  e.segment = segment;
  e.value = model.estimator.predict_value(model.standardizer.transform(raw_row));
  e.rounded = round_score(e.value);
  e.source = Source::trained_model;
  return e;
}

std::vector<double> ensemble_weights(const std::vector<double>& train_r, double eps) {
  if (train_r.empty()) throw MissingTrainPerformance("no train r values");
  std::vector<double> w;
  double sum = 0.0;
  for (double r : train_r) {
    double v = std::max(r, eps);
    w.push_back(v);
    sum += v;
  }
  for (double& v : w) v /= sum;
  return w;
}

ScoreEstimate combine(const std::vector<ScoreEstimate>& estimates, const EnsembleSpec& spec) {
  if (estimates.size() < 2) throw Error("combine: need >= 2 estimates");
  for (const auto& e : estimates)
    if (e.segment != estimates[0].segment)
      throw Error("combine: estimates refer to different segments");

  std::vector<double> w;
  if (spec.mode == EnsembleSpec::Mode::unweighted) {
    w.assign(estimates.size(), 1.0 / static_cast<double>(estimates.size()));
  } else {
    if (spec.weights.size() != estimates.size())
      throw MissingTrainPerformance("weighted combine: missing per-source weights");
    double sum = 0.0;
    for (double v : spec.weights) {
      if (v < 0.0) throw OutOfRange("ensemble weight < 0");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw OutOfRange("ensemble weights must sum to 1");
    w = spec.weights;
  }
  ScoreEstimate out;
  out.segment = estimates[0].segment;
  out.source = Source::ensemble;
  double v = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) v += w[i] * estimates[i].value;
  out.value = v;
  out.rounded = round_score(v);
  return out;
}

json TrainedModel::to_json() const {
  return json{{"family", ew::to_string(spec.family)},
              {"task", ew::to_string(spec.task)},
              {"seed", spec.seed},
              {"chosen", chosen},
              {"inner_score", inner_score},
              {"train_pearson", train_pearson ? json(*train_pearson) : json(nullptr)},
              {"train_accuracy", train_accuracy},
              {"fold", fold},
              {"standardizer", standardizer.to_json()},
              {"estimator", estimator.to_json()}};
}

TrainedModel TrainedModel::from_json(const json& j) {
  TrainedModel m;
  m.spec.family = family_from_string(j.at("family").get<std::string>());
  m.spec.task = task_from_string(j.at("task").get<std::string>());
  m.spec.seed = j.at("seed").get<std::uint64_t>();
  m.chosen = j.at("chosen").get<std::map<std::string, double>>();
  m.inner_score = j.at("inner_score").get<double>();
  if (!j.at("train_pearson").is_null()) m.train_pearson = j.at("train_pearson").get<double>();
  m.train_accuracy = j.at("train_accuracy").get<double>();
  m.fold = j.at("fold").get<int>();
  m.standardizer = Standardizer::from_json(j.at("standardizer"));
  m.estimator = Estimator::from_json(j.at("estimator"));
  return m;
}

}  // namespace ew
