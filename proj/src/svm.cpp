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

#include "ew/svm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "ew/errors.hpp"

using nlohmann::json;

namespace ew {

par::KernelParams SvmModel::kernel_params() const {
  par::KernelParams p;
  p.rbf = cfg_.rbf;
  p.gamma = cfg_.gamma > 0.0 ? cfg_.gamma
                             : 1.0 / static_cast<double>(std::max<std::size_t>(1, support_.cols));
  return p;
}

namespace {

/// Binary C-SVC dual coordinate ascent over the augmented kernel.
/// y in {-1,+1}; returns alpha (box [0, C]).
std::vector<double> solve_svc(const Matrix& k, const std::vector<double>& y, double c,
                              int max_sweeps, double tol) {
  const std::size_t n = y.size();
  std::vector<double> alpha(n, 0.0), f(n, 0.0);  // f_i = sum_j alpha_j y_j K_ij
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double grad = 1.0 - y[i] * f[i];  // d/d alpha_i of the dual
      double delta = grad / k[i][i];
      double next = std::clamp(alpha[i] + delta, 0.0, c);
      delta = next - alpha[i];
      if (delta == 0.0) continue;
      alpha[i] = next;
      for (std::size_t j = 0; j < n; ++j) f[j] += delta * y[i] * k[i][j];
      max_delta = std::max(max_delta, std::abs(delta));
    }
    if (max_delta < tol * c) break;
  }
  return alpha;
}

/// Epsilon-SVR dual coordinate ascent; beta in [-C, C].
std::vector<double> solve_svr(const Matrix& k, const std::vector<double>& t, double c,
                              double epsilon, int max_sweeps, double tol) {
  const std::size_t n = t.size();
  std::vector<double> beta(n, 0.0), f(n, 0.0);  // f_i = sum_j beta_j K_ij
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      // Optimal beta_i with others fixed: soft-threshold the residual.
      double residual = t[i] - (f[i] - beta[i] * k[i][i]);
      double unconstrained;
      if (residual > epsilon)
        unconstrained = (residual - epsilon) / k[i][i];
      else if (residual < -epsilon)
        unconstrained = (residual + epsilon) / k[i][i];
      else
        unconstrained = 0.0;
      double next = std::clamp(unconstrained, -c, c);
      double delta = next - beta[i];
      if (delta == 0.0) continue;
      beta[i] = next;
      for (std::size_t j = 0; j < n; ++j) f[j] += delta * k[i][j];
      max_delta = std::max(max_delta, std::abs(delta));
    }
    if (max_delta < tol * c) break;
  }
  return beta;
}

}  // namespace

void SvmModel::fit(const Matrix& x, const std::vector<double>& y) {
  if (x.rows != y.size()) throw DimensionMismatch("svm fit: rows vs targets");
  if (x.rows == 0) throw InsufficientData("svm fit: empty matrix");
  support_ = x;
  Matrix k = par::kernel_matrix(x, kernel_params());

  if (!cfg_.classification) {
    beta_ = solve_svr(k, y, cfg_.c, cfg_.epsilon, cfg_.max_sweeps, cfg_.tol);
    return;
  }

  std::set<int> labels;
  for (double v : y) labels.insert(static_cast<int>(v));
  classes_.assign(labels.begin(), labels.end());
  if (classes_.size() < 2) throw DegenerateLabels("svm: single class");

  ovo_coef_.clear();
  for (std::size_t a = 0; a < classes_.size(); ++a) {
    for (std::size_t b = a + 1; b < classes_.size(); ++b) {
      // Rows belonging to the pair, and the sub-kernel over them.
      std::vector<std::size_t> rows;
      std::vector<double> sign;
      for (std::size_t i = 0; i < y.size(); ++i) {
        int c = static_cast<int>(y[i]);
        if (c == classes_[a]) {
          rows.push_back(i);
          sign.push_back(+1.0);
        } else if (c == classes_[b]) {
          rows.push_back(i);
          sign.push_back(-1.0);
        }
      }
      Matrix sub(rows.size(), rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.size(); ++j) sub[i][j] = k[rows[i]][rows[j]];
      auto alpha = solve_svc(sub, sign, cfg_.c, cfg_.max_sweeps, cfg_.tol);
      std::vector<double> coef(y.size(), 0.0);
      for (std::size_t i = 0; i < rows.size(); ++i) coef[rows[i]] = alpha[i] * sign[i];
      ovo_coef_.push_back(std::move(coef));
    }
  }
}

double SvmModel::predict(const std::vector<double>& row) const {
  if (support_.rows == 0) throw Error("svm: not fitted");
  if (row.size() != support_.cols) throw DimensionMismatch("svm predict: row width");
  Matrix q(1, row.size());
  std::copy(row.begin(), row.end(), q[0]);
  Matrix kx = par::kernel_cross_serial(support_, q, kernel_params());  // n x 1

  if (!cfg_.classification) {
    double s = 0.0;
    for (std::size_t i = 0; i < support_.rows; ++i) s += beta_[i] * kx[i][0];
    return s;
  }
  std::vector<int> votes(classes_.size(), 0);
  std::size_t m = 0;
  for (std::size_t a = 0; a < classes_.size(); ++a) {
    for (std::size_t b = a + 1; b < classes_.size(); ++b, ++m) {
      double s = 0.0;
      for (std::size_t i = 0; i < support_.rows; ++i) s += ovo_coef_[m][i] * kx[i][0];
      ++votes[s >= 0.0 ? a : b];
    }
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c)
    if (votes[c] > votes[best]) best = c;  // ties to the lower class
  return static_cast<double>(classes_[best]);
}

json SvmModel::to_json() const {
  return json{{"rbf", cfg_.rbf},
              {"gamma", cfg_.gamma},
              {"c", cfg_.c},
              {"epsilon", cfg_.epsilon},
              {"classification", cfg_.classification},
              {"max_sweeps", cfg_.max_sweeps},
              {"tol", cfg_.tol},
              {"support_rows", support_.rows},
              {"support_cols", support_.cols},
              {"support", support_.data},
              {"beta", beta_},
              {"classes", classes_},
              {"ovo", ovo_coef_}};
}

SvmModel SvmModel::from_json(const json& j) {
  Config cfg;
  cfg.rbf = j.at("rbf").get<bool>();
  cfg.gamma = j.at("gamma").get<double>();
  cfg.c = j.at("c").get<double>();
  cfg.epsilon = j.at("epsilon").get<double>();
  cfg.classification = j.at("classification").get<bool>();
  cfg.max_sweeps = j.at("max_sweeps").get<int>();
  cfg.tol = j.at("tol").get<double>();
  SvmModel m(cfg);
  m.support_.rows = j.at("support_rows").get<std::size_t>();
  m.support_.cols = j.at("support_cols").get<std::size_t>();
  m.support_.data = j.at("support").get<std::vector<double>>();
  m.beta_ = j.at("beta").get<std::vector<double>>();
  m.classes_ = j.at("classes").get<std::vector<int>>();
  m.ovo_coef_ = j.at("ovo").get<std::vector<std::vector<double>>>();
  return m;
}

}  // namespace ew
