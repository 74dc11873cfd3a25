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

#include "ew/parallel.hpp"
#include "ew/util.hpp"

namespace ew {

/// Kernel machines on the bias-augmented kernel K(a,b) + 1 (the bias is
/// folded into the kernel, so the duals are box-constrained only and a plain
/// coordinate-ascent solver is exact enough for these problem sizes).
/// Classification is one-vs-one voting over C-SVC pairs; regression is
/// epsilon-insensitive SVR.
class SvmModel {
 public:
  struct Config {
    bool rbf = true;       // false = linear kernel
    double gamma = 0.0;    // 0 = 1/p
    double c = 1.0;
    double epsilon = 0.1;  // SVR tube half-width
    bool classification = false;
    int max_sweeps = 400;
    double tol = 1e-6;
  };

  SvmModel() = default;
  explicit SvmModel(const Config& cfg) : cfg_(cfg) {}

  /// Regression targets, or 0-based class indices for classification.
  void fit(const Matrix& x, const std::vector<double>& y);
  double predict(const std::vector<double>& row) const;

  const Config& config() const { return cfg_; }

  nlohmann::json to_json() const;
  static SvmModel from_json(const nlohmann::json& j);

 private:
  Config cfg_;
  Matrix support_;                  // training rows (all rows kept; n is small)
  std::vector<double> beta_;        // SVR dual coefficients
  std::vector<int> classes_;        // sorted distinct labels
  // one-vs-one machines, pair order (i<j): dual coef per training row, with
  // rows outside the pair holding 0.
  std::vector<std::vector<double>> ovo_coef_;

  par::KernelParams kernel_params() const;
};

}  // namespace ew
