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
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ew/util.hpp"

namespace ew {

/// Two-layer feed-forward network: input -> tanh hidden -> linear output.
/// Trained full-batch with Adam; everything is seeded and single-threaded so
/// retraining with the same seed reproduces the weights bit for bit.
class Mlp {
 public:
  struct Config {
    int inputs = 0;
    int hidden = 32;
    int outputs = 1;
    bool softmax_output = false;  // true: cross-entropy over classes
    double learning_rate = 0.02;
    double l2 = 1e-4;
    int epochs = 400;
    // Early stopping carves a validation slice off the training rows and
    // restores the best weights seen; 0 disables it.
    double validation_fraction = 0.0;
    int patience = 25;
    std::uint64_t seed = 1;
  };

  Mlp() = default;
  explicit Mlp(const Config& cfg);

  /// Regression targets (outputs == 1) or one-hot class index targets
  /// (softmax_output). Returns the final training loss.
  double fit(const Matrix& x, const std::vector<double>& targets);
  double fit_classes(const Matrix& x, const std::vector<int>& labels);

  std::vector<double> forward(const double* row) const;
  double predict_value(const std::vector<double>& row) const;      // first output
  std::vector<double> predict_proba(const std::vector<double>& row) const;
  int predict_class(const std::vector<double>& row) const;

  const Config& config() const { return cfg_; }

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

  bool weights_equal(const Mlp& other) const;

 private:
  Config cfg_;
  std::vector<double> w1_, b1_, w2_, b2_;  // w1: hidden x in, w2: out x hidden

  double run_training(const Matrix& x, const Matrix& y);
  void backward_batch(const Matrix& x, const Matrix& y,
                      const std::vector<std::size_t>& rows, std::vector<double>& grads) const;
  double loss_on(const Matrix& x, const Matrix& y, const std::vector<std::size_t>& rows) const;
};

std::vector<double> softmax(std::vector<double> logits);

}  // namespace ew
