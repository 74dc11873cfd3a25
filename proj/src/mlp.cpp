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

#include "ew/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "ew/errors.hpp"

using nlohmann::json;

namespace ew {

std::vector<double> softmax(std::vector<double> logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return logits;
}

Mlp::Mlp(const Config& cfg) : cfg_(cfg) {
  if (cfg.inputs <= 0 || cfg.hidden <= 0 || cfg.outputs <= 0)
    throw DimensionMismatch("mlp: non-positive layer size");
  std::mt19937_64 rng(cfg.seed);
  auto xavier = [&rng](std::size_t fan_in, std::size_t fan_out, std::vector<double>& w,
                       std::size_t n) {
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    w.resize(n);
    for (double& v : w) v = dist(rng);
  };
  auto in = static_cast<std::size_t>(cfg.inputs);
  auto hid = static_cast<std::size_t>(cfg.hidden);
  auto out = static_cast<std::size_t>(cfg.outputs);
  xavier(in, hid, w1_, hid * in);
  b1_.assign(hid, 0.0);
  xavier(hid, out, w2_, out * hid);
  b2_.assign(out, 0.0);
}

std::vector<double> Mlp::forward(const double* row) const {
  auto in = static_cast<std::size_t>(cfg_.inputs);
  auto hid = static_cast<std::size_t>(cfg_.hidden);
  auto out = static_cast<std::size_t>(cfg_.outputs);
  std::vector<double> h(hid), o(out);
  for (std::size_t j = 0; j < hid; ++j) {
    double s = b1_[j];
    const double* wrow = w1_.data() + j * in;
    for (std::size_t k = 0; k < in; ++k) s += wrow[k] * row[k];
    h[j] = std::tanh(s);
  }
  for (std::size_t j = 0; j < out; ++j) {
    double s = b2_[j];
    const double* wrow = w2_.data() + j * hid;
    for (std::size_t k = 0; k < hid; ++k) s += wrow[k] * h[k];
    o[j] = s;
  }
  return o;
}

double Mlp::predict_value(const std::vector<double>& row) const {
  if (static_cast<int>(row.size()) != cfg_.inputs)
    throw DimensionMismatch("mlp: row width " + std::to_string(row.size()));
  return forward(row.data())[0];
}

std::vector<double> Mlp::predict_proba(const std::vector<double>& row) const {
  if (static_cast<int>(row.size()) != cfg_.inputs)
    throw DimensionMismatch("mlp: row width " + std::to_string(row.size()));
  return softmax(forward(row.data()));
}

int Mlp::predict_class(const std::vector<double>& row) const {
  auto p = predict_proba(row);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

double Mlp::loss_on(const Matrix& x, const Matrix& y,
                    const std::vector<std::size_t>& rows) const {
  double loss = 0.0;
  auto out = static_cast<std::size_t>(cfg_.outputs);
  for (std::size_t r : rows) {
    auto o = forward(x[r]);
    if (cfg_.softmax_output) {
      auto p = softmax(o);
      for (std::size_t j = 0; j < out; ++j)
        if (y[r][j] > 0.5) loss += -std::log(std::max(p[j], 1e-12));
    } else {
      for (std::size_t j = 0; j < out; ++j) {
        double d = o[j] - y[r][j];
        loss += 0.5 * d * d;
      }
    }
  }
  return rows.empty() ? 0.0 : loss / static_cast<double>(rows.size());
}

void Mlp::backward_batch(const Matrix& x, const Matrix& y,
                         const std::vector<std::size_t>& rows,
                         std::vector<double>& grads) const {
  auto in = static_cast<std::size_t>(cfg_.inputs);
  auto hid = static_cast<std::size_t>(cfg_.hidden);
  auto out = static_cast<std::size_t>(cfg_.outputs);
  std::fill(grads.begin(), grads.end(), 0.0);
  double* gw1 = grads.data();
  double* gb1 = gw1 + hid * in;
  double* gw2 = gb1 + hid;
  double* gb2 = gw2 + out * hid;

  std::vector<double> h(hid), o(out), delta_out(out), delta_h(hid);
  for (std::size_t r : rows) {
    const double* row = x[r];
    for (std::size_t j = 0; j < hid; ++j) {
      double s = b1_[j];
      const double* wrow = w1_.data() + j * in;
      for (std::size_t k = 0; k < in; ++k) s += wrow[k] * row[k];
      h[j] = std::tanh(s);
    }
    for (std::size_t j = 0; j < out; ++j) {
      double s = b2_[j];
      const double* wrow = w2_.data() + j * hid;
      for (std::size_t k = 0; k < hid; ++k) s += wrow[k] * h[k];
      o[j] = s;
    }
    if (cfg_.softmax_output) {
      auto p = softmax(o);
      for (std::size_t j = 0; j < out; ++j) delta_out[j] = p[j] - y[r][j];
    } else {
      for (std::size_t j = 0; j < out; ++j) delta_out[j] = o[j] - y[r][j];
    }
    for (std::size_t j = 0; j < hid; ++j) {
      double s = 0.0;
      for (std::size_t q = 0; q < out; ++q) s += w2_[q * hid + j] * delta_out[q];
      delta_h[j] = s * (1.0 - h[j] * h[j]);
    }
    for (std::size_t q = 0; q < out; ++q) {
      gb2[q] += delta_out[q];
      double* gw = gw2 + q * hid;
      for (std::size_t j = 0; j < hid; ++j) gw[j] += delta_out[q] * h[j];
    }
    for (std::size_t j = 0; j < hid; ++j) {
      gb1[j] += delta_h[j];
      double* gw = gw1 + j * in;
      for (std::size_t k = 0; k < in; ++k) gw[k] += delta_h[j] * row[k];
    }
  }
  const double inv_n = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
  for (double& g : grads) g *= inv_n;
}

double Mlp::run_training(const Matrix& x, const Matrix& y) {
  auto in = static_cast<std::size_t>(cfg_.inputs);
  auto hid = static_cast<std::size_t>(cfg_.hidden);
  auto out = static_cast<std::size_t>(cfg_.outputs);

  std::vector<std::size_t> train_rows(x.rows), val_rows;
  std::iota(train_rows.begin(), train_rows.end(), std::size_t{0});
  if (cfg_.validation_fraction > 0.0 && x.rows >= 10) {
    std::mt19937_64 rng(mix_seed(cfg_.seed, 0x7a11));
    std::shuffle(train_rows.begin(), train_rows.end(), rng);
    auto n_val = static_cast<std::size_t>(
        std::max(1.0, std::floor(cfg_.validation_fraction * static_cast<double>(x.rows))));
    val_rows.assign(train_rows.end() - static_cast<long>(n_val), train_rows.end());
    train_rows.resize(train_rows.size() - n_val);
  }

  const std::size_t n_params = hid * in + hid + out * hid + out;
  std::vector<double> grads(n_params, 0.0), m(n_params, 0.0), v(n_params, 0.0);
  std::vector<double> best;
  double best_val = std::numeric_limits<double>::infinity();
  int since_best = 0;

  auto apply = [&](int step) {
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double bc1 = 1.0 - std::pow(beta1, step);
    double bc2 = 1.0 - std::pow(beta2, step);
    std::size_t idx = 0;
    auto adam = [&](std::vector<double>& w, bool decay) {
      for (double& wi : w) {
        double g = grads[idx] + (decay ? cfg_.l2 * wi : 0.0);
        m[idx] = beta1 * m[idx] + (1 - beta1) * g;
        v[idx] = beta2 * v[idx] + (1 - beta2) * g * g;
        wi -= cfg_.learning_rate * (m[idx] / bc1) / (std::sqrt(v[idx] / bc2) + eps);
        ++idx;
      }
    };
    adam(w1_, true);
    adam(b1_, false);
    adam(w2_, true);
    adam(b2_, false);
  };

  for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
    backward_batch(x, y, train_rows, grads);
    apply(epoch);
    if (!val_rows.empty()) {
      double val = loss_on(x, y, val_rows);
      if (val < best_val - 1e-9) {
        best_val = val;
        since_best = 0;
        best.clear();
        best.insert(best.end(), w1_.begin(), w1_.end());
        best.insert(best.end(), b1_.begin(), b1_.end());
        best.insert(best.end(), w2_.begin(), w2_.end());
        best.insert(best.end(), b2_.begin(), b2_.end());
      } else if (++since_best >= cfg_.patience) {
        break;
      }
    }
  }
  if (!best.empty()) {
    auto it = best.begin();
    std::copy(it, it + static_cast<long>(w1_.size()), w1_.begin());
    it += static_cast<long>(w1_.size());
    std::copy(it, it + static_cast<long>(b1_.size()), b1_.begin());
    it += static_cast<long>(b1_.size());
    std::copy(it, it + static_cast<long>(w2_.size()), w2_.begin());
    it += static_cast<long>(w2_.size());
    std::copy(it, it + static_cast<long>(b2_.size()), b2_.begin());
  }
  std::vector<std::size_t> all(x.rows);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return loss_on(x, y, all);
}

double Mlp::fit(const Matrix& x, const std::vector<double>& targets) {
  if (x.rows != targets.size()) throw DimensionMismatch("mlp fit: rows vs targets");
  if (static_cast<int>(x.cols) != cfg_.inputs) throw DimensionMismatch("mlp fit: input width");
  if (cfg_.softmax_output) throw Error("fit: softmax network expects fit_classes");
  Matrix y(x.rows, 1);
  for (std::size_t r = 0; r < x.rows; ++r) y[r][0] = targets[r];
  return run_training(x, y);
}

double Mlp::fit_classes(const Matrix& x, const std::vector<int>& labels) {
  if (x.rows != labels.size()) throw DimensionMismatch("mlp fit: rows vs labels");
  if (!cfg_.softmax_output) throw Error("fit_classes: network is not softmax");
  Matrix y(x.rows, static_cast<std::size_t>(cfg_.outputs));
  for (std::size_t r = 0; r < x.rows; ++r) {
    int c = labels[r];
    if (c < 0 || c >= cfg_.outputs) throw OutOfRange("class label " + std::to_string(c));
    y[r][static_cast<std::size_t>(c)] = 1.0;
  }
  return run_training(x, y);
}

json Mlp::to_json() const {
  return json{{"inputs", cfg_.inputs},
              {"hidden", cfg_.hidden},
              {"outputs", cfg_.outputs},
              {"softmax", cfg_.softmax_output},
              {"seed", cfg_.seed},
              {"w1", w1_},
              {"b1", b1_},
              {"w2", w2_},
              {"b2", b2_}};
}

Mlp Mlp::from_json(const json& j) {
  Config cfg;
  cfg.inputs = j.at("inputs").get<int>();
  cfg.hidden = j.at("hidden").get<int>();
  cfg.outputs = j.at("outputs").get<int>();
  cfg.softmax_output = j.at("softmax").get<bool>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  Mlp net(cfg);
  net.w1_ = j.at("w1").get<std::vector<double>>();
  net.b1_ = j.at("b1").get<std::vector<double>>();
  net.w2_ = j.at("w2").get<std::vector<double>>();
  net.b2_ = j.at("b2").get<std::vector<double>>();
  return net;
}

bool Mlp::weights_equal(const Mlp& other) const {
  return w1_ == other.w1_ && b1_ == other.b1_ && w2_ == other.w2_ && b2_ == other.b2_;
}

}  // namespace ew
