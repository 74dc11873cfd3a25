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

#include "ew/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ew/errors.hpp"

namespace ew::par {

namespace {
std::atomic<int> g_threads{0};
}

void set_threads(int n) { g_threads.store(n < 0 ? 0 : n); }

int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int threads() {
  int n = g_threads.load();
  if (n == 0) n = hardware_threads();
  return std::max(1, n);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const int t = threads();
  if (t <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
// Interleaved static chunks: balanced even for triangular workloads, and
// the iteration-to-thread mapping stays fixed for a given thread count.
#pragma omp parallel for schedule(static, 1) num_threads(t)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    body(static_cast<std::size_t>(i));
#else
  for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

std::vector<double> column_means_serial(const Matrix& m, const std::vector<char>& mask) {
  if (!mask.empty() && mask.size() != m.rows)
    throw DimensionMismatch("column_means: mask size");
  std::size_t count = 0;
  std::vector<double> col;
  std::vector<double> out(m.cols, 0.0);
  col.reserve(m.rows);
  for (std::size_t c = 0; c < m.cols; ++c) {
    col.clear();
    for (std::size_t r = 0; r < m.rows; ++r)
      if (mask.empty() || mask[r]) col.push_back(m[r][c]);
    count = col.size();
    // Value-ordered summation: permutation of the rows cannot change the sum.
    std::sort(col.begin(), col.end());
    if (count && col.front() == col.back()) {
      out[c] = col.front();  // constant column: mean is exact
      continue;
    }
    double s = 0.0;
    for (double v : col) s += v;
    out[c] = count ? s / static_cast<double>(count) : 0.0;
  }
  if (count == 0) out.assign(m.cols, 0.0);
  return out;
}

std::vector<double> column_means(const Matrix& m, const std::vector<char>& mask) {
  if (threads() <= 1 || m.cols < 2) return column_means_serial(m, mask);
  if (!mask.empty() && mask.size() != m.rows)
    throw DimensionMismatch("column_means: mask size");
  std::vector<double> out(m.cols, 0.0);
  // Columns are independent, so the per-column serial computation (including
  // its value-ordered sum) is reproduced exactly.
  parallel_for(m.cols, [&](std::size_t c) {
    std::vector<double> col;
    col.reserve(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r)
      if (mask.empty() || mask[r]) col.push_back(m[r][c]);
    std::sort(col.begin(), col.end());
    if (!col.empty() && col.front() == col.back()) {
      out[c] = col.front();
      return;
    }
    double s = 0.0;
    for (double v : col) s += v;
    out[c] = col.empty() ? 0.0 : s / static_cast<double>(col.size());
  });
  return out;
}

namespace {

inline double kernel_value(const double* a, const double* b, std::size_t d,
                           const KernelParams& p) {
  if (p.rbf) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      double diff = a[k] - b[k];
      s += diff * diff;
    }
    return std::exp(-p.gamma * s) + 1.0;
  }
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) s += a[k] * b[k];
  return s + 1.0;
}

}  // namespace

Matrix kernel_matrix_serial(const Matrix& x, const KernelParams& p) {
  Matrix k(x.rows, x.rows);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double v = kernel_value(x[i], x[j], x.cols, p);
      k[i][j] = v;
      k[j][i] = v;
    }
  return k;
}

Matrix kernel_matrix(const Matrix& x, const KernelParams& p) {
  if (threads() <= 1) return kernel_matrix_serial(x, p);
  Matrix k(x.rows, x.rows);
  parallel_for(x.rows, [&](std::size_t i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double v = kernel_value(x[i], x[j], x.cols, p);
      k[i][j] = v;
      k[j][i] = v;
    }
  });
  return k;
}

Matrix kernel_cross_serial(const Matrix& a, const Matrix& b, const KernelParams& p) {
  if (a.cols != b.cols) throw DimensionMismatch("kernel_cross: column mismatch");
  Matrix k(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j)
      k[i][j] = kernel_value(a[i], b[j], a.cols, p);
  return k;
}

Matrix kernel_cross(const Matrix& a, const Matrix& b, const KernelParams& p) {
  if (threads() <= 1) return kernel_cross_serial(a, b, p);
  if (a.cols != b.cols) throw DimensionMismatch("kernel_cross: column mismatch");
  Matrix k(a.rows, b.rows);
  parallel_for(a.rows, [&](std::size_t i) {
    for (std::size_t j = 0; j < b.rows; ++j)
      k[i][j] = kernel_value(a[i], b[j], a.cols, p);
  });
  return k;
}

}  // namespace ew::par
