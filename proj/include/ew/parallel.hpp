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

#include <cstddef>
#include <functional>
#include <vector>

#include "ew/util.hpp"

namespace ew::par {

/// Worker count for the OpenMP kernels. 1 selects the serial reference path.
/// 0 (the default) means "use all hardware threads".
void set_threads(int n);
int threads();        // resolved count, >= 1
int hardware_threads();

/// Parallel loop over [0, n). The body must only write state owned by
/// iteration i, so results are identical for any thread count; the serial
/// reference path is the same loop without OpenMP.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

// ----- kernels with serial reference implementations -----
//
// Each *_serial function is the reference; the unsuffixed entry dispatches to
// OpenMP when more than one thread is configured. Tests compare the two paths
// and tools/bench times them.

/// Column-wise mean of the rows selected by mask (mask empty = all rows).
/// Sums each column in ascending value order, so the result is invariant
/// under row permutation bit-for-bit.
std::vector<double> column_means_serial(const Matrix& m, const std::vector<char>& mask);
std::vector<double> column_means(const Matrix& m, const std::vector<char>& mask);

/// Gram matrix for the bias-augmented kernel used by the support-vector
/// models: K(a,b) + 1 with K either the dot product or the RBF kernel.
struct KernelParams {
  bool rbf = true;
  double gamma = 0.0;
};
Matrix kernel_matrix_serial(const Matrix& x, const KernelParams& p);
Matrix kernel_matrix(const Matrix& x, const KernelParams& p);

/// Cross-kernel rows: out[i][j] = K(a_i, b_j) + 1.
Matrix kernel_cross_serial(const Matrix& a, const Matrix& b, const KernelParams& p);
Matrix kernel_cross(const Matrix& a, const Matrix& b, const KernelParams& p);

}  // namespace ew::par
