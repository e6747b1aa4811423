// Copyright 2026 The BoxMix Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <vector>

namespace boxmix::oracle {

using Matrix = std::vector<std::vector<double>>;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, unsorted.
std::vector<double> jacobi_eigenvalues(Matrix a, double tol = 1e-15, int max_sweeps = 100);

/// Sample covariance (divided by n - 1) of the rows.
Matrix covariance(const std::vector<std::vector<double>>& rows);

/// Largest covariance eigenvalue over the trace, computed densely in the
/// row dimension; 1 for zero total variance.
double pca_ratio_direct(const std::vector<std::vector<double>>& rows);

}  // namespace boxmix::oracle
