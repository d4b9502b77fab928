// Copyright 2026 The cloak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>

namespace cloak::linalg {

// Relative threshold for numerical rank decisions.
inline constexpr double kRankEpsilon = 1e-10;

// Singular values at or below max(rows, cols) * eps * max(sigma_max, scale)
// count as zero. `scale` is an absolute floor used when the matrix itself may
// be numerically zero (pass the norm of the data the matrix was built from).
double rank_tolerance(Eigen::Index rows, Eigen::Index cols, double sigma_max,
                      double scale = 0.0, double eps = kRankEpsilon);

int numerical_rank(const Eigen::MatrixXd& m, double scale = 0.0,
                   double eps = kRankEpsilon);

/// Orthonormal basis (as columns) of the right null space of `m`.
Eigen::MatrixXd null_space(const Eigen::MatrixXd& m, double scale = 0.0,
                           double eps = kRankEpsilon);

/// Moore-Penrose pseudoinverse using the same rank rule as numerical_rank.
Eigen::MatrixXd pinv(const Eigen::MatrixXd& m, double eps = kRankEpsilon);

/// 2-norm condition number; +inf for singular input.
double condition_number(const Eigen::MatrixXd& m);

double spectral_norm(const Eigen::MatrixXd& m);

// Inverse of a lifted affine matrix [[W, v], [0, 1]] returned with exact
// lifted structure. Throws Error("singular") if W is singular.
Eigen::MatrixXd inverse_lifted(const Eigen::MatrixXd& lifted);

// True iff the last row of `m` is exactly (0, ..., 0, 1).
bool has_lifted_last_row(const Eigen::MatrixXd& m);

/// Largest absolute entry of a - b; +inf on shape mismatch.
double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace cloak::linalg
