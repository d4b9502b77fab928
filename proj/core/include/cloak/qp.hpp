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

#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace cloak {

// Strictly convex inequality-constrained QP
//   min 1/2 U^T H U + f^T U + c0   s.t.  A_ineq U <= b_ineq.
struct CondensedQP {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  double c0 = 0.0;
  Eigen::MatrixXd A_ineq;
  Eigen::VectorXd b_ineq;
  Eigen::VectorXd x0;  // lifted initial state the QP was built for

  double objective(const Eigen::VectorXd& U) const {
    return 0.5 * U.dot(H * U) + f.dot(U) + c0;
  }
};

enum class SolveStatus { kSolved, kMaxIterations, kInfeasible };

std::string_view to_string(SolveStatus status);
SolveStatus solve_status_from_string(std::string_view name);

struct SolverConfig {
  double abs_tol = 1e-8;
  double rel_tol = 1e-8;
  int max_iters = 20000;
  // ADMM parameters.
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;
  bool polish = true;
  int scaling_iters = 10;
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  double dual_sign = 0.0;  // largest negative multiplier magnitude
};

struct QpResult {
  Eigen::VectorXd U;
  Eigen::VectorXd multipliers;
  SolveStatus status = SolveStatus::kMaxIterations;
  int iterations = 0;
  bool polished = false;
  double objective = 0.0;
  KktResiduals kkt;
};

KktResiduals kkt_residuals(const CondensedQP& qp, const Eigen::VectorXd& U,
                           const Eigen::VectorXd& multipliers);

// ADMM operator splitting (Ruiz-scaled) with active-set polishing. On
// kMaxIterations the best iterate is returned. On success the KKT residuals
// are within abs_tol + rel_tol * scale.
QpResult solve(const CondensedQP& qp, const SolverConfig& cfg = {});

}  // namespace cloak
