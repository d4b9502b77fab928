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

#include <vector>

#include <Eigen/Dense>

#include "cloak/group.hpp"

namespace cloak {

// Quadratic tracking cost  sum_i deta_i^T M deta_i,  deta_i = (x_i - x*_i, u_i - u*_i)
// with lifted states, plus stage constraints  D eta_i <= 0,  eta_i = (x_i, u_i).
struct ControlObjective {
  Eigen::MatrixXd M;                 // (n+m+1) x (n+m+1), SPD
  Eigen::MatrixXd D;                 // h x (n+m+1); h may be 0
  std::vector<Eigen::VectorXd> x_ref;  // N+1 lifted states
  std::vector<Eigen::VectorXd> u_ref;  // N+1 inputs
  int horizon = 0;                   // N

  int state_dim() const;   // n (bare)
  int input_dim() const;   // m
  int constraint_count() const { return static_cast<int>(D.rows()); }
};

// Throws Error("objective") when M is not symmetric positive definite, D is
// rank deficient, reference lengths differ from N+1, or a reference state does
// not end in exactly 1. Throws Error("dims") when n, m do not match.
void validate_objective(const ControlObjective& obj, int n, int m);

double eval_cost(const ControlObjective& obj, const std::vector<Eigen::VectorXd>& x,
                 const std::vector<Eigen::VectorXd>& u);

/// L = [[P, 0], [F, G]] and its structured inverse.
Eigen::MatrixXd eta_map(const Isomorphism& psi);
Eigen::MatrixXd eta_map_inverse(const Isomorphism& psi);

// M~ = L^-T M L^-1 (re-symmetrized), D~ = D L^-1, x~*_i = P x*_i,
// u~*_i = F x*_i + G u*_i.
ControlObjective transform_objective(const Isomorphism& psi, const ControlObjective& obj);

// Rows encoding  lower_i - x_i <= 0  and  x_i - upper_i <= 0  for every bare
// state coordinate, padded with zeros over the m input columns.
// Throws Error("bounds") when lower_i >= upper_i.
Eigen::MatrixXd make_box_state_constraints(const Eigen::VectorXd& lower,
                                           const Eigen::VectorXd& upper, int m);

// Same for inputs, padded with zeros over the n+1 state columns.
Eigen::MatrixXd make_box_input_constraints(const Eigen::VectorXd& lower,
                                           const Eigen::VectorXd& upper, int n);

// Constant references over the horizon.
ControlObjective make_tracking_objective(const Eigen::MatrixXd& M, const Eigen::MatrixXd& D,
                                         const Eigen::VectorXd& x_ref_bare,
                                         const Eigen::VectorXd& u_ref, int horizon);

// Schur complement of M onto the state block: min over du of the stage cost
// for a fixed dx. Transforms as P^-T W P^-1 under an isomorphism.
Eigen::MatrixXd state_weight(const ControlObjective& obj);

}  // namespace cloak
