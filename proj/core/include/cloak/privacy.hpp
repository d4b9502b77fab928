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
#include <vector>

#include <Eigen/Dense>

#include "cloak/sysmodel.hpp"

namespace cloak {

/// n(n+1) + m(n+1) + m^2 + p(p+1)
int dim_group(int n, int m, int p);

// Dimension of the symmetry group of the affine pair (A, B):
//   m(n+1) - sum_{i>=2} r_{i-1} r_i,
// the sum running over every nonzero rank increment. Throws
// Error("controllability") for an uncontrollable pair.
int dim_pair_formula(const BarePlant& plant);

// Equivalent form  m n - sum_i sum_{j<kappa_i} r_j + m.
int dim_pair_formula_indices(const BarePlant& plant);

// sum_i r_{kappa_i} + m for a plant in literal Brunovsky form; throws
// Error("not-brunovsky") otherwise.
int dim_prime_formula(const BarePlant& plant);

/// n(n+1) + m^2 + p(p+1) + sum_{i>=2} r_{i-1} r_i
int scenario1_lower_bound(const BarePlant& plant);

// True iff the rows of D with an all-zero input block, restricted to the n+1
// state columns, have rank n+1. The stabilizer of the full problem is then
// trivial.
bool certify_trivial_stabilizer(const Eigen::MatrixXd& D, int n);

// Dimension of the symmetries of sys that additionally satisfy D L = D.
int stabilizer_omega_dim(const LiftedSystem& sys, const Eigen::MatrixXd& D);

struct PrivacyReport {
  int scenario = 1;
  int n = 0, m = 0, p = 0;
  int dim_group = 0;
  int dim_stabilizer_pair = 0;         // closed form
  int dim_stabilizer_pair_oracle = 0;  // numerical nullity, no output condition
  int dim_stabilizer_sys = 0;          // numerical nullity with output condition
  int dim_stabilizer_omega = 0;
  bool trivial_stabilizer_certified = false;
  int scenario_group_dim = 0;          // dim G, dim H(sys) or dim K(sys)
  int uncertainty_dim = 0;
  int side_knowledge_k = 0;
  int scenario1_lower_bound = 0;
  bool is_brunovsky_form = false;
  int dim_prime_formula = -1;          // -1 when not in Brunovsky form
  bool formula_oracle_agree = true;
  std::vector<int> rank_increments;
  std::vector<int> controllability_indices;
  std::vector<std::string> notes;
};

// Throws Error("scenario") for a scenario outside {1,2,3} and
// Error("side-knowledge") when side_k is negative or exceeds the uncertainty
// dimension available before side knowledge.
PrivacyReport uncertainty_dimension(int scenario, const LiftedSystem& sys,
                                    const Eigen::MatrixXd& D, int side_k);

}  // namespace cloak
