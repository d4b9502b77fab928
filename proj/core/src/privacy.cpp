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

#include "cloak/privacy.hpp"

#include <string>

#include "cloak/error.hpp"
#include "cloak/group.hpp"
#include "cloak/linalg.hpp"

namespace cloak {
namespace {

int chained_products(const std::vector<int>& r) {
  int total = 0;
  for (std::size_t i = 1; i < r.size(); ++i) total += r[i - 1] * r[i];
  return total;
}

}  // namespace

int dim_group(int n, int m, int p) {
  if (n < 1 || m < 1 || p < 1) throw Error("dims", "dimensions must be positive");
  return n * (n + 1) + m * (n + 1) + m * m + p * (p + 1);
}

int dim_pair_formula(const BarePlant& plant) {
  const std::vector<int> r = rank_increments(plant.A, plant.B);
  return plant.m() * (plant.n() + 1) - chained_products(r);
}

int dim_pair_formula_indices(const BarePlant& plant) {
  const std::vector<int> r = rank_increments(plant.A, plant.B);
  const std::vector<int> kappa = conjugate_partition(r);
  int total = plant.m() * plant.n() + plant.m();
  for (int k : kappa) {
    for (int j = 0; j < k - 1; ++j) total -= r[static_cast<std::size_t>(j)];
  }
  return total;
}

int dim_prime_formula(const BarePlant& plant) {
  const std::vector<int> chains = match_brunovsky(plant);
  if (chains.empty()) throw Error("not-brunovsky", "plant is not in Brunovsky form");
  const std::vector<int> r = rank_increments(plant.A, plant.B);
  int total = plant.m();
  for (int k : chains) total += r[static_cast<std::size_t>(k - 1)];
  return total;
}

int scenario1_lower_bound(const BarePlant& plant) {
  const int n = plant.n();
  const int m = plant.m();
  const int p = plant.p();
  return n * (n + 1) + m * m + p * (p + 1) + chained_products(rank_increments(plant.A, plant.B));
}

bool certify_trivial_stabilizer(const Eigen::MatrixXd& D, int n) {
  if (D.rows() == 0 || D.cols() < n + 1) return false;
  const Eigen::Index m = D.cols() - (n + 1);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < D.rows(); ++i) {
    if (m == 0 || D.row(i).tail(m).cwiseAbs().maxCoeff() == 0.0) rows.push_back(i);
  }
  if (static_cast<int>(rows.size()) < n + 1) return false;
  Eigen::MatrixXd D11(static_cast<Eigen::Index>(rows.size()), n + 1);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    D11.row(static_cast<Eigen::Index>(k)) = D.row(rows[k]).head(n + 1);
  }
  return linalg::numerical_rank(D11) == n + 1;
}

int stabilizer_omega_dim(const LiftedSystem& sys, const Eigen::MatrixXd& D) {
  const StabilizerSubspace space = stabilizer_subspace(sys, /*with_output=*/true);
  if (D.rows() == 0 || space.dim == 0) return space.dim;
  const int nx = sys.n() + 1;
  const int m = sys.m();
  if (D.cols() != nx + m) throw Error("dims", "D must have n+m+1 columns");
  const Eigen::MatrixXd Dx = D.leftCols(nx);
  const Eigen::MatrixXd Du = D.rightCols(m);
  const Eigen::MatrixXd B_pinv = linalg::pinv(sys.B());

  // D L = D with L - I = [[Q, 0], [F(Q), G(Q) - I]], linear in Q.
  const Eigen::Index rows = D.rows() * nx + D.rows() * m;
  Eigen::MatrixXd op(rows, space.dim);
  for (int k = 0; k < space.dim; ++k) {
    const Eigen::MatrixXd& Q = space.basis[static_cast<std::size_t>(k)];
    const Eigen::MatrixXd F = B_pinv * (Q * sys.A() - sys.A() * Q);
    const Eigen::MatrixXd dG = B_pinv * Q * sys.B();
    Eigen::VectorXd col(rows);
    col.head(D.rows() * nx) = (Dx * Q + Du * F).reshaped();
    col.tail(D.rows() * m) = (Du * dG).reshaped();
    op.col(k) = col;
  }
  const double scale = D.norm() * (1.0 + sys.A().norm() + sys.B().norm());
  return static_cast<int>(linalg::null_space(op, scale).cols());
}

PrivacyReport uncertainty_dimension(int scenario, const LiftedSystem& sys,
                                    const Eigen::MatrixXd& D, int side_k) {
  if (scenario < 1 || scenario > 3) throw Error("scenario", "scenario must be 1, 2 or 3");
  const BarePlant plant = sys.bare();
  const StructureReport structure = structure_report(plant);

  PrivacyReport r;
  r.scenario = scenario;
  r.n = sys.n();
  r.m = sys.m();
  r.p = sys.p();
  r.side_knowledge_k = side_k;
  r.rank_increments = structure.rank_increments;
  r.controllability_indices = structure.controllability_indices;
  r.is_brunovsky_form = structure.is_brunovsky_form;
  r.dim_group = dim_group(r.n, r.m, r.p);
  r.dim_stabilizer_pair = dim_pair_formula(plant);
  r.dim_stabilizer_pair_oracle = stabilizer_subspace(sys, /*with_output=*/false).dim;
  r.dim_stabilizer_sys = stabilizer_subspace(sys, /*with_output=*/true).dim;
  r.scenario1_lower_bound = scenario1_lower_bound(plant);
  r.formula_oracle_agree = r.dim_stabilizer_pair == r.dim_stabilizer_pair_oracle &&
                           dim_pair_formula_indices(plant) == r.dim_stabilizer_pair;
  if (r.is_brunovsky_form) {
    r.dim_prime_formula = dim_prime_formula(plant);
    if (r.dim_prime_formula != r.dim_stabilizer_sys) r.formula_oracle_agree = false;
  }
  if (!r.formula_oracle_agree) r.notes.emplace_back("closed-form dimension differs from oracle");

  r.trivial_stabilizer_certified = certify_trivial_stabilizer(D, r.n);
  if (r.trivial_stabilizer_certified) {
    r.dim_stabilizer_omega = 0;
    r.notes.emplace_back("n+1 independent state constraints: stabilizer of the problem is trivial");
  } else {
    r.dim_stabilizer_omega = stabilizer_omega_dim(sys, D);
    r.notes.emplace_back("stabilizer of the problem computed numerically (no closed form)");
  }

  switch (scenario) {
    case 1: r.scenario_group_dim = r.dim_group; break;
    case 2: r.scenario_group_dim = r.dim_stabilizer_sys + r.n * (r.n + 1); break;
    default: r.scenario_group_dim = r.dim_stabilizer_sys; break;
  }
  const int base = r.scenario_group_dim - r.dim_stabilizer_omega;
  if (side_k < 0 || side_k > base) {
    throw Error("side-knowledge", "side knowledge rank must lie in [0, " +
                                      std::to_string(base) + "]");
  }
  r.uncertainty_dim = base - side_k;
  if (scenario == 3 && r.dim_stabilizer_sys == 0) {
    r.notes.emplace_back("trivial stabilizer: scenario 3 offers no privacy for this system");
  }
  return r;
}

}  // namespace cloak
