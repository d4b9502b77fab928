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

#include "cloak/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cloak/error.hpp"
#include "cloak/linalg.hpp"

namespace cloak {
namespace {

void check_lengths(const ControlObjective& obj, const std::vector<Eigen::VectorXd>& x,
                   const std::vector<Eigen::VectorXd>& u) {
  const auto expected = static_cast<std::size_t>(obj.horizon + 1);
  if (x.size() != expected || u.size() != expected) {
    throw Error("dims", "trajectory length must be N+1 = " + std::to_string(expected));
  }
}

}  // namespace

int ControlObjective::state_dim() const {
  return x_ref.empty() ? static_cast<int>(M.rows()) - input_dim() - 1
                       : static_cast<int>(x_ref.front().size()) - 1;
}

int ControlObjective::input_dim() const {
  return u_ref.empty() ? 0 : static_cast<int>(u_ref.front().size());
}

void validate_objective(const ControlObjective& obj, int n, int m) {
  const int dim = n + m + 1;
  if (obj.horizon < 0) throw Error("objective", "horizon must be nonnegative");
  if (obj.M.rows() != dim || obj.M.cols() != dim) {
    throw Error("dims", "M must be (n+m+1) x (n+m+1) = " + std::to_string(dim));
  }
  if (obj.D.rows() > 0 && obj.D.cols() != dim) throw Error("dims", "D must have n+m+1 columns");
  const auto expected = static_cast<std::size_t>(obj.horizon + 1);
  if (obj.x_ref.size() != expected || obj.u_ref.size() != expected) {
    throw Error("objective", "references must have N+1 entries");
  }
  for (const auto& x : obj.x_ref) {
    if (x.size() != n + 1) throw Error("dims", "reference state must have n+1 entries");
    if (!x.allFinite()) throw Error("objective", "reference state must be finite");
    if (x(n) != 1.0) throw Error("objective", "reference state must end in 1");
  }
  for (const auto& u : obj.u_ref) {
    if (u.size() != m) throw Error("dims", "reference input must have m entries");
    if (!u.allFinite()) throw Error("objective", "reference input must be finite");
  }
  if (!obj.M.allFinite() || !obj.D.allFinite()) throw Error("objective", "entries must be finite");
  if (linalg::max_abs_diff(obj.M, obj.M.transpose()) > 1e-12 * (1.0 + obj.M.cwiseAbs().maxCoeff())) {
    throw Error("objective", "M must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(obj.M, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || !(lo > 1e-10 * hi)) throw Error("objective", "M must be positive definite");
  if (obj.D.rows() > 0) {
    const int full = static_cast<int>(std::min<Eigen::Index>(obj.D.rows(), obj.D.cols()));
    if (linalg::numerical_rank(obj.D) != full) throw Error("objective", "D must have full rank");
  }
}

double eval_cost(const ControlObjective& obj, const std::vector<Eigen::VectorXd>& x,
                 const std::vector<Eigen::VectorXd>& u) {
  check_lengths(obj, x, u);
  const Eigen::Index nx = obj.x_ref.front().size();
  const Eigen::Index nu = obj.u_ref.front().size();
  double total = 0.0;
  Eigen::VectorXd delta(nx + nu);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != nx || u[i].size() != nu) throw Error("dims", "trajectory entry size");
    delta << x[i] - obj.x_ref[i], u[i] - obj.u_ref[i];
    total += delta.dot(obj.M * delta);
  }
  return total;
}

Eigen::MatrixXd eta_map(const Isomorphism& psi) {
  const Eigen::Index nx = psi.P.rows();
  const Eigen::Index m = psi.G.rows();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(nx + m, nx + m);
  L.topLeftCorner(nx, nx) = psi.P;
  L.bottomLeftCorner(m, nx) = psi.F;
  L.bottomRightCorner(m, m) = psi.G;
  return L;
}

Eigen::MatrixXd eta_map_inverse(const Isomorphism& psi) {
  return eta_map(inverse(psi));
}

ControlObjective transform_objective(const Isomorphism& psi, const ControlObjective& obj) {
  if (psi.P.rows() != obj.state_dim() + 1 || psi.G.rows() != obj.input_dim()) {
    throw Error("dims", "isomorphism does not match objective dimensions");
  }
  const Eigen::MatrixXd L_inv = eta_map_inverse(psi);
  ControlObjective out;
  out.horizon = obj.horizon;
  const Eigen::MatrixXd M = L_inv.transpose() * obj.M * L_inv;
  out.M = 0.5 * (M + M.transpose());
  out.D = obj.D.rows() > 0 ? Eigen::MatrixXd(obj.D * L_inv)
                           : Eigen::MatrixXd(0, obj.M.cols());
  for (std::size_t i = 0; i < obj.x_ref.size(); ++i) {
    Eigen::VectorXd x = psi.P * obj.x_ref[i];
    x(x.size() - 1) = 1.0;
    out.u_ref.push_back(psi.F * obj.x_ref[i] + psi.G * obj.u_ref[i]);
    out.x_ref.push_back(std::move(x));
  }
  return out;
}

Eigen::MatrixXd make_box_state_constraints(const Eigen::VectorXd& lower,
                                           const Eigen::VectorXd& upper, int m) {
  if (lower.size() != upper.size() || lower.size() == 0 || m < 0) {
    throw Error("dims", "bounds must be nonempty and equally sized");
  }
  const Eigen::Index n = lower.size();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2 * n, n + 1 + m);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(lower(i)) || !std::isfinite(upper(i)) || !(lower(i) < upper(i))) {
      throw Error("bounds", "state bound " + std::to_string(i) + " needs finite lower < upper");
    }
    D(2 * i, i) = -1.0;
    D(2 * i, n) = lower(i);
    D(2 * i + 1, i) = 1.0;
    D(2 * i + 1, n) = -upper(i);
  }
  return D;
}

Eigen::MatrixXd make_box_input_constraints(const Eigen::VectorXd& lower,
                                           const Eigen::VectorXd& upper, int n) {
  if (lower.size() != upper.size() || lower.size() == 0 || n < 1) {
    throw Error("dims", "bounds must be nonempty and equally sized");
  }
  const Eigen::Index m = lower.size();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2 * m, n + 1 + m);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (!std::isfinite(lower(j)) || !std::isfinite(upper(j)) || !(lower(j) < upper(j))) {
      throw Error("bounds", "input bound " + std::to_string(j) + " needs finite lower < upper");
    }
    D(2 * j, n + 1 + j) = -1.0;
    D(2 * j, n) = lower(j);
    D(2 * j + 1, n + 1 + j) = 1.0;
    D(2 * j + 1, n) = -upper(j);
  }
  return D;
}

ControlObjective make_tracking_objective(const Eigen::MatrixXd& M, const Eigen::MatrixXd& D,
                                         const Eigen::VectorXd& x_ref_bare,
                                         const Eigen::VectorXd& u_ref, int horizon) {
  if (horizon < 0) throw Error("objective", "horizon must be nonnegative");
  ControlObjective obj;
  obj.M = M;
  obj.D = D.size() == 0 ? Eigen::MatrixXd(0, M.cols()) : D;
  obj.horizon = horizon;
  const Eigen::VectorXd x = lift_point(x_ref_bare);
  obj.x_ref.assign(static_cast<std::size_t>(horizon + 1), x);
  obj.u_ref.assign(static_cast<std::size_t>(horizon + 1), u_ref);
  return obj;
}

Eigen::MatrixXd state_weight(const ControlObjective& obj) {
  const Eigen::Index nx = obj.state_dim() + 1;
  const Eigen::Index m = obj.input_dim();
  const Eigen::MatrixXd Mxx = obj.M.topLeftCorner(nx, nx);
  const Eigen::MatrixXd Mxu = obj.M.topRightCorner(nx, m);
  const Eigen::MatrixXd Muu = obj.M.bottomRightCorner(m, m);
  const Eigen::MatrixXd W = Mxx - Mxu * Muu.llt().solve(Mxu.transpose());
  return 0.5 * (W + W.transpose());
}

}  // namespace cloak
