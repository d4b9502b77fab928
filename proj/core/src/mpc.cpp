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

#include "cloak/mpc.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "cloak/error.hpp"
#include "cloak/linalg.hpp"

namespace cloak {

PrestabilizedQP condense_prestabilized(const LiftedSystem& sys, const ControlObjective& obj,
                                       const Eigen::VectorXd& x0, const Eigen::MatrixXd& K) {
  const int n = sys.n();
  const int m = sys.m();
  validate_objective(obj, n, m);
  if (x0.size() != n + 1) throw Error("dims", "initial state must be lifted (n+1 entries)");
  if (K.rows() != m || K.cols() != n + 1) throw Error("dims", "feedback gain must be m x (n+1)");
  const int N = obj.horizon;
  const int nx = n + 1;
  const int ne = nx + m;
  const int nv = m * (N + 1);
  const int h = obj.constraint_count();
  const Eigen::MatrixXd closed = sys.A() + sys.B() * K;

  PrestabilizedQP out;
  CondensedQP& qp = out.qp;
  qp.x0 = x0;
  qp.H = Eigen::MatrixXd::Zero(nv, nv);
  qp.f = Eigen::VectorXd::Zero(nv);
  qp.c0 = 0.0;
  qp.A_ineq.resize(h * (N + 1), nv);
  qp.b_ineq.resize(h * (N + 1));
  out.T.resize(nv, nv);
  out.t.resize(nv);

  // gamma maps V to x_i; free_x is the response to x0 alone.
  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(nx, nv);
  Eigen::VectorXd free_x = x0;
  Eigen::MatrixXd Z(ne, nv);
  Eigen::VectorXd w(ne);
  for (int i = 0; i <= N; ++i) {
    Z.topRows(nx) = gamma;
    Z.bottomRows(m) = K * gamma;
    Z.block(nx, i * m, m, m) += Eigen::MatrixXd::Identity(m, m);
    w.head(nx) = free_x;
    w.tail(m) = K * free_x;
    out.T.middleRows(i * m, m) = Z.bottomRows(m);
    out.t.segment(i * m, m) = w.tail(m);
    Eigen::VectorXd dz = w;
    dz.head(nx) -= obj.x_ref[static_cast<std::size_t>(i)];
    dz.tail(m) -= obj.u_ref[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd MZ = obj.M * Z;
    qp.H.noalias() += 2.0 * Z.transpose() * MZ;
    qp.f.noalias() += 2.0 * MZ.transpose() * dz;
    qp.c0 += dz.dot(obj.M * dz);
    if (h > 0) {
      qp.A_ineq.middleRows(i * h, h) = obj.D * Z;
      qp.b_ineq.segment(i * h, h) = -(obj.D * w);
    }
    gamma = closed * gamma;
    gamma.middleCols(i * m, m) += sys.B();
    free_x = closed * free_x;
  }
  qp.H = 0.5 * (qp.H + qp.H.transpose());
  return out;
}

CondensedQP condense(const LiftedSystem& sys, const ControlObjective& obj,
                     const Eigen::VectorXd& x0) {
  return condense_prestabilized(sys, obj, x0,
                                Eigen::MatrixXd::Zero(sys.m(), sys.n() + 1)).qp;
}

Eigen::MatrixXd stabilizing_gain(const LiftedSystem& sys, const ControlObjective& obj) {
  const int n = sys.n();
  const int m = sys.m();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m, n + 1);
  const Eigen::MatrixXd A = sys.A().topLeftCorner(n, n);
  const Eigen::MatrixXd B = sys.B().topRows(n);
  const Eigen::MatrixXd Q = obj.M.topLeftCorner(n, n);
  const Eigen::MatrixXd R = obj.M.bottomRightCorner(m, m);
  Eigen::MatrixXd P = Q;
  constexpr int kMaxIters = 10000;
  for (int it = 0; it < kMaxIters; ++it) {
    const Eigen::MatrixXd BtP = B.transpose() * P;
    const Eigen::MatrixXd gain = (R + BtP * B).ldlt().solve(BtP * A);
    Eigen::MatrixXd next = Q + A.transpose() * P * (A - B * gain);
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) return K;
    const double change = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (change <= 1e-12 * std::max(1.0, P.cwiseAbs().maxCoeff())) {
      const Eigen::MatrixXd BtPf = B.transpose() * P;
      K.leftCols(n) = -(R + BtPf * B).ldlt().solve(BtPf * A);
      return K.allFinite() ? K : Eigen::MatrixXd::Zero(m, n + 1);
    }
  }
  return K;
}

std::vector<Eigen::VectorXd> simulate(const LiftedSystem& sys, const Eigen::VectorXd& x0,
                                      const std::vector<Eigen::VectorXd>& u) {
  std::vector<Eigen::VectorXd> x;
  if (u.empty()) return x;
  x.reserve(u.size());
  x.push_back(x0);
  for (std::size_t i = 0; i + 1 < u.size(); ++i) x.push_back(sys.step(x.back(), u[i]));
  return x;
}

std::vector<Eigen::VectorXd> split_inputs(const Eigen::VectorXd& U, int m) {
  if (m < 1 || U.size() % m != 0) throw Error("dims", "input stack not divisible by m");
  std::vector<Eigen::VectorXd> u;
  for (Eigen::Index i = 0; i < U.size(); i += m) u.emplace_back(U.segment(i, m));
  return u;
}

Eigen::VectorXd stack_inputs(const std::vector<Eigen::VectorXd>& u) {
  Eigen::Index total = 0;
  for (const auto& ui : u) total += ui.size();
  Eigen::VectorXd U(total);
  Eigen::Index offset = 0;
  for (const auto& ui : u) {
    U.segment(offset, ui.size()) = ui;
    offset += ui.size();
  }
  return U;
}

StateEstimate deadbeat_estimate(const LiftedSystem& sys,
                                const std::vector<Eigen::VectorXd>& y_window,
                                const std::vector<Eigen::VectorXd>& u_window,
                                const std::optional<EstimatorPrior>& prior) {
  const int n = sys.n();
  const int nx = n + 1;
  const int q = sys.p() + 1;
  const auto L = static_cast<int>(y_window.size());
  if (L < 1) throw Error("estimator", "at least one output is required");
  if (static_cast<int>(u_window.size()) != L - 1) {
    throw Error("dims", "input window must hold one entry fewer than the output window");
  }

  // Unknowns are the bare window states x_0..x_{L-1}; rows hold the output
  // equations C x_j = y_j and the one-step dynamics, so no powers of A appear.
  const int m = sys.m();
  const Eigen::MatrixXd& A = sys.A();
  const Eigen::MatrixXd& B = sys.B();
  const Eigen::MatrixXd& C = sys.C();
  const int rows = q * L + n * (L - 1);
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(rows, n * L);
  Eigen::VectorXd rhs(rows);
  for (int j = 0; j < L; ++j) {
    const auto& y = y_window[static_cast<std::size_t>(j)];
    if (y.size() != q) throw Error("dims", "output must be lifted (p+1 entries)");
    E.block(j * q, j * n, q, n) = C.leftCols(n);
    rhs.segment(j * q, q) = y - C.col(n);
  }
  for (int j = 0; j + 1 < L; ++j) {
    const auto& u = u_window[static_cast<std::size_t>(j)];
    if (u.size() != m) throw Error("dims", "input size");
    const int r = q * L + j * n;
    E.block(r, (j + 1) * n, n, n) = Eigen::MatrixXd::Identity(n, n);
    E.block(r, j * n, n, n) = -A.topLeftCorner(n, n);
    rhs.segment(r, n) = A.col(n).head(n) + B.topRows(n) * u;
  }

  StateEstimate est;
  est.flagged = L < n + 1;
  const double scale = E.norm();
  est.determined = linalg::numerical_rank(E, scale) == n * L;

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(E);
  Eigen::VectorXd window = cod.solve(rhs);
  const auto current = [&](const Eigen::VectorXd& states) {
    Eigen::VectorXd x(nx);
    x << states.tail(n), 1.0;
    return x;
  };

  if (!est.determined && prior) {
    if (prior->mean.size() != nx || prior->weight.rows() != nx || prior->weight.cols() != nx) {
      throw Error("dims", "estimator prior must be lifted");
    }
    // Consistent windows: window + span(K); only the current state is weighted.
    const Eigen::MatrixXd K = linalg::null_space(E, scale);
    const Eigen::MatrixXd Phi = K.bottomRows(n);
    const Eigen::MatrixXd W = prior->weight.topLeftCorner(n, n);
    const Eigen::VectorXd r = window.tail(n) - prior->mean.head(n);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> sub(Phi.transpose() * W * Phi);
    window += K * sub.solve(-(Phi.transpose() * W * r));
  }
  est.x = current(window);
  return est;
}

OutputFeedbackMpc::OutputFeedbackMpc(LiftedSystem sys, ControlObjective obj, SolverConfig cfg)
    : sys_(std::move(sys)), obj_(std::move(obj)), cfg_(cfg) {
  validate_objective(obj_, sys_.n(), sys_.m());
  prior_ = {obj_.x_ref.front(), state_weight(obj_)};
  gain_ = stabilizing_gain(sys_, obj_);
}

OutputFeedbackMpc::Step OutputFeedbackMpc::step(const Eigen::VectorXd& y) {
  if (y.size() != sys_.p() + 1) throw Error("dims", "measurement must be lifted (p+1 entries)");
  const auto window = static_cast<std::size_t>(sys_.n() + 1);
  y_hist_.push_back(y);
  if (y_hist_.size() > window) y_hist_.erase(y_hist_.begin());
  while (u_hist_.size() + 1 > y_hist_.size()) u_hist_.erase(u_hist_.begin());

  Step out;
  out.estimate = deadbeat_estimate(sys_, y_hist_, u_hist_, prior_);
  const PrestabilizedQP problem = condense_prestabilized(sys_, obj_, out.estimate.x, gain_);
  out.qp = solve(problem.qp, cfg_);
  out.qp.U = problem.T * out.qp.U + problem.t;
  out.u = out.qp.U.head(sys_.m());
  u_hist_.push_back(out.u);
  return out;
}

}  // namespace cloak
