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

#include "cloak/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cloak/error.hpp"

namespace cloak {
namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double clip_scale(double v) {
  if (v < 1e-4) return 1.0;
  return std::min(v, 1e4);
}

// Ruiz-equilibrated copy of the problem: Hs = c D H D, fs = c D f,
// As = E A D, bs = E b.
struct Scaled {
  Eigen::MatrixXd H, A;
  Eigen::VectorXd f, b, D, E;
  double c = 1.0;
};

Scaled equilibrate(const CondensedQP& qp, int iters) {
  Scaled s{qp.H, qp.A_ineq, qp.f, qp.b_ineq,
           Eigen::VectorXd::Ones(qp.H.rows()), Eigen::VectorXd::Ones(qp.A_ineq.rows()), 1.0};
  const Eigen::Index nv = s.H.rows();
  const Eigen::Index nc = s.A.rows();
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd d(nv), e(nc);
    for (Eigen::Index j = 0; j < nv; ++j) {
      double norm = s.H.col(j).cwiseAbs().maxCoeff();
      if (nc > 0) norm = std::max(norm, s.A.col(j).cwiseAbs().maxCoeff());
      d(j) = 1.0 / std::sqrt(clip_scale(norm));
    }
    for (Eigen::Index i = 0; i < nc; ++i) {
      e(i) = 1.0 / std::sqrt(clip_scale(s.A.row(i).cwiseAbs().maxCoeff()));
    }
    s.H = d.asDiagonal() * s.H * d.asDiagonal();
    s.A = e.asDiagonal() * s.A * d.asDiagonal();
    s.f = d.cwiseProduct(s.f);
    s.D = s.D.cwiseProduct(d);
    s.E = s.E.cwiseProduct(e);
    double mean_col = 0.0;
    for (Eigen::Index j = 0; j < nv; ++j) mean_col += s.H.col(j).cwiseAbs().maxCoeff();
    mean_col /= static_cast<double>(nv);
    const double gamma = 1.0 / clip_scale(std::max(mean_col, inf_norm(s.f)));
    s.H *= gamma;
    s.f *= gamma;
    s.c *= gamma;
  }
  s.b = s.E.cwiseProduct(qp.b_ineq);
  return s;
}

struct Tolerances {
  double stationarity, primal;
};

Tolerances kkt_tolerances(const CondensedQP& qp, const Eigen::VectorXd& U,
                          const Eigen::VectorXd& mult, const SolverConfig& cfg) {
  const Eigen::Index nc = qp.A_ineq.rows();
  const double stat_scale =
      std::max({inf_norm(qp.H * U), inf_norm(qp.f),
                nc > 0 ? inf_norm(qp.A_ineq.transpose() * mult) : 0.0});
  const double prim_scale =
      nc > 0 ? std::max(inf_norm(qp.A_ineq * U), inf_norm(qp.b_ineq)) : 0.0;
  return {cfg.abs_tol + cfg.rel_tol * stat_scale, cfg.abs_tol + cfg.rel_tol * prim_scale};
}

bool kkt_ok(const CondensedQP& qp, const QpResult& r, const SolverConfig& cfg) {
  const Tolerances tol = kkt_tolerances(qp, r.U, r.multipliers, cfg);
  const double comp_tol =
      cfg.abs_tol + cfg.rel_tol * std::max(1.0, inf_norm(r.multipliers)) *
                        std::max(1.0, inf_norm(qp.b_ineq));
  return r.kkt.stationarity <= tol.stationarity && r.kkt.primal <= tol.primal &&
         r.kkt.dual_sign <= tol.stationarity && r.kkt.complementarity <= comp_tol;
}

// Equality-constrained subproblem on a working set W via the Schur complement
// of H. Dependent rows are handled by a complete orthogonal decomposition.
void solve_working_set(const CondensedQP& qp, const Eigen::LLT<Eigen::MatrixXd>& llt,
                       const std::vector<Eigen::Index>& working, Eigen::VectorXd& U,
                       Eigen::VectorXd& lambda_w) {
  const Eigen::VectorXd u_free = -llt.solve(qp.f);
  if (working.empty()) {
    U = u_free;
    lambda_w.resize(0);
    return;
  }
  const auto k = static_cast<Eigen::Index>(working.size());
  Eigen::MatrixXd Aw(k, qp.H.cols());
  Eigen::VectorXd bw(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    Aw.row(i) = qp.A_ineq.row(working[static_cast<std::size_t>(i)]);
    bw(i) = qp.b_ineq(working[static_cast<std::size_t>(i)]);
  }
  const Eigen::MatrixXd HinvAt = llt.solve(Aw.transpose());
  const Eigen::MatrixXd S = Aw * HinvAt;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(S);
  cod.setThreshold(1e-12);
  lambda_w = cod.solve(Aw * u_free - bw);
  U = u_free - HinvAt * lambda_w;
}

bool polish(const CondensedQP& qp, const Eigen::LLT<Eigen::MatrixXd>& llt,
            const Eigen::VectorXd& U0, const Eigen::VectorXd& y0, QpResult& out) {
  const Eigen::Index nc = qp.A_ineq.rows();
  const Eigen::VectorXd slack0 = qp.b_ineq - qp.A_ineq * U0;
  std::vector<char> active(static_cast<std::size_t>(nc), 0);
  for (Eigen::Index i = 0; i < nc; ++i) active[static_cast<std::size_t>(i)] = y0(i) > slack0(i);

  const double feas_tol = 1e-12 * std::max(1.0, inf_norm(qp.b_ineq));
  const int max_rounds = static_cast<int>(2 * nc + 10);
  for (int round = 0; round < max_rounds; ++round) {
    std::vector<Eigen::Index> working;
    for (Eigen::Index i = 0; i < nc; ++i) {
      if (active[static_cast<std::size_t>(i)]) working.push_back(i);
    }
    Eigen::VectorXd U, lw;
    solve_working_set(qp, llt, working, U, lw);

    Eigen::Index drop = -1;
    double most_negative = 0.0;
    for (std::size_t w = 0; w < working.size(); ++w) {
      if (lw(static_cast<Eigen::Index>(w)) < most_negative) {
        most_negative = lw(static_cast<Eigen::Index>(w));
        drop = working[w];
      }
    }
    const Eigen::VectorXd viol = qp.A_ineq * U - qp.b_ineq;
    Eigen::Index add = -1;
    double worst = feas_tol;
    for (Eigen::Index i = 0; i < nc; ++i) {
      if (!active[static_cast<std::size_t>(i)] && viol(i) > worst) {
        worst = viol(i);
        add = i;
      }
    }
    if (drop < 0 && add < 0) {
      out.U = U;
      out.multipliers = Eigen::VectorXd::Zero(nc);
      for (std::size_t w = 0; w < working.size(); ++w) {
        out.multipliers(working[w]) = lw(static_cast<Eigen::Index>(w));
      }
      return true;
    }
    if (add >= 0) {
      active[static_cast<std::size_t>(add)] = 1;
    } else {
      active[static_cast<std::size_t>(drop)] = 0;
    }
  }
  return false;
}

// Dual active-set method (Goldfarb-Idnani) started from the unconstrained
// minimizer. Exact and finite; used when the polished ADMM point fails the KKT
// check. Returns false when the iteration limit is hit; sets `infeasible` when
// a violated constraint cannot be restored.
bool dual_active_set(const CondensedQP& qp, const Eigen::LLT<Eigen::MatrixXd>& llt,
                     QpResult& out, bool& infeasible) {
  const Eigen::Index nv = qp.H.rows();
  const Eigen::Index nc = qp.A_ineq.rows();
  infeasible = false;
  Eigen::VectorXd x = -llt.solve(qp.f);
  std::vector<Eigen::Index> working;
  std::vector<double> lambda;
  const Eigen::VectorXd row_norms = qp.A_ineq.rowwise().lpNorm<Eigen::Infinity>();
  const int max_rounds = static_cast<int>(10 * (nc + nv) + 50);

  for (int round = 0; round < max_rounds; ++round) {
    const Eigen::VectorXd viol = qp.A_ineq * x - qp.b_ineq;
    const double x_scale = inf_norm(x);
    Eigen::Index p = -1;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < nc; ++i) {
      const double tol = 1e-12 * (1.0 + std::abs(qp.b_ineq(i)) + row_norms(i) * x_scale);
      if (viol(i) > tol && viol(i) / std::max(row_norms(i), 1e-300) > worst) {
        worst = viol(i) / std::max(row_norms(i), 1e-300);
        p = i;
      }
    }
    if (p < 0) {
      out.U = x;
      out.multipliers = Eigen::VectorXd::Zero(nc);
      for (std::size_t w = 0; w < working.size(); ++w) out.multipliers(working[w]) = lambda[w];
      return true;
    }

    // Normals a_i with constraints a_i^T x <= b_i; the violated row is pushed
    // back to its bound while the multipliers stay nonnegative.
    const Eigen::VectorXd a_p = qp.A_ineq.row(p).transpose();
    double lambda_p = 0.0;
    for (int inner = 0; inner < max_rounds; ++inner, ++round) {
      const auto k = static_cast<Eigen::Index>(working.size());
      const Eigen::VectorXd Hinv_ap = llt.solve(a_p);
      Eigen::VectorXd z = Hinv_ap;
      Eigen::VectorXd r(k);
      if (k > 0) {
        Eigen::MatrixXd N(nv, k);
        for (Eigen::Index j = 0; j < k; ++j) {
          N.col(j) = qp.A_ineq.row(working[static_cast<std::size_t>(j)]).transpose();
        }
        const Eigen::MatrixXd HinvN = llt.solve(N);
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(N.transpose() * HinvN);
        r = cod.solve(N.transpose() * Hinv_ap);
        z -= HinvN * r;
      }
      // x moves along -z, lowering a_p^T x; the active multipliers move by -t r.
      double t1 = std::numeric_limits<double>::infinity();
      Eigen::Index drop = -1;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (r(j) > 1e-14 * std::max(1.0, inf_norm(r))) {
          const double t = lambda[static_cast<std::size_t>(j)] / r(j);
          if (t < t1) {
            t1 = t;
            drop = j;
          }
        }
      }
      const double curvature = a_p.dot(z);
      const double gap = a_p.dot(x) - qp.b_ineq(p);
      const bool primal_step = curvature > 1e-14 * a_p.squaredNorm() * inf_norm(Hinv_ap) /
                                               std::max(inf_norm(a_p), 1e-300);
      const double t2 = primal_step ? gap / curvature : std::numeric_limits<double>::infinity();
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) {
        infeasible = true;
        return false;
      }
      if (primal_step) x -= t * z;
      for (Eigen::Index j = 0; j < k; ++j) lambda[static_cast<std::size_t>(j)] -= t * r(j);
      lambda_p += t;
      if (t == t2) {
        working.push_back(p);
        lambda.push_back(lambda_p);
        break;
      }
      working.erase(working.begin() + drop);
      lambda.erase(lambda.begin() + drop);
    }
  }
  return false;
}

}  // namespace

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kSolved: return "solved";
    case SolveStatus::kMaxIterations: return "max_iterations";
    case SolveStatus::kInfeasible: return "infeasible";
  }
  return "unknown";
}

SolveStatus solve_status_from_string(std::string_view name) {
  if (name == "solved") return SolveStatus::kSolved;
  if (name == "max_iterations") return SolveStatus::kMaxIterations;
  if (name == "infeasible") return SolveStatus::kInfeasible;
  throw Error("protocol", "unknown solver status '" + std::string(name) + "'");
}

KktResiduals kkt_residuals(const CondensedQP& qp, const Eigen::VectorXd& U,
                           const Eigen::VectorXd& multipliers) {
  KktResiduals r;
  Eigen::VectorXd grad = qp.H * U + qp.f;
  if (qp.A_ineq.rows() > 0) {
    grad += qp.A_ineq.transpose() * multipliers;
    const Eigen::VectorXd slack = qp.A_ineq * U - qp.b_ineq;
    r.primal = std::max(0.0, slack.maxCoeff());
    r.complementarity = multipliers.cwiseProduct(slack).cwiseAbs().maxCoeff();
    r.dual_sign = std::max(0.0, -multipliers.minCoeff());
  }
  r.stationarity = inf_norm(grad);
  return r;
}

QpResult solve(const CondensedQP& qp, const SolverConfig& cfg) {
  const Eigen::Index nv = qp.H.rows();
  const Eigen::Index nc = qp.A_ineq.rows();
  if (nv == 0 || qp.H.cols() != nv || qp.f.size() != nv ||
      (nc > 0 && (qp.A_ineq.cols() != nv || qp.b_ineq.size() != nc))) {
    throw Error("dims", "inconsistent QP dimensions");
  }
  if (!(cfg.abs_tol > 0.0) || !(cfg.rel_tol > 0.0) || cfg.max_iters < 1) {
    throw Error("solver-config", "tolerances must be positive and max_iters >= 1");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(qp.H);
  if (llt.info() != Eigen::Success) throw Error("qp", "H is not positive definite");

  QpResult result;
  if (nc == 0) {
    result.U = -llt.solve(qp.f);
    result.multipliers.resize(0);
    result.status = SolveStatus::kSolved;
    result.objective = qp.objective(result.U);
    result.kkt = kkt_residuals(qp, result.U, result.multipliers);
    return result;
  }

  const Scaled s = equilibrate(qp, cfg.scaling_iters);
  const Eigen::MatrixXd At = s.A.transpose();
  const Eigen::MatrixXd AtA = At * s.A;
  const Eigen::MatrixXd Hs = s.H + cfg.sigma * Eigen::MatrixXd::Identity(nv, nv);
  double rho = cfg.rho;
  Eigen::LLT<Eigen::MatrixXd> kkt(Hs + rho * AtA);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(nv);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(nc);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(nc);
  const Eigen::VectorXd D_inv = s.D.cwiseInverse();
  const Eigen::VectorXd E_inv = s.E.cwiseInverse();
  constexpr int kCheckEvery = 10;
  constexpr int kRhoEvery = 50;
  constexpr double kInfeasTol = 1e-6;

  bool converged = false;
  bool infeasible = false;
  int iter = 0;
  for (iter = 1; iter <= cfg.max_iters; ++iter) {
    const Eigen::VectorXd rhs = cfg.sigma * x - s.f + At * (rho * z - y);
    const Eigen::VectorXd x_tilde = kkt.solve(rhs);
    const Eigen::VectorXd z_tilde = s.A * x_tilde;
    const Eigen::VectorXd z_relax = cfg.alpha * z_tilde + (1.0 - cfg.alpha) * z;
    x = cfg.alpha * x_tilde + (1.0 - cfg.alpha) * x;
    const Eigen::VectorXd z_next = (z_relax + y / rho).cwiseMin(s.b);
    const Eigen::VectorXd y_next = y + rho * (z_relax - z_next);
    const Eigen::VectorXd dy = y_next - y;
    z = z_next;
    y = y_next;
    if (iter % kCheckEvery != 0 && iter != cfg.max_iters) continue;

    const Eigen::VectorXd Ax = s.A * x;
    const Eigen::VectorXd Hx = s.H * x;
    const Eigen::VectorXd Aty = At * y;
    const double r_prim = inf_norm(E_inv.cwiseProduct(Ax - z));
    const double r_dual = inf_norm(D_inv.cwiseProduct(Hx + s.f + Aty)) / s.c;
    const double prim_scale =
        std::max(inf_norm(E_inv.cwiseProduct(Ax)), inf_norm(E_inv.cwiseProduct(z)));
    const double dual_scale = std::max({inf_norm(D_inv.cwiseProduct(Hx)),
                                        inf_norm(D_inv.cwiseProduct(Aty)),
                                        inf_norm(D_inv.cwiseProduct(s.f))}) / s.c;
    if (r_prim <= cfg.abs_tol + cfg.rel_tol * prim_scale &&
        r_dual <= cfg.abs_tol + cfg.rel_tol * dual_scale) {
      converged = true;
      break;
    }

    const Eigen::VectorXd dy_unscaled = s.E.cwiseProduct(dy) / s.c;
    const double dy_norm = inf_norm(dy_unscaled);
    if (dy_norm > 1e-12) {
      const Eigen::VectorXd Atdy = qp.A_ineq.transpose() * dy_unscaled;
      if (inf_norm(Atdy) <= kInfeasTol * dy_norm &&
          qp.b_ineq.dot(dy_unscaled.cwiseMax(0.0)) < -kInfeasTol * dy_norm &&
          dy_unscaled.minCoeff() >= -kInfeasTol * dy_norm) {
        infeasible = true;
        break;
      }
    }

    if (iter % kRhoEvery == 0) {
      const double p_rel = r_prim / std::max(prim_scale, 1e-30);
      const double d_rel = r_dual / std::max(dual_scale, 1e-30);
      const double factor = std::sqrt(p_rel / std::max(d_rel, 1e-30));
      const double new_rho = std::clamp(rho * factor, 1e-6, 1e6);
      if (new_rho > 5.0 * rho || new_rho < 0.2 * rho) {
        rho = new_rho;
        kkt.compute(Hs + rho * AtA);
      }
    }
  }
  result.iterations = std::min(iter, cfg.max_iters);

  if (infeasible && cfg.polish) {
    bool dual_infeasible = false;
    QpResult exact;
    if (dual_active_set(qp, llt, exact, dual_infeasible)) {
      exact.kkt = kkt_residuals(qp, exact.U, exact.multipliers);
      if (kkt_ok(qp, exact, cfg)) {
        exact.iterations = result.iterations;
        exact.polished = true;
        exact.status = SolveStatus::kSolved;
        exact.objective = qp.objective(exact.U);
        return exact;
      }
    }
  }
  if (infeasible) {
    result.U = s.D.cwiseProduct(x);
    result.multipliers = s.E.cwiseProduct(y) / s.c;
    result.status = SolveStatus::kInfeasible;
    result.objective = std::numeric_limits<double>::quiet_NaN();
    result.kkt = kkt_residuals(qp, result.U, result.multipliers);
    return result;
  }

  result.U = s.D.cwiseProduct(x);
  result.multipliers = (s.E.cwiseProduct(y) / s.c).cwiseMax(0.0);
  result.kkt = kkt_residuals(qp, result.U, result.multipliers);
  result.status = converged ? SolveStatus::kSolved : SolveStatus::kMaxIterations;

  if (cfg.polish) {
    QpResult polished = result;
    bool accepted = false;
    if (polish(qp, llt, result.U, result.multipliers, polished)) {
      polished.kkt = kkt_residuals(qp, polished.U, polished.multipliers);
      accepted = kkt_ok(qp, polished, cfg);
    }
    if (!accepted) {
      bool dual_infeasible = false;
      polished = result;
      if (dual_active_set(qp, llt, polished, dual_infeasible)) {
        polished.kkt = kkt_residuals(qp, polished.U, polished.multipliers);
        accepted = kkt_ok(qp, polished, cfg);
      }
    }
    if (accepted) {
      polished.polished = true;
      polished.status = SolveStatus::kSolved;
      result = std::move(polished);
    }
  }
  if (result.status == SolveStatus::kSolved && !result.polished && !kkt_ok(qp, result, cfg)) {
    result.status = SolveStatus::kMaxIterations;
  }
  result.objective = qp.objective(result.U);
  return result;
}

}  // namespace cloak
