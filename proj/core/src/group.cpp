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

#include "cloak/group.hpp"

#include <algorithm>
#include <string>

#include "cloak/error.hpp"
#include "cloak/linalg.hpp"
#include "cloak/random.hpp"

namespace cloak {
namespace {

Eigen::MatrixXd invert_square(const Eigen::MatrixXd& m, const char* what) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) throw Error("key-invertibility", std::string(what) + " is singular");
  return lu.inverse();
}

Eigen::MatrixXd invert_lifted(const Eigen::MatrixXd& m, const char* what) {
  try {
    return linalg::inverse_lifted(m);
  } catch (const Error&) {
    throw Error("key-invertibility", std::string(what) + " is singular");
  }
}

Eigen::MatrixXd random_lifted_map(Rng& rng, int k) {
  for (int attempt = 0; attempt < kSampleBudget; ++attempt) {
    Eigen::MatrixXd W = uniform_matrix(rng, k, k);
    Eigen::VectorXd v = uniform_vector(rng, k);
    Eigen::MatrixXd lifted = lift_affine(W, v);
    if (linalg::condition_number(lifted) < kSampleMaxCondition) return lifted;
  }
  throw Error("resample-budget", "no well-conditioned lifted map within budget");
}

struct SymmetryDraw {
  Isomorphism psi;
  double residual = 0.0;
};

SymmetryDraw draw_symmetry(Rng& rng, const LiftedSystem& sys, const StabilizerSubspace& space) {
  const int size = sys.n() + 1;
  std::uniform_real_distribution<double> radius_dist(0.1, 0.5);
  for (int attempt = 0; attempt < kSampleBudget; ++attempt) {
    const Eigen::VectorXd coeffs = uniform_vector(rng, space.dim);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(size, size);
    for (int i = 0; i < space.dim; ++i) Q += coeffs(i) * space.basis[i];
    const double norm = linalg::spectral_norm(Q);
    const double radius = radius_dist(rng);
    if (norm > 0.0) Q *= radius / norm;
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(size, size) + Q;
    P.row(size - 1).setZero();
    P(size - 1, size - 1) = 1.0;
    try {
      Isomorphism psi = symmetry_from_state_map(sys, P);
      if (linalg::condition_number(psi.G) >= kSymmetryMaxCondition ||
          linalg::condition_number(psi.S) >= kSymmetryMaxCondition) {
        continue;
      }
      const double residual = fixed_point_residual(psi, sys);
      if (residual <= kSymmetryResidualTol) return {std::move(psi), residual};
    } catch (const Error&) {
    }
  }
  throw Error("resample-budget", "no valid symmetry within budget");
}

}  // namespace

Isomorphism identity_isomorphism(int n, int m, int p) {
  return {Eigen::MatrixXd::Identity(n + 1, n + 1), Eigen::MatrixXd::Zero(m, n + 1),
          Eigen::MatrixXd::Identity(m, m), Eigen::MatrixXd::Identity(p + 1, p + 1)};
}

void validate_isomorphism(const Isomorphism& psi) {
  const auto np1 = psi.P.rows();
  const auto m = psi.G.rows();
  if (np1 < 2 || psi.P.cols() != np1) throw Error("dims", "P must be (n+1) x (n+1)");
  if (m < 1 || psi.G.cols() != m) throw Error("dims", "G must be m x m");
  if (psi.F.rows() != m || psi.F.cols() != np1) throw Error("dims", "F must be m x (n+1)");
  if (psi.S.rows() < 2 || psi.S.cols() != psi.S.rows()) throw Error("dims", "S must be square");
  if (!psi.P.allFinite() || !psi.F.allFinite() || !psi.G.allFinite() || !psi.S.allFinite()) {
    throw Error("dims", "key entries must be finite");
  }
  if (!linalg::has_lifted_last_row(psi.P)) throw Error("key-structure", "last row of P");
  if (!linalg::has_lifted_last_row(psi.S)) throw Error("key-structure", "last row of S");
}

void validate_isomorphism(const Isomorphism& psi, int n, int m, int p) {
  validate_isomorphism(psi);
  if (psi.n() != n || psi.m() != m || psi.p() != p) {
    throw Error("dims", "key dimensions (" + std::to_string(psi.n()) + "," +
                            std::to_string(psi.m()) + "," + std::to_string(psi.p()) +
                            ") do not match system (" + std::to_string(n) + "," +
                            std::to_string(m) + "," + std::to_string(p) + ")");
  }
}

double key_condition(const Isomorphism& psi) {
  return std::max({linalg::condition_number(psi.P), linalg::condition_number(psi.G),
                   linalg::condition_number(psi.S)});
}

Isomorphism compose(const Isomorphism& psi2, const Isomorphism& psi1) {
  if (psi2.P.rows() != psi1.P.rows() || psi2.G.rows() != psi1.G.rows() ||
      psi2.S.rows() != psi1.S.rows()) {
    throw Error("dims", "cannot compose isomorphisms of different dimensions");
  }
  return {psi2.P * psi1.P, psi2.G * psi1.F + psi2.F * psi1.P, psi2.G * psi1.G,
          psi2.S * psi1.S};
}

Isomorphism inverse(const Isomorphism& psi) {
  const Eigen::MatrixXd P_inv = invert_lifted(psi.P, "P");
  const Eigen::MatrixXd G_inv = invert_square(psi.G, "G");
  return {P_inv, -(G_inv * psi.F * P_inv), G_inv, invert_lifted(psi.S, "S")};
}

SystemMatrices act_on_matrices(const Isomorphism& psi, const Eigen::MatrixXd& A,
                               const Eigen::MatrixXd& B, const Eigen::MatrixXd& C) {
  if (psi.P.rows() != A.rows() || psi.G.rows() != B.cols() || psi.S.rows() != C.rows() ||
      psi.F.cols() != A.cols()) {
    throw Error("dims", "isomorphism does not match system dimensions");
  }
  const Eigen::MatrixXd P_inv = invert_lifted(psi.P, "P");
  const Eigen::MatrixXd G_inv = invert_square(psi.G, "G");
  SystemMatrices out;
  out.A = psi.P * (A - B * (G_inv * psi.F)) * P_inv;
  out.B = psi.P * B * G_inv;
  out.C = psi.S * C * P_inv;
  return out;
}

LiftedSystem act_on_system(const Isomorphism& psi, const LiftedSystem& sys) {
  auto mats = act_on_matrices(psi, sys.A(), sys.B(), sys.C());
  return LiftedSystem::from_lifted(std::move(mats.A), std::move(mats.B), std::move(mats.C));
}

PointImage act_on_point(const Isomorphism& psi, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& u, const Eigen::VectorXd& y) {
  if (x.size() != psi.P.cols() || u.size() != psi.G.cols() || y.size() != psi.S.cols()) {
    throw Error("dims", "point does not match isomorphism dimensions");
  }
  return {psi.P * x, psi.F * x + psi.G * u, psi.S * y};
}

StabilizerSubspace stabilizer_subspace(const LiftedSystem& sys, bool with_output,
                                       double rank_eps) {
  const int size = sys.n() + 1;
  const int m = sys.m();
  const int q = sys.p() + 1;
  const Eigen::MatrixXd& A = sys.A();
  const Eigen::MatrixXd& B = sys.B();
  const Eigen::MatrixXd& C = sys.C();
  const Eigen::MatrixXd proj_b =
      Eigen::MatrixXd::Identity(size, size) - B * linalg::pinv(B);
  const Eigen::MatrixXd proj_c =
      Eigen::MatrixXd::Identity(size, size) - linalg::pinv(C) * C;

  const int unknowns = (size - 1) * size;  // free rows of a lifted tangent map
  const int eq_rows = size * size + size * m + (with_output ? q * size : 0);
  Eigen::MatrixXd op(eq_rows, unknowns);
  for (int i = 0; i + 1 < size; ++i) {
    for (int j = 0; j < size; ++j) {
      Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(size, size);
      Q(i, j) = 1.0;
      Eigen::VectorXd col(eq_rows);
      const Eigen::MatrixXd r1 = proj_b * (Q * A - A * Q);
      const Eigen::MatrixXd r2 = proj_b * Q * B;
      col.head(size * size) = r1.reshaped();
      col.segment(size * size, size * m) = r2.reshaped();
      if (with_output) col.tail(q * size) = (C * Q * proj_c).reshaped();
      op.col(i * size + j) = col;
    }
  }
  double scale = A.norm() + B.norm();
  if (with_output) scale += C.norm();
  const Eigen::MatrixXd kernel = linalg::null_space(op, scale, rank_eps);

  StabilizerSubspace out;
  out.includes_output_condition = with_output;
  out.dim = static_cast<int>(kernel.cols());
  for (Eigen::Index k = 0; k < kernel.cols(); ++k) {
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(size, size);
    for (int i = 0; i + 1 < size; ++i) {
      for (int j = 0; j < size; ++j) Q(i, j) = kernel(i * size + j, k);
    }
    out.basis.push_back(std::move(Q));
  }
  return out;
}

Isomorphism symmetry_from_state_map(const LiftedSystem& sys, const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd B_pinv = linalg::pinv(sys.B());
  Isomorphism psi;
  psi.P = P;
  psi.G = B_pinv * P * sys.B();
  psi.F = B_pinv * (P * sys.A() - sys.A() * P);
  psi.S = sys.C() * P * linalg::pinv(sys.C());
  const Eigen::Index last = psi.S.rows() - 1;
  Eigen::RowVectorXd unit = Eigen::RowVectorXd::Zero(psi.S.cols());
  unit(unit.size() - 1) = 1.0;
  if ((psi.S.row(last) - unit).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error("key-structure", "output map of the symmetry is not lifted affine");
  }
  psi.S.row(last) = unit;
  return psi;
}

double fixed_point_residual(const Isomorphism& psi, const LiftedSystem& sys) {
  const auto mats = act_on_matrices(psi, sys.A(), sys.B(), sys.C());
  return std::max({linalg::max_abs_diff(mats.A, sys.A()), linalg::max_abs_diff(mats.B, sys.B()),
                   linalg::max_abs_diff(mats.C, sys.C())});
}

SampledKey sample_isomorphism(int scenario, const LiftedSystem& sys, std::uint64_t seed) {
  if (scenario < 1 || scenario > 3) throw Error("scenario", "scenario must be 1, 2 or 3");
  Rng rng(seed);
  const int n = sys.n();
  const int m = sys.m();
  const int p = sys.p();
  SampledKey key;
  key.scenario = scenario;
  key.seed = seed;

  if (scenario == 1) {
    key.psi.P = random_lifted_map(rng, n);
    key.psi.F = uniform_matrix(rng, m, n + 1);
    key.psi.G = random_well_conditioned(rng, m, kSampleMaxCondition, kSampleBudget);
    key.psi.S = random_lifted_map(rng, p);
    return key;
  }

  const StabilizerSubspace space = stabilizer_subspace(sys, /*with_output=*/true);
  key.stabilizer_dim = space.dim;
  Isomorphism symmetry = identity_isomorphism(n, m, p);
  if (space.dim > 0) {
    SymmetryDraw draw = draw_symmetry(rng, sys, space);
    symmetry = std::move(draw.psi);
    key.fixed_point_residual = draw.residual;
  }

  if (scenario == 3) {
    key.trivial_stabilizer = space.dim == 0;
    key.psi = std::move(symmetry);
    return key;
  }

  // Change of state coordinates applied after the symmetry, so the encoded
  // system keeps B~ = P B and C~ = C P^-1.
  Isomorphism coordinates = identity_isomorphism(n, m, p);
  coordinates.P = random_lifted_map(rng, n);
  key.psi = compose(coordinates, symmetry);
  return key;
}

}  // namespace cloak
