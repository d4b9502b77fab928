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

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cloak/sysmodel.hpp"

namespace cloak {

// Control-system isomorphism in lifted form:
//   P  (n+1)x(n+1)  affine change of state coordinates
//   F  m x (n+1)    affine state feedback (last column is the constant)
//   G  m x m        linear change of input coordinates
//   S  (p+1)x(p+1)  affine change of output coordinates
struct Isomorphism {
  Eigen::MatrixXd P;
  Eigen::MatrixXd F;
  Eigen::MatrixXd G;
  Eigen::MatrixXd S;

  int n() const { return static_cast<int>(P.rows()) - 1; }
  int m() const { return static_cast<int>(G.rows()); }
  int p() const { return static_cast<int>(S.rows()) - 1; }
};

Isomorphism identity_isomorphism(int n, int m, int p);

/// psi2 o psi1 = (P2 P1, G2 F1 + F2 P1, G2 G1, S2 S1)
Isomorphism compose(const Isomorphism& psi2, const Isomorphism& psi1);

/// (P^-1, -G^-1 F P^-1, G^-1, S^-1); throws Error("key-invertibility").
Isomorphism inverse(const Isomorphism& psi);

// Shape and lifted-structure check; throws Error("dims") or
// Error("key-structure").
void validate_isomorphism(const Isomorphism& psi);
void validate_isomorphism(const Isomorphism& psi, int n, int m, int p);

// Largest condition number among P, G and S.
double key_condition(const Isomorphism& psi);

/// (P (A - B G^-1 F) P^-1, P B G^-1, S C P^-1)
LiftedSystem act_on_system(const Isomorphism& psi, const LiftedSystem& sys);

// Raw form of act_on_system, without re-validating the result as a plant.
struct SystemMatrices {
  Eigen::MatrixXd A, B, C;
};
SystemMatrices act_on_matrices(const Isomorphism& psi, const Eigen::MatrixXd& A,
                               const Eigen::MatrixXd& B, const Eigen::MatrixXd& C);

struct PointImage {
  Eigen::VectorXd x, u, y;
};

/// x~ = P x, u~ = F x + G u, y~ = S y
PointImage act_on_point(const Isomorphism& psi, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& u, const Eigen::VectorXd& y);

// Linear space of state maps Q (P = I + Q) satisfying the stabilizer equations
//   (I - B B+)(Q A - A Q) = 0,  (I - B B+) Q B = 0
// and, when includes_output_condition,  C Q (I - C+ C) = 0.
// Basis elements are lifted ((n+1)x(n+1), last row zero) and orthonormal in the
// Frobenius inner product.
struct StabilizerSubspace {
  std::vector<Eigen::MatrixXd> basis;
  int dim = 0;
  bool includes_output_condition = false;
};

StabilizerSubspace stabilizer_subspace(const LiftedSystem& sys, bool with_output,
                                       double rank_eps = 1e-10);

// Completes a state map P of a symmetry with G = B+ P B, F = B+ (P A - A P),
// S = C P C+. The last row of S is snapped to (0,...,0,1) when it is within
// 1e-12 of it; otherwise Error("key-structure").
Isomorphism symmetry_from_state_map(const LiftedSystem& sys, const Eigen::MatrixXd& P);

// Max-abs entry distance between act_on_system(psi, sys) and sys.
double fixed_point_residual(const Isomorphism& psi, const LiftedSystem& sys);

inline constexpr double kSampleMaxCondition = 1e4;
inline constexpr double kSymmetryMaxCondition = 1e8;
inline constexpr double kSymmetryResidualTol = 1e-8;
inline constexpr int kSampleBudget = 100;

struct SampledKey {
  Isomorphism psi;
  int scenario = 1;
  std::uint64_t seed = 0;
  // Scenario 3 only: the stabilizer is trivial and psi is the identity.
  bool trivial_stabilizer = false;
  // Max-abs distance between psi_* sys and sys restricted to the part the
  // scenario must preserve (full system for scenario 3, 0 otherwise).
  double fixed_point_residual = 0.0;
  int stabilizer_dim = 0;
};

// Scenario 1: P, S random lifted affine, F random affine, G random invertible.
// Scenario 2: (P, 0, I, I) composed after a random symmetry of sys.
// Scenario 3: a random symmetry of sys.
// Entries are i.i.d. uniform on [-1, 1]; deterministic in `seed`.
SampledKey sample_isomorphism(int scenario, const LiftedSystem& sys, std::uint64_t seed);

}  // namespace cloak
