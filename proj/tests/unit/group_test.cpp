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


#include <gtest/gtest.h>

#include <algorithm>

#include "cloak/group.hpp"
#include "cloak/linalg.hpp"
#include "cloak/privacy.hpp"
#include "cloak/random.hpp"
#include "test_support.hpp"

namespace cloak {
namespace {

using linalg::max_abs_diff;

double max_abs_diff(const Isomorphism& a, const Isomorphism& b) {
  return std::max({linalg::max_abs_diff(a.P, b.P), linalg::max_abs_diff(a.F, b.F),
                   linalg::max_abs_diff(a.G, b.G), linalg::max_abs_diff(a.S, b.S)});
}

double scale_of(const Eigen::MatrixXd& m) { return std::max(1.0, m.cwiseAbs().maxCoeff()); }

struct RandomKeys {
  LiftedSystem sys;
  std::vector<Isomorphism> keys;
};

RandomKeys random_keys(std::uint64_t seed, int count, int n = 3, int m = 2, int p = 2) {
  Rng rng(seed);
  RandomKeys out{lift_system(random_plant(rng, n, m, p)), {}};
  for (int i = 0; i < count; ++i) {
    out.keys.push_back(sample_isomorphism(1, out.sys, seed * 1000 + i).psi);
  }
  return out;
}

TEST(Isomorphism, IdentityIsNeutral) {
  const RandomKeys r = random_keys(21, 20);
  const Isomorphism e = identity_isomorphism(3, 2, 2);
  for (const Isomorphism& psi : r.keys) {
    EXPECT_LE(max_abs_diff(compose(psi, e), psi), 1e-12);
    EXPECT_LE(max_abs_diff(compose(e, psi), psi), 1e-12);
  }
}

TEST(Isomorphism, InverseCancels) {
  const RandomKeys r = random_keys(22, 20);
  const Isomorphism e = identity_isomorphism(3, 2, 2);
  for (const Isomorphism& psi : r.keys) {
    const double tol = 1e-12 * key_condition(psi);
    EXPECT_LE(max_abs_diff(compose(inverse(psi), psi), e), tol);
    EXPECT_LE(max_abs_diff(compose(psi, inverse(psi)), e), tol);
  }
}

TEST(Isomorphism, InverseKeepsLiftedStructure) {
  const RandomKeys r = random_keys(23, 10);
  for (const Isomorphism& psi : r.keys) {
    const Isomorphism inv = inverse(psi);
    EXPECT_TRUE(linalg::has_lifted_last_row(inv.P));
    EXPECT_TRUE(linalg::has_lifted_last_row(inv.S));
  }
}

TEST(Isomorphism, Associativity) {
  const RandomKeys r = random_keys(24, 60);
  for (int i = 0; i < 20; ++i) {
    const Isomorphism& a = r.keys[3 * i];
    const Isomorphism& b = r.keys[3 * i + 1];
    const Isomorphism& c = r.keys[3 * i + 2];
    EXPECT_LE(max_abs_diff(compose(c, compose(b, a)), compose(compose(c, b), a)), 1e-8);
  }
}

TEST(Isomorphism, ComposeBlockAlgebra) {
  const RandomKeys r = random_keys(25, 2);
  const Isomorphism& p2 = r.keys[0];
  const Isomorphism& p1 = r.keys[1];
  const Isomorphism c = compose(p2, p1);
  EXPECT_LE(max_abs_diff(c.P, p2.P * p1.P), 1e-14);
  EXPECT_LE(max_abs_diff(c.F, p2.G * p1.F + p2.F * p1.P), 1e-14);
  EXPECT_LE(max_abs_diff(c.G, p2.G * p1.G), 1e-14);
  EXPECT_LE(max_abs_diff(c.S, p2.S * p1.S), 1e-14);
}

TEST(Isomorphism, SingularKeyIsRejected) {
  Isomorphism psi = identity_isomorphism(2, 1, 1);
  psi.G(0, 0) = 0.0;
  EXPECT_EQ(testing::error_check([&] { inverse(psi); }), "key-invertibility");
  psi = identity_isomorphism(2, 1, 1);
  psi.P.row(1).setZero();
  EXPECT_EQ(testing::error_check([&] { inverse(psi); }), "key-invertibility");
}

TEST(Isomorphism, ValidationNamesTheCheck) {
  Isomorphism psi = identity_isomorphism(2, 1, 1);
  psi.P(2, 0) = 0.1;
  EXPECT_EQ(testing::error_check([&] { validate_isomorphism(psi); }), "key-structure");
  psi = identity_isomorphism(2, 1, 1);
  EXPECT_EQ(testing::error_check([&] { validate_isomorphism(psi, 3, 1, 1); }), "dims");
  psi.F = Eigen::MatrixXd::Zero(1, 2);
  EXPECT_EQ(testing::error_check([&] { validate_isomorphism(psi); }), "dims");
}

TEST(ActOnSystem, IdentityLeavesSystemUnchanged) {
  Rng rng(26);
  const LiftedSystem sys = lift_system(random_plant(rng, 3, 1, 2));
  const LiftedSystem same = act_on_system(identity_isomorphism(3, 1, 2), sys);
  EXPECT_EQ(same.A(), sys.A());
  EXPECT_EQ(same.B(), sys.B());
  EXPECT_EQ(same.C(), sys.C());
}

TEST(ActOnSystem, ActionAxiom) {
  for (std::uint64_t seed = 30; seed < 50; ++seed) {
    const RandomKeys r = random_keys(seed, 2, 1 + seed % 4, 1 + seed % 2, 1);
    const LiftedSystem two_step = act_on_system(r.keys[1], act_on_system(r.keys[0], r.sys));
    const LiftedSystem one_step = act_on_system(compose(r.keys[1], r.keys[0]), r.sys);
    EXPECT_LE(max_abs_diff(two_step.A(), one_step.A()), 1e-8 * scale_of(one_step.A()));
    EXPECT_LE(max_abs_diff(two_step.B(), one_step.B()), 1e-8 * scale_of(one_step.B()));
    EXPECT_LE(max_abs_diff(two_step.C(), one_step.C()), 1e-8 * scale_of(one_step.C()));
  }
}

TEST(ActOnSystem, ExplicitFormula) {
  const RandomKeys r = random_keys(27, 1);
  const Isomorphism& psi = r.keys[0];
  const Eigen::MatrixXd Pi = psi.P.inverse();
  const Eigen::MatrixXd Gi = psi.G.inverse();
  const LiftedSystem t = act_on_system(psi, r.sys);
  EXPECT_LE(max_abs_diff(t.A(), psi.P * (r.sys.A() - r.sys.B() * Gi * psi.F) * Pi), 1e-10);
  EXPECT_LE(max_abs_diff(t.B(), psi.P * r.sys.B() * Gi), 1e-10);
  EXPECT_LE(max_abs_diff(t.C(), psi.S * r.sys.C() * Pi), 1e-10);
  EXPECT_TRUE(linalg::has_lifted_last_row(t.A()));
  EXPECT_TRUE(linalg::has_lifted_last_row(t.C()));
  EXPECT_TRUE(t.B().row(t.n()).isZero(0.0));
}

TEST(ActOnPoint, IdentityAndInverse) {
  const RandomKeys r = random_keys(28, 10);
  Rng rng(28);
  for (const Isomorphism& psi : r.keys) {
    const Eigen::VectorXd x = testing::random_lifted_state(rng, 3);
    const Eigen::VectorXd u = uniform_vector(rng, 2);
    const Eigen::VectorXd y = r.sys.output(x);
    const PointImage same = act_on_point(identity_isomorphism(3, 2, 2), x, u, y);
    EXPECT_EQ(same.x, x);
    EXPECT_EQ(same.u, u);
    EXPECT_EQ(same.y, y);
    const PointImage img = act_on_point(psi, x, u, y);
    const PointImage back = act_on_point(inverse(psi), img.x, img.u, img.y);
    EXPECT_LE((back.x - x).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((back.u - u).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((back.y - y).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ActOnPoint, TrajectoriesMapToTrajectories) {
  for (std::uint64_t seed = 60; seed < 70; ++seed) {
    const RandomKeys r = random_keys(seed, 1, 2 + seed % 3, 1 + seed % 2, 1 + seed % 2);
    const Isomorphism& psi = r.keys[0];
    const LiftedSystem t = act_on_system(psi, r.sys);
    Rng rng(seed);
    Eigen::VectorXd x = testing::random_lifted_state(rng, r.sys.n());
    for (int k = 0; k < 20; ++k) {
      const Eigen::VectorXd u = uniform_vector(rng, r.sys.m());
      const PointImage img = act_on_point(psi, x, u, r.sys.output(x));
      const Eigen::VectorXd next = r.sys.step(x, u);
      const Eigen::VectorXd next_img = psi.P * next;
      const double scale = std::max(1.0, next_img.cwiseAbs().maxCoeff());
      EXPECT_LE((t.step(img.x, img.u) - next_img).cwiseAbs().maxCoeff(), 1e-9 * scale);
      EXPECT_LE((t.output(img.x) - img.y).cwiseAbs().maxCoeff(), 1e-9 * scale);
      x = next;
    }
  }
}

void expect_stabilizer_equations(const LiftedSystem& sys, const StabilizerSubspace& s) {
  const Eigen::MatrixXd& A = sys.A();
  const Eigen::MatrixXd& B = sys.B();
  const Eigen::MatrixXd& C = sys.C();
  const Eigen::Index nx = A.rows();
  const Eigen::MatrixXd proj_b = Eigen::MatrixXd::Identity(nx, nx) - B * linalg::pinv(B);
  const Eigen::MatrixXd proj_c = Eigen::MatrixXd::Identity(nx, nx) - linalg::pinv(C) * C;
  for (std::size_t i = 0; i < s.basis.size(); ++i) {
    const Eigen::MatrixXd& Q = s.basis[i];
    EXPECT_TRUE(Q.row(nx - 1).isZero(0.0));
    EXPECT_LE((proj_b * (Q * A - A * Q)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((proj_b * Q * B).cwiseAbs().maxCoeff(), 1e-9);
    if (s.includes_output_condition) {
      EXPECT_LE((C * Q * proj_c).cwiseAbs().maxCoeff(), 1e-9);
    }
    for (std::size_t j = 0; j < s.basis.size(); ++j) {
      const double inner = (Q.array() * s.basis[j].array()).sum();
      EXPECT_NEAR(inner, i == j ? 1.0 : 0.0, 1e-10);
    }
  }
}

TEST(StabilizerSubspace, BrunovskyDoubleChain) {
  const LiftedSystem sys = lift_system(make_prime({2}));
  const StabilizerSubspace with = stabilizer_subspace(sys, true);
  const StabilizerSubspace without = stabilizer_subspace(sys, false);
  EXPECT_EQ(with.dim, 2);
  EXPECT_EQ(without.dim, 2);
  EXPECT_TRUE(with.includes_output_condition);
  expect_stabilizer_equations(sys, with);
  expect_stabilizer_equations(sys, without);
}

TEST(StabilizerSubspace, MatchesPairFormula) {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + trial % 6;
    const int m = 1 + (trial / 6) % std::min(3, n);
    const BarePlant plant = random_plant(rng, n, m, 1);
    const LiftedSystem sys = lift_system(plant);
    const StabilizerSubspace s = stabilizer_subspace(sys, false);
    EXPECT_EQ(s.dim, dim_pair_formula(plant)) << "n=" << n << " m=" << m;
    expect_stabilizer_equations(sys, s);
  }
}

TEST(StabilizerSubspace, DimensionIsStableAcrossTolerances) {
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const LiftedSystem sys = lift_system(random_plant(rng, 2 + trial % 4, 1 + trial % 2, 1));
    for (bool with_output : {false, true}) {
      const int dim = stabilizer_subspace(sys, with_output, 1e-10).dim;
      EXPECT_EQ(stabilizer_subspace(sys, with_output, 1e-12).dim, dim);
      EXPECT_EQ(stabilizer_subspace(sys, with_output, 1e-8).dim, dim);
    }
  }
}

TEST(StabilizerSubspace, ElementsCompleteToSymmetries) {
  const LiftedSystem sys = lift_system(make_prime({2, 1}));
  const StabilizerSubspace s = stabilizer_subspace(sys, true);
  ASSERT_GT(s.dim, 0);
  for (const Eigen::MatrixXd& Q : s.basis) {
    const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(Q.rows(), Q.cols()) + 0.3 * Q;
    const Isomorphism psi = symmetry_from_state_map(sys, P);
    EXPECT_LE(fixed_point_residual(psi, sys), 1e-10);
  }
}

TEST(SampleIsomorphism, DeterministicPerSeed) {
  Rng rng(33);
  const LiftedSystem sys = lift_system(random_plant(rng, 3, 1, 1));
  for (int scenario = 1; scenario <= 3; ++scenario) {
    const SampledKey a = sample_isomorphism(scenario, sys, 99);
    const SampledKey b = sample_isomorphism(scenario, sys, 99);
    EXPECT_EQ(max_abs_diff(a.psi, b.psi), 0.0);
    const SampledKey c = sample_isomorphism(scenario, sys, 100);
    if (!a.trivial_stabilizer) EXPECT_GT(max_abs_diff(a.psi, c.psi), 0.0);
  }
}

TEST(SampleIsomorphism, ScenarioOnePopulatesEveryParameter) {
  const LiftedSystem sys = lift_system(make_prime({2}));
  const Isomorphism psi = sample_isomorphism(1, sys, 5).psi;
  int free = 0;
  free += static_cast<int>((psi.P.topRows(2).array() != 0.0).count());
  free += static_cast<int>((psi.F.array() != 0.0).count());
  free += static_cast<int>((psi.G.array() != 0.0).count());
  free += static_cast<int>((psi.S.topRows(1).array() != 0.0).count());
  EXPECT_EQ(free, dim_group(2, 1, 1));
  EXPECT_EQ(free, 12);
  EXPECT_LT(key_condition(psi), kSampleMaxCondition);
}

TEST(SampleIsomorphism, ScenarioThreeFixesTheSystem) {
  const LiftedSystem brunovsky = lift_system(make_prime({2}));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SampledKey key = sample_isomorphism(3, brunovsky, seed);
    EXPECT_FALSE(key.trivial_stabilizer);
    EXPECT_EQ(key.stabilizer_dim, 2);
    EXPECT_LE(fixed_point_residual(key.psi, brunovsky), 1e-8);
    EXPECT_LE(key.fixed_point_residual, 1e-8);
    EXPECT_TRUE(linalg::has_lifted_last_row(key.psi.S));
    EXPECT_GT(max_abs_diff(key.psi, identity_isomorphism(2, 1, 1)), 0.0);
  }
}

TEST(SampleIsomorphism, ScenarioThreeOnRandomSystems) {
  Rng rng(34);
  for (int trial = 0; trial < 20; ++trial) {
    const LiftedSystem sys =
        lift_system(random_plant(rng, 2 + trial % 3, 1 + trial % 2, 1 + trial % 2));
    const SampledKey key = sample_isomorphism(3, sys, trial);
    EXPECT_LE(fixed_point_residual(key.psi, sys), 1e-8);
  }
}

// The transformed system of a scenario-2 key is a pure state-coordinate change
// of the original: recover P from the lifted observability matrices and check
// A~ = P A P^-1, B~ = P B, C~ = C P^-1.
TEST(SampleIsomorphism, ScenarioTwoIsAStateCoordinateChange) {
  Rng rng(35);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 3;
    const LiftedSystem sys = lift_system(random_plant(rng, n, 1 + trial % 2, 1 + trial % 2));
    const SampledKey key = sample_isomorphism(2, sys, trial);
    const LiftedSystem t = act_on_system(key.psi, sys);
    const auto observability = [n](const LiftedSystem& s) {
      Eigen::MatrixXd O((s.p() + 1) * (n + 1), n + 1);
      Eigen::MatrixXd block = s.C();
      for (int k = 0; k <= n; ++k) {
        O.middleRows(k * (s.p() + 1), s.p() + 1) = block;
        block = block * s.A();
      }
      return O;
    };
    const Eigen::MatrixXd P_inv = linalg::pinv(observability(sys)) * observability(t);
    const Eigen::MatrixXd P = P_inv.inverse();
    const double tol = 1e-8 * std::max(1.0, linalg::condition_number(P));
    EXPECT_LE(max_abs_diff(t.A(), P * sys.A() * P_inv), tol);
    EXPECT_LE(max_abs_diff(t.B(), P * sys.B()), tol);
    EXPECT_LE(max_abs_diff(t.C(), sys.C() * P_inv), tol);
  }
}

// Dilation about an equilibrium (x_e, u_e) fixes every affine plant, and so do
// shifts along the m-dimensional set of equilibria; the stabilizer of a valid
// system is therefore never smaller than m + 1.
Isomorphism dilation(const BarePlant& plant, double alpha) {
  const int n = plant.n(), m = plant.m(), p = plant.p();
  Eigen::MatrixXd K(n, n + m);
  K << plant.A - Eigen::MatrixXd::Identity(n, n), plant.B;
  const Eigen::VectorXd eq = linalg::pinv(K) * (-plant.c);
  const Eigen::VectorXd x_e = eq.head(n);
  const Eigen::VectorXd u_e = eq.tail(m);
  const Eigen::VectorXd y_e = plant.C * x_e + plant.d;
  Isomorphism psi;
  psi.P = lift_affine(alpha * Eigen::MatrixXd::Identity(n, n), (1.0 - alpha) * x_e);
  psi.F = Eigen::MatrixXd::Zero(m, n + 1);
  psi.F.col(n) = (1.0 - alpha) * u_e;
  psi.G = alpha * Eigen::MatrixXd::Identity(m, m);
  psi.S = lift_affine(alpha * Eigen::MatrixXd::Identity(p, p), (1.0 - alpha) * y_e);
  return psi;
}

TEST(StabilizerProperty, DilationAboutAnEquilibriumIsASymmetry) {
  Rng rng(36);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 4;
    const int m = 1 + trial % std::min(n, 2);
    const int p = 1 + trial % n;
    const BarePlant plant = random_plant(rng, n, m, p);
    const LiftedSystem sys = lift_system(plant);
    EXPECT_LE(fixed_point_residual(dilation(plant, 1.7), sys), 1e-9);
    EXPECT_GE(stabilizer_subspace(sys, true).dim, m + 1);
  }
}

TEST(SampleIsomorphism, ScenarioThreeKeyIsNeverTrivialForValidPlants) {
  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const LiftedSystem sys = lift_system(random_plant(rng, 1 + trial % 4, 1, 1));
    const SampledKey key = sample_isomorphism(3, sys, trial);
    EXPECT_FALSE(key.trivial_stabilizer);
    EXPECT_GE(key.stabilizer_dim, 2);
  }
}

TEST(SampleIsomorphism, RejectsUnknownScenario) {
  const LiftedSystem sys = lift_system(make_prime({2}));
  EXPECT_EQ(testing::error_check([&] { sample_isomorphism(4, sys, 0); }), "scenario");
  EXPECT_EQ(testing::error_check([&] { sample_isomorphism(0, sys, 0); }), "scenario");
}

}  // namespace
}  // namespace cloak
