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
#include "cloak/objective.hpp"
#include "cloak/random.hpp"
#include "test_support.hpp"

namespace cloak {
namespace {

struct Data {
  LiftedSystem sys;
  ControlObjective obj;
  std::vector<Eigen::VectorXd> x, u;
};

Data random_data(Rng& rng, int n, int m, int horizon) {
  const LiftedSystem sys = lift_system(random_plant(rng, n, m, 1));
  Eigen::MatrixXd D(2 * (n + m), n + m + 1);
  D << make_box_state_constraints(-Eigen::VectorXd::Ones(n), Eigen::VectorXd::Ones(n), m),
      make_box_input_constraints(-Eigen::VectorXd::Ones(m), Eigen::VectorXd::Ones(m), n);
  ControlObjective obj = make_tracking_objective(testing::random_spd(rng, n + m + 1), D,
                                                 uniform_vector(rng, n), uniform_vector(rng, m),
                                                 horizon);
  for (int i = 0; i <= horizon; ++i) {
    obj.x_ref[i] = testing::random_lifted_state(rng, n);
    obj.u_ref[i] = uniform_vector(rng, m);
  }
  Data d{sys, obj, {}, {}};
  for (int i = 0; i <= horizon; ++i) {
    d.x.push_back(testing::random_lifted_state(rng, n, 2.0));
    d.u.push_back(uniform_vector(rng, m, -2.0, 2.0));
  }
  return d;
}

double naive_cost(const ControlObjective& obj, const std::vector<Eigen::VectorXd>& x,
                  const std::vector<Eigen::VectorXd>& u) {
  const Eigen::Index nx = x[0].size();
  const Eigen::Index m = u[0].size();
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> d(static_cast<std::size_t>(nx + m));
    for (Eigen::Index a = 0; a < nx; ++a) d[a] = x[i](a) - obj.x_ref[i](a);
    for (Eigen::Index a = 0; a < m; ++a) d[nx + a] = u[i](a) - obj.u_ref[i](a);
    for (Eigen::Index a = 0; a < nx + m; ++a) {
      for (Eigen::Index b = 0; b < nx + m; ++b) total += d[a] * obj.M(a, b) * d[b];
    }
  }
  return total;
}

TEST(EvalCost, ZeroAtReference) {
  Rng rng(41);
  const Data d = random_data(rng, 3, 2, 4);
  EXPECT_EQ(eval_cost(d.obj, d.obj.x_ref, d.obj.u_ref), 0.0);
}

TEST(EvalCost, UnitDeviation) {
  ControlObjective obj = make_tracking_objective(
      Eigen::MatrixXd::Identity(4, 4), Eigen::MatrixXd(0, 4), Eigen::VectorXd::Zero(2),
      Eigen::VectorXd::Zero(1), 3);
  std::vector<Eigen::VectorXd> x = obj.x_ref;
  x[0](1) = 1.0;
  EXPECT_DOUBLE_EQ(eval_cost(obj, x, obj.u_ref), 1.0);
  std::vector<Eigen::VectorXd> u = obj.u_ref;
  u[2](0) = -1.0;
  EXPECT_DOUBLE_EQ(eval_cost(obj, obj.x_ref, u), 1.0);
}

TEST(EvalCost, MatchesTermByTermSum) {
  Rng rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    const Data d = random_data(rng, 1 + trial % 4, 1 + trial % 2, 1 + trial % 6);
    const double expected = naive_cost(d.obj, d.x, d.u);
    EXPECT_NEAR(eval_cost(d.obj, d.x, d.u), expected, 1e-10 * std::max(1.0, expected));
    EXPECT_GE(eval_cost(d.obj, d.x, d.u), 0.0);
  }
}

TEST(EvalCost, RejectsWrongLength) {
  Rng rng(43);
  Data d = random_data(rng, 2, 1, 3);
  d.x.pop_back();
  EXPECT_EQ(testing::error_check([&] { eval_cost(d.obj, d.x, d.u); }), "dims");
}

TEST(TransformObjective, IdentityLeavesObjectiveUnchanged) {
  Rng rng(44);
  const Data d = random_data(rng, 3, 1, 4);
  const ControlObjective t = transform_objective(identity_isomorphism(3, 1, 1), d.obj);
  EXPECT_LE(linalg::max_abs_diff(t.M, d.obj.M), 1e-15);
  EXPECT_LE(linalg::max_abs_diff(t.D, d.obj.D), 1e-15);
  for (int i = 0; i <= 4; ++i) {
    EXPECT_EQ(t.x_ref[i], d.obj.x_ref[i]);
    EXPECT_EQ(t.u_ref[i], d.obj.u_ref[i]);
  }
}

TEST(TransformObjective, CostInvariance) {
  Rng rng(45);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 4, m = 1 + trial % 2;
    const Data d = random_data(rng, n, m, 1 + trial % 5);
    const Isomorphism psi = sample_isomorphism(1, d.sys, trial).psi;
    const ControlObjective t = transform_objective(psi, d.obj);
    std::vector<Eigen::VectorXd> tx, tu;
    for (std::size_t i = 0; i < d.x.size(); ++i) {
      tx.push_back(psi.P * d.x[i]);
      tu.push_back(psi.F * d.x[i] + psi.G * d.u[i]);
    }
    const double j = eval_cost(d.obj, d.x, d.u);
    EXPECT_NEAR(eval_cost(t, tx, tu), j, 1e-8 * std::max(1.0, j));
  }
}

TEST(TransformObjective, ConstraintSignsAgree) {
  Rng rng(46);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 4, m = 1 + trial % 2;
    const Data d = random_data(rng, n, m, 2);
    const Isomorphism psi = sample_isomorphism(1, d.sys, trial).psi;
    const ControlObjective t = transform_objective(psi, d.obj);
    const Eigen::MatrixXd L = eta_map(psi);
    for (int k = 0; k < 50; ++k) {
      Eigen::VectorXd eta(n + m + 1);
      eta << testing::random_lifted_state(rng, n, 1.5), uniform_vector(rng, m);
      const Eigen::VectorXd g = d.obj.D * eta;
      const Eigen::VectorXd tg = t.D * (L * eta);
      for (Eigen::Index r = 0; r < g.size(); ++r) {
        if (std::abs(g(r)) > 1e-10) EXPECT_EQ(g(r) <= 0.0, tg(r) <= 0.0);
      }
    }
  }
}

TEST(TransformObjective, CompositionProperty) {
  Rng rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    const Data d = random_data(rng, 2 + trial % 3, 1 + trial % 2, 3);
    const Isomorphism a = sample_isomorphism(1, d.sys, 2 * trial).psi;
    const Isomorphism b = sample_isomorphism(1, d.sys, 2 * trial + 1).psi;
    const ControlObjective two = transform_objective(b, transform_objective(a, d.obj));
    const ControlObjective one = transform_objective(compose(b, a), d.obj);
    const double scale = std::max(1.0, one.M.cwiseAbs().maxCoeff());
    EXPECT_LE(linalg::max_abs_diff(two.M, one.M), 1e-8 * scale);
    EXPECT_LE(linalg::max_abs_diff(two.D, one.D), 1e-8 * std::max(1.0, one.D.cwiseAbs().maxCoeff()));
    for (std::size_t i = 0; i < one.x_ref.size(); ++i) {
      EXPECT_LE((two.x_ref[i] - one.x_ref[i]).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_LE((two.u_ref[i] - one.u_ref[i]).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(TransformObjective, PreservesPositiveDefiniteness) {
  Rng rng(48);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 4, m = 1 + trial % 2;
    const Data d = random_data(rng, n, m, 2);
    const ControlObjective t =
        transform_objective(sample_isomorphism(1, d.sys, trial).psi, d.obj);
    EXPECT_EQ(t.M, t.M.transpose());
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(t.M).eigenvalues().minCoeff(), 0.0);
    EXPECT_NO_THROW(validate_objective(t, n, m));
  }
}

TEST(EtaMap, InverseIsExact) {
  Rng rng(49);
  const LiftedSystem sys = lift_system(random_plant(rng, 3, 2, 1));
  const Isomorphism psi = sample_isomorphism(1, sys, 3).psi;
  const Eigen::MatrixXd L = eta_map(psi);
  EXPECT_LE(linalg::max_abs_diff(L * eta_map_inverse(psi), Eigen::MatrixXd::Identity(6, 6)),
            1e-10);
  EXPECT_TRUE(L.topRightCorner(4, 2).isZero(0.0));
}

TEST(StateWeight, TransformsByCongruence) {
  Rng rng(50);
  const Data d = random_data(rng, 3, 2, 2);
  const Isomorphism psi = sample_isomorphism(1, d.sys, 4).psi;
  const Eigen::MatrixXd Pi = psi.P.inverse();
  const Eigen::MatrixXd expected = Pi.transpose() * state_weight(d.obj) * Pi;
  const Eigen::MatrixXd got = state_weight(transform_objective(psi, d.obj));
  EXPECT_LE(linalg::max_abs_diff(got, expected), 1e-8 * expected.cwiseAbs().maxCoeff());
}

TEST(BoxConstraints, UnitBoxInTwoStates) {
  const Eigen::MatrixXd D =
      make_box_state_constraints(-Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2), 1);
  EXPECT_EQ(D.rows(), 4);
  EXPECT_EQ(D.cols(), 4);
  EXPECT_EQ(linalg::numerical_rank(D.leftCols(3)), 3);
  EXPECT_TRUE(D.col(3).isZero(0.0));

  Eigen::VectorXd inside(4);
  inside << 0, 0, 1, 0;
  EXPECT_TRUE(((D * inside).array() < 0.0).all());
  Eigen::VectorXd outside(4);
  outside << 2, 0, 1, 0;
  EXPECT_EQ(((D * outside).array() > 0.0).count(), 1);
}

TEST(BoxConstraints, DegenerateBoundsRejected) {
  EXPECT_EQ(testing::error_check([] {
              make_box_state_constraints(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2), 1);
            }),
            "bounds");
  EXPECT_EQ(testing::error_check([] {
              make_box_input_constraints(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1), 2);
            }),
            "bounds");
}

TEST(BoxConstraints, InputBoxActsOnInputsOnly) {
  const Eigen::MatrixXd D =
      make_box_input_constraints(-Eigen::VectorXd::Ones(2), 2 * Eigen::VectorXd::Ones(2), 3);
  EXPECT_EQ(D.rows(), 4);
  EXPECT_EQ(D.cols(), 6);
  EXPECT_TRUE(D.leftCols(3).isZero(0.0));
  Eigen::VectorXd eta(6);
  eta << 9, 9, 9, 1, 1.5, 0;
  EXPECT_TRUE(((D * eta).array() <= 0.0).all());
  eta(5) = -1.5;
  EXPECT_EQ(((D * eta).array() > 0.0).count(), 1);
}

TEST(ValidateObjective, NamesTheProblem) {
  Rng rng(51);
  const Data d = random_data(rng, 2, 1, 3);
  EXPECT_NO_THROW(validate_objective(d.obj, 2, 1));
  EXPECT_EQ(testing::error_check([&] { validate_objective(d.obj, 3, 1); }), "dims");

  ControlObjective bad = d.obj;
  bad.M(0, 1) += 1e-6;
  EXPECT_EQ(testing::error_check([&] { validate_objective(bad, 2, 1); }), "objective");

  bad = d.obj;
  bad.M = Eigen::MatrixXd::Identity(4, 4);
  bad.M(3, 3) = -1.0;
  EXPECT_EQ(testing::error_check([&] { validate_objective(bad, 2, 1); }), "objective");

  bad = d.obj;
  bad.x_ref[1](2) = 0.5;
  EXPECT_EQ(testing::error_check([&] { validate_objective(bad, 2, 1); }), "objective");

  bad = d.obj;
  bad.D.col(3).setZero();
  EXPECT_EQ(testing::error_check([&] { validate_objective(bad, 2, 1); }), "objective");

  bad = d.obj;
  bad.u_ref.pop_back();
  EXPECT_EQ(testing::error_check([&] { validate_objective(bad, 2, 1); }), "objective");
}

}  // namespace
}  // namespace cloak
