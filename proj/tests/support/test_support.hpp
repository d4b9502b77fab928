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
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cloak/group.hpp"
#include "cloak/objective.hpp"
#include "cloak/protocol.hpp"
#include "cloak/qp.hpp"
#include "cloak/random.hpp"
#include "cloak/sysmodel.hpp"

namespace cloak::testing {

/// R^T R + shift I with R uniform on [-1, 1].
Eigen::MatrixXd random_spd(Rng& rng, int size, double shift = 0.5);

Eigen::VectorXd random_lifted_state(Rng& rng, int n, double scale = 1.0);

std::vector<Eigen::VectorXd> random_inputs(Rng& rng, int m, int count, double scale = 1.0);

// Constrained tracking problem whose box constraints are built around a
// simulated trajectory, so the QP from x0 is feasible.
struct InstanceOptions {
  int n = 2, m = 1, p = 1;
  int horizon = 5;
  double spectral_radius = 0.9;
  double margin = 0.2;       // relative box slack around the trajectory
  bool input_box = true;
  bool state_box = true;
};
ProblemInstance random_instance(Rng& rng, const InstanceOptions& options);

// Stable plant with wide state boxes and inputs in [-1, 1]; suited to closed
// loop runs from x0 near the origin.
ProblemInstance random_closed_loop_instance(Rng& rng, int n, int m, int p, int horizon);

// Exhaustive active-set enumeration: solves the equality-constrained QP for
// every subset of constraints and keeps the best feasible point.
struct OracleSolution {
  Eigen::VectorXd U;
  double objective = 0.0;
  bool feasible = false;
};
OracleSolution enumerate_active_sets(const CondensedQP& qp, double feas_tol = 1e-9);

// Tag of the cloak::Error thrown by `body`, or "" if nothing was thrown.
std::string error_check(const std::function<void()>& body);

/// Integer partitions of `total`, each listed in non-increasing order.
std::vector<std::vector<int>> partitions(int total);

}  // namespace cloak::testing
