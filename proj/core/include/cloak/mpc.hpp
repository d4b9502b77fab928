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

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cloak/objective.hpp"
#include "cloak/qp.hpp"
#include "cloak/sysmodel.hpp"

namespace cloak {

// States are eliminated through x_i = A^i x0 + sum_{j<i} A^{i-1-j} B u_j, the
// decision vector is U = (u_0, ..., u_N) and constraints stack D eta_i <= 0
// for i = 0..N. objective(U) equals eval_cost on the simulated trajectory.
CondensedQP condense(const LiftedSystem& sys, const ControlObjective& obj,
                     const Eigen::VectorXd& x0);

// The same problem in the variables v_i = u_i - K x_i, where K is a state
// feedback on the lifted state. A stabilizing K keeps the condensed matrices
// well conditioned for unstable plants. Inputs are recovered as U = T V + t.
struct PrestabilizedQP {
  CondensedQP qp;  // decision vector V = (v_0, ..., v_N)
  Eigen::MatrixXd T;
  Eigen::VectorXd t;
};
PrestabilizedQP condense_prestabilized(const LiftedSystem& sys, const ControlObjective& obj,
                                       const Eigen::VectorXd& x0, const Eigen::MatrixXd& K);

// Infinite-horizon LQR gain u = K x of the bare pair, weighted by the state and
// input blocks of M, with a zero column for the lift coordinate. Returns zero
// if the Riccati iteration does not settle.
Eigen::MatrixXd stabilizing_gain(const LiftedSystem& sys, const ControlObjective& obj);

// Simulated lifted trajectory x_0..x_{N} for U = (u_0..u_N).
std::vector<Eigen::VectorXd> simulate(const LiftedSystem& sys, const Eigen::VectorXd& x0,
                                      const std::vector<Eigen::VectorXd>& u);

std::vector<Eigen::VectorXd> split_inputs(const Eigen::VectorXd& U, int m);
Eigen::VectorXd stack_inputs(const std::vector<Eigen::VectorXd>& u);

// Used to pick a state when the output window does not determine it: the
// estimate minimizes (x - mean)^T weight (x - mean) over all consistent states.
struct EstimatorPrior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd weight;
};

struct StateEstimate {
  Eigen::VectorXd x;        // current lifted state
  bool flagged = false;     // window shorter than n+1 outputs
  bool determined = true;   // window outputs pin the state uniquely
};

// Deadbeat reconstruction from the last L lifted outputs y_{k-L+1..k} and the
// L-1 inputs applied between them. Exact for L >= n+1 in the noiseless
// setting. Shorter windows are flagged; if the state is then undetermined the
// prior (or, without one, the minimum-norm solution) resolves it.
StateEstimate deadbeat_estimate(const LiftedSystem& sys,
                                const std::vector<Eigen::VectorXd>& y_window,
                                const std::vector<Eigen::VectorXd>& u_window,
                                const std::optional<EstimatorPrior>& prior = std::nullopt);

// Receding-horizon MPC driven by output measurements. Each step appends the
// measurement, estimates the current state from the last n+1 outputs, solves
// the pre-stabilized condensed QP and returns the first input block.
class OutputFeedbackMpc {
 public:
  OutputFeedbackMpc(LiftedSystem sys, ControlObjective obj, SolverConfig cfg = {});

  struct Step {
    Eigen::VectorXd u;
    StateEstimate estimate;
    QpResult qp;
  };

  Step step(const Eigen::VectorXd& y);

  const LiftedSystem& system() const { return sys_; }
  const ControlObjective& objective() const { return obj_; }

 private:
  LiftedSystem sys_;
  ControlObjective obj_;
  SolverConfig cfg_;
  EstimatorPrior prior_;
  Eigen::MatrixXd gain_;
  std::vector<Eigen::VectorXd> y_hist_;
  std::vector<Eigen::VectorXd> u_hist_;
};

}  // namespace cloak
