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

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cloak {

/// Discrete-time affine plant  x+ = A x + B u + c,  y = C x + d.
struct BarePlant {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  Eigen::VectorXd c;
  Eigen::VectorXd d;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int p() const { return static_cast<int>(C.rows()); }
};

// Checks the plant invariants in a fixed order (dims, ker-B, im-C,
// controllability, observability) and throws Error tagged with the first
// failing check.
void validate_plant(const BarePlant& plant);

bool is_controllable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
bool is_observable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C);

/// [[W, v], [0, 1]]
Eigen::MatrixXd lift_affine(const Eigen::MatrixXd& W, const Eigen::VectorXd& v);

/// Appends the constant 1 coordinate to a bare state or output vector.
Eigen::VectorXd lift_point(const Eigen::VectorXd& bare);

// The plant in lifted linear form. A and C carry the affine constants in
// their last column; the last rows of A, B, C are exactly (0,...,0,1), 0 and
// (0,...,0,1).
class LiftedSystem {
 public:
  static LiftedSystem from_plant(const BarePlant& plant);

  // Accepts lifted matrices directly (e.g. a transformed system received by
  // the cloud). The lifted structure must be exact and the embedded bare
  // plant must satisfy validate_plant.
  static LiftedSystem from_lifted(Eigen::MatrixXd A, Eigen::MatrixXd B,
                                  Eigen::MatrixXd C);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  const Eigen::MatrixXd& C() const { return C_; }

  int n() const { return n_; }
  int m() const { return m_; }
  int p() const { return p_; }

  BarePlant bare() const;

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    return A_ * x + B_ * u;
  }
  Eigen::VectorXd output(const Eigen::VectorXd& x) const { return C_ * x; }

 private:
  LiftedSystem(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C);

  Eigen::MatrixXd A_;
  Eigen::MatrixXd B_;
  Eigen::MatrixXd C_;
  int n_ = 0;
  int m_ = 0;
  int p_ = 0;
};

inline LiftedSystem lift_system(const BarePlant& plant) {
  return LiftedSystem::from_plant(plant);
}

struct StructureReport {
  // r_1 = rank B, r_i = rank S_{i-1} - rank S_{i-2}, S_j = [B, AB, ..., A^j B],
  // truncated after the reachable space is exhausted.
  std::vector<int> rank_increments;
  // Conjugate partition of rank_increments, sorted non-increasing.
  std::vector<int> controllability_indices;
  bool is_brunovsky_form = false;
  // Chain lengths in the order they appear in the state vector when
  // is_brunovsky_form holds; empty otherwise.
  std::vector<int> brunovsky_chains;
};

/// Controllability structure of the bare pair (A, B).
StructureReport structure_report(const BarePlant& plant);

// Rank increments alone, without the Brunovsky check. Throws
// Error("controllability") if the pair is not controllable.
std::vector<int> rank_increments(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

std::vector<int> conjugate_partition(const std::vector<int>& parts);

// Parallel shift chains of the given lengths with one input and one output per
// chain: x(i,j)+ = x(i,j+1), x(i,kappa_i)+ = u(i), y(i) = x(i,1).
BarePlant make_prime(const std::vector<int>& chain_lengths);

// Returns the chain lengths if (A, B, C, c, d) is literally of make_prime form
// (exact zeros and ones, c = 0, d = 0), otherwise an empty vector.
std::vector<int> match_brunovsky(const BarePlant& plant);

}  // namespace cloak
