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

#include "cloak/sysmodel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cloak/error.hpp"
#include "cloak/linalg.hpp"

namespace cloak {
namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

// Rank of [B, AB, ..., A^j B] for increasing j, each block normalized so that
// unstable A does not swamp the early columns.
std::vector<int> krylov_ranks(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              int max_blocks) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  std::vector<int> ranks;
  Eigen::MatrixXd stacked(n, 0);
  Eigen::MatrixXd block = B;
  for (int j = 0; j < max_blocks; ++j) {
    const double norm = block.norm();
    if (norm > 0.0) block /= norm;
    stacked.conservativeResize(n, stacked.cols() + m);
    stacked.rightCols(m) = block;
    ranks.push_back(linalg::numerical_rank(stacked));
    if (ranks.back() == n) break;
    if (j > 0 && ranks.back() == ranks[ranks.size() - 2]) break;
    block = A * block;
  }
  return ranks;
}

}  // namespace

bool is_controllable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() == 0) return true;
  const auto ranks = krylov_ranks(A, B, static_cast<int>(A.rows()));
  return ranks.back() == A.rows();
}

bool is_observable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C) {
  return is_controllable(A.transpose(), C.transpose());
}

void validate_plant(const BarePlant& plant) {
  const auto n = plant.A.rows();
  if (n < 1 || plant.A.cols() != n) throw Error("dims", "A must be square with n >= 1");
  if (plant.B.rows() != n || plant.B.cols() < 1) throw Error("dims", "B must be n x m, m >= 1");
  if (plant.C.cols() != n || plant.C.rows() < 1) throw Error("dims", "C must be p x n, p >= 1");
  if (plant.c.size() != n) throw Error("dims", "c must have length n");
  if (plant.d.size() != plant.C.rows()) throw Error("dims", "d must have length p");
  if (!all_finite(plant.A) || !all_finite(plant.B) || !all_finite(plant.C) ||
      !plant.c.allFinite() || !plant.d.allFinite()) {
    throw Error("dims", "plant data must be finite");
  }
  if (linalg::numerical_rank(plant.B) != plant.B.cols()) {
    throw Error("ker-B", "B must have full column rank");
  }
  if (linalg::numerical_rank(plant.C) != plant.C.rows()) {
    throw Error("im-C", "C must have full row rank");
  }
  if (!is_controllable(plant.A, plant.B)) {
    throw Error("controllability", "(A, B) is not controllable");
  }
  if (!is_observable(plant.A, plant.C)) {
    throw Error("observability", "(A, C) is not observable");
  }
}

Eigen::MatrixXd lift_affine(const Eigen::MatrixXd& W, const Eigen::VectorXd& v) {
  if (v.size() != W.rows()) {
    throw Error("dims", "affine offset length " + std::to_string(v.size()) +
                            " does not match " + std::to_string(W.rows()) + " rows");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(W.rows() + 1, W.cols() + 1);
  out.topLeftCorner(W.rows(), W.cols()) = W;
  out.topRightCorner(W.rows(), 1) = v;
  out(W.rows(), W.cols()) = 1.0;
  return out;
}

Eigen::VectorXd lift_point(const Eigen::VectorXd& bare) {
  Eigen::VectorXd out(bare.size() + 1);
  out.head(bare.size()) = bare;
  out(bare.size()) = 1.0;
  return out;
}

LiftedSystem::LiftedSystem(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C)
    : A_(std::move(A)),
      B_(std::move(B)),
      C_(std::move(C)),
      n_(static_cast<int>(A_.rows()) - 1),
      m_(static_cast<int>(B_.cols())),
      p_(static_cast<int>(C_.rows()) - 1) {}

LiftedSystem LiftedSystem::from_plant(const BarePlant& plant) {
  validate_plant(plant);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(plant.n() + 1, plant.m());
  B.topRows(plant.n()) = plant.B;
  return LiftedSystem(lift_affine(plant.A, plant.c), std::move(B),
                      lift_affine(plant.C, plant.d));
}

LiftedSystem LiftedSystem::from_lifted(Eigen::MatrixXd A, Eigen::MatrixXd B,
                                       Eigen::MatrixXd C) {
  if (A.rows() < 2 || A.cols() != A.rows()) throw Error("dims", "lifted A must be square, n >= 1");
  if (B.rows() != A.rows() || B.cols() < 1) throw Error("dims", "lifted B must be (n+1) x m");
  if (C.cols() != A.rows() || C.rows() < 2) throw Error("dims", "lifted C must be (p+1) x (n+1)");
  if (!linalg::has_lifted_last_row(A)) throw Error("lifted-structure", "last row of A");
  if (!linalg::has_lifted_last_row(C)) throw Error("lifted-structure", "last row of C");
  if ((B.row(B.rows() - 1).array() != 0.0).any()) {
    throw Error("lifted-structure", "last row of B must be zero");
  }
  LiftedSystem sys(std::move(A), std::move(B), std::move(C));
  validate_plant(sys.bare());
  return sys;
}

BarePlant LiftedSystem::bare() const {
  BarePlant plant;
  plant.A = A_.topLeftCorner(n_, n_);
  plant.c = A_.topRightCorner(n_, 1);
  plant.B = B_.topRows(n_);
  plant.C = C_.topLeftCorner(p_, n_);
  plant.d = C_.topRightCorner(p_, 1);
  return plant;
}

std::vector<int> rank_increments(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const auto ranks = krylov_ranks(A, B, static_cast<int>(A.rows()));
  if (ranks.back() != A.rows()) {
    throw Error("controllability", "(A, B) is not controllable");
  }
  std::vector<int> r;
  int prev = 0;
  for (int rk : ranks) {
    r.push_back(rk - prev);
    prev = rk;
  }
  return r;
}

std::vector<int> conjugate_partition(const std::vector<int>& parts) {
  const int largest = parts.empty() ? 0 : *std::max_element(parts.begin(), parts.end());
  std::vector<int> out;
  for (int i = 1; i <= largest; ++i) {
    out.push_back(static_cast<int>(
        std::count_if(parts.begin(), parts.end(), [i](int v) { return v >= i; })));
  }
  return out;
}

StructureReport structure_report(const BarePlant& plant) {
  StructureReport report;
  report.rank_increments = rank_increments(plant.A, plant.B);
  report.controllability_indices = conjugate_partition(report.rank_increments);
  report.brunovsky_chains = match_brunovsky(plant);
  report.is_brunovsky_form = !report.brunovsky_chains.empty();
  return report;
}

BarePlant make_prime(const std::vector<int>& chain_lengths) {
  if (chain_lengths.empty()) throw Error("dims", "at least one chain is required");
  int n = 0;
  for (int k : chain_lengths) {
    if (k < 1) throw Error("dims", "chain lengths must be positive");
    n += k;
  }
  const int m = static_cast<int>(chain_lengths.size());
  BarePlant plant;
  plant.A = Eigen::MatrixXd::Zero(n, n);
  plant.B = Eigen::MatrixXd::Zero(n, m);
  plant.C = Eigen::MatrixXd::Zero(m, n);
  plant.c = Eigen::VectorXd::Zero(n);
  plant.d = Eigen::VectorXd::Zero(m);
  int offset = 0;
  for (int i = 0; i < m; ++i) {
    const int k = chain_lengths[i];
    for (int j = 0; j + 1 < k; ++j) plant.A(offset + j, offset + j + 1) = 1.0;
    plant.B(offset + k - 1, i) = 1.0;
    plant.C(i, offset) = 1.0;
    offset += k;
  }
  return plant;
}

std::vector<int> match_brunovsky(const BarePlant& plant) {
  const int n = plant.n();
  const int m = plant.m();
  if (plant.p() != m || plant.A.cols() != n || plant.B.rows() != n || plant.C.cols() != n) {
    return {};
  }
  if ((plant.c.array() != 0.0).any() || (plant.d.array() != 0.0).any()) return {};
  // Each input must drive exactly one chain end, chain ends strictly increasing.
  std::vector<int> chains;
  int previous_end = -1;
  for (int i = 0; i < m; ++i) {
    int end = -1;
    for (int r = 0; r < n; ++r) {
      const double v = plant.B(r, i);
      if (v == 1.0 && end < 0) {
        end = r;
      } else if (v != 0.0) {
        return {};
      }
    }
    if (end <= previous_end) return {};
    chains.push_back(end - previous_end);
    previous_end = end;
  }
  if (previous_end != n - 1) return {};
  const BarePlant expected = make_prime(chains);
  if (plant.A != expected.A || plant.B != expected.B || plant.C != expected.C) return {};
  return chains;
}

}  // namespace cloak
