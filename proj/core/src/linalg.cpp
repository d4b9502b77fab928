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

#include "cloak/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cloak/error.hpp"

namespace cloak::linalg {

double rank_tolerance(Eigen::Index rows, Eigen::Index cols, double sigma_max, double scale,
                      double eps) {
  return static_cast<double>(std::max(rows, cols)) * eps * std::max(sigma_max, scale);
}

int numerical_rank(const Eigen::MatrixXd& m, double scale, double eps) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double tol = rank_tolerance(m.rows(), m.cols(), s(0), scale, eps);
  return static_cast<int>((s.array() > tol).count());
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& m, double scale, double eps) {
  const Eigen::Index cols = m.cols();
  if (m.rows() == 0) return Eigen::MatrixXd::Identity(cols, cols);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double tol = rank_tolerance(m.rows(), cols, s.size() ? s(0) : 0.0, scale, eps);
  const Eigen::Index rank = (s.array() > tol).count();
  return svd.matrixV().rightCols(cols - rank);
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& m, double eps) {
  if (m.size() == 0) return Eigen::MatrixXd::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double tol = rank_tolerance(m.rows(), m.cols(), s(0), 0.0, eps);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double condition_number(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin <= 0.0 || !std::isfinite(smin)) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

Eigen::MatrixXd inverse_lifted(const Eigen::MatrixXd& lifted) {
  const Eigen::Index k = lifted.rows() - 1;
  const Eigen::MatrixXd W = lifted.topLeftCorner(k, k);
  const Eigen::VectorXd v = lifted.topRightCorner(k, 1);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k + 1, k + 1);
  out(k, k) = 1.0;
  if (k == 0) return out;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(W);
  if (!lu.isInvertible()) throw Error("singular", "lifted matrix is not invertible");
  const Eigen::MatrixXd W_inv = lu.inverse();
  out.topLeftCorner(k, k) = W_inv;
  out.topRightCorner(k, 1) = -(W_inv * v);
  return out;
}

bool has_lifted_last_row(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) return false;
  const Eigen::Index r = m.rows() - 1;
  for (Eigen::Index j = 0; j + 1 < m.cols(); ++j) {
    if (m(r, j) != 0.0) return false;
  }
  return m(r, m.cols() - 1) == 1.0;
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    return std::numeric_limits<double>::infinity();
  }
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace cloak::linalg
