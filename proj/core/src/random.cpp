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

#include "cloak/random.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "cloak/error.hpp"
#include "cloak/linalg.hpp"

namespace cloak {

Eigen::MatrixXd uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo,
                               double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::MatrixXd out(rows, cols);
  // Row-major fill so a given seed yields the same matrix regardless of storage.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = dist(rng);
  }
  return out;
}

Eigen::VectorXd uniform_vector(Rng& rng, Eigen::Index size, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::VectorXd out(size);
  for (Eigen::Index i = 0; i < size; ++i) out(i) = dist(rng);
  return out;
}

Eigen::MatrixXd random_well_conditioned(Rng& rng, Eigen::Index size, double max_condition,
                                        int budget) {
  for (int attempt = 0; attempt < budget; ++attempt) {
    Eigen::MatrixXd candidate = uniform_matrix(rng, size, size);
    if (linalg::condition_number(candidate) < max_condition) return candidate;
  }
  throw Error("resample-budget", "no well-conditioned matrix within budget");
}

BarePlant random_plant(Rng& rng, int n, int m, int p, PlantOptions options) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    BarePlant plant;
    plant.A = uniform_matrix(rng, n, n);
    plant.B = uniform_matrix(rng, n, m);
    plant.C = uniform_matrix(rng, p, n);
    plant.c = options.affine ? uniform_vector(rng, n) : Eigen::VectorXd::Zero(n);
    plant.d = options.affine ? uniform_vector(rng, p) : Eigen::VectorXd::Zero(p);
    if (options.spectral_radius > 0.0) {
      const double radius = plant.A.eigenvalues().cwiseAbs().maxCoeff();
      if (radius > 0.0) plant.A *= options.spectral_radius / radius;
    }
    try {
      validate_plant(plant);
      return plant;
    } catch (const Error&) {
    }
  }
  throw Error("resample-budget", "no valid random plant within budget");
}

}  // namespace cloak
