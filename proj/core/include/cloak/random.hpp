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
#include <random>

#include <Eigen/Dense>

#include "cloak/sysmodel.hpp"

namespace cloak {

using Rng = std::mt19937_64;

/// Entries i.i.d. uniform on [lo, hi].
Eigen::MatrixXd uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                               double lo = -1.0, double hi = 1.0);
Eigen::VectorXd uniform_vector(Rng& rng, Eigen::Index size, double lo = -1.0,
                               double hi = 1.0);

// Uniform [-1, 1] square matrix, redrawn until its condition number is below
// `max_condition`. Throws Error("resample-budget") after `budget` draws.
Eigen::MatrixXd random_well_conditioned(Rng& rng, Eigen::Index size,
                                        double max_condition, int budget = 100);

struct PlantOptions {
  bool affine = true;               // draw c and d, otherwise zero
  double spectral_radius = 0.0;     // > 0 rescales A to this spectral radius
};

// Uniform [-1, 1] plant, redrawn until validate_plant accepts it.
BarePlant random_plant(Rng& rng, int n, int m, int p, PlantOptions options = {});

}  // namespace cloak
