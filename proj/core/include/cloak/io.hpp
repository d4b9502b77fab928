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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "cloak/group.hpp"
#include "cloak/objective.hpp"
#include "cloak/privacy.hpp"
#include "cloak/protocol.hpp"
#include "cloak/sysmodel.hpp"

namespace cloak::io {

// {"A": [[...]], "B": [[...]], "C": [[...]], "c": [...], "d": [...]}
// Matrices are row-major arrays of finite doubles; c and d default to zero.
BarePlant plant_from_json(std::string_view text);
std::string plant_to_json(const BarePlant& plant);

// {"M": [[...]], "D": [[...]], "x_ref": [[...]], "u_ref": [[...]], "N": int,
//  "x0": [...]}
// References may be given bare (length n) or lifted (length n+1). The optional
// x0 is the bare initial state (default zero). D may be omitted or empty.
struct ObjectiveFile {
  ControlObjective objective;
  std::optional<Eigen::VectorXd> x0;
};
ObjectiveFile objective_from_json(std::string_view text, int n, int m);
std::string objective_to_json(const ControlObjective& obj,
                              const std::optional<Eigen::VectorXd>& x0 = std::nullopt);

// {"P": ..., "F": ..., "G": ..., "S": ..., "scenario": int, "seed": int, ...}
struct KeyFile {
  Isomorphism psi;
  int scenario = 1;
  std::uint64_t seed = 0;
  double fixed_point_residual = 0.0;
  bool trivial_stabilizer = false;
  int stabilizer_dim = 0;
};
KeyFile key_from_json(std::string_view text);
std::string key_to_json(const KeyFile& key);
KeyFile to_key_file(const SampledKey& key);

std::string privacy_report_to_json(const PrivacyReport& report);
std::string session_report_to_json(const SessionResult& result,
                                   std::string_view mode);
// step,x_1..x_n,u_1..u_m,y_1..y_p
std::string trajectory_csv(const SessionResult& result, int n, int m, int p);

// Re-serializes any JSON document canonically (sorted keys, doubles at 17
// significant digits, no whitespace).
std::string canonical_json(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace cloak::io
