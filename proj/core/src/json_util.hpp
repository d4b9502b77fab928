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
#include <json.hpp>

namespace cloak::detail {

using Json = nlohmann::json;

// Sorted keys, no whitespace, doubles at 17 significant digits, -0 as 0.
std::string dump_canonical(const Json& value);

Json to_json(const Eigen::MatrixXd& m);
Json to_json(const Eigen::VectorXd& v);
Json to_json(const std::vector<Eigen::VectorXd>& rows);

// Throw Error(check) on malformed input. An empty array yields a matrix with
// zero rows and `empty_cols` columns.
Eigen::MatrixXd matrix_from_json(const Json& value, const char* check, Eigen::Index empty_cols = 0);
Eigen::VectorXd vector_from_json(const Json& value, const char* check);
std::vector<Eigen::VectorXd> vectors_from_json(const Json& value, const char* check);

const Json& require(const Json& obj, const char* key, const char* check);

}  // namespace cloak::detail
