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

#include "cloak/io.hpp"

#include <fstream>
#include <sstream>

#include "cloak/error.hpp"
#include "json_util.hpp"

namespace cloak::io {
namespace {

using detail::Json;
using detail::require;

Json parse_document(std::string_view text, const char* check) {
  Json j = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw Error(check, "expected a JSON object");
  return j;
}

std::vector<Eigen::VectorXd> read_references(const Json& value, int dim, int horizon,
                                             bool lift) {
  std::vector<Eigen::VectorXd> refs = detail::vectors_from_json(value, "objective");
  if (refs.size() == 1 && horizon > 0) refs.assign(static_cast<std::size_t>(horizon + 1), refs[0]);
  if (lift) {
    for (auto& r : refs) {
      if (r.size() == dim) r = lift_point(r);
    }
  }
  return refs;
}

Json diagnostics_to_json(const StepDiagnostics& d) {
  return Json{{"k", d.step},
              {"status", std::string(to_string(d.status))},
              {"iterations", d.iterations},
              {"polished", d.polished},
              {"estimate_flagged", d.estimate_flagged},
              {"qp_objective", d.qp_objective},
              {"kkt",
               {{"stationarity", d.kkt.stationarity},
                {"primal", d.kkt.primal},
                {"complementarity", d.kkt.complementarity},
                {"dual_sign", d.kkt.dual_sign}}}};
}

}  // namespace

BarePlant plant_from_json(std::string_view text) {
  const Json j = parse_document(text, "dims");
  BarePlant plant;
  plant.A = detail::matrix_from_json(require(j, "A", "dims"), "dims");
  plant.B = detail::matrix_from_json(require(j, "B", "dims"), "dims");
  plant.C = detail::matrix_from_json(require(j, "C", "dims"), "dims");
  plant.c = j.contains("c") ? detail::vector_from_json(j.at("c"), "dims")
                            : Eigen::VectorXd::Zero(plant.A.rows());
  plant.d = j.contains("d") ? detail::vector_from_json(j.at("d"), "dims")
                            : Eigen::VectorXd::Zero(plant.C.rows());
  return plant;
}

std::string plant_to_json(const BarePlant& plant) {
  return detail::dump_canonical(Json{{"A", detail::to_json(plant.A)},
                                     {"B", detail::to_json(plant.B)},
                                     {"C", detail::to_json(plant.C)},
                                     {"c", detail::to_json(plant.c)},
                                     {"d", detail::to_json(plant.d)}});
}

ObjectiveFile objective_from_json(std::string_view text, int n, int m) {
  const Json j = parse_document(text, "objective");
  ObjectiveFile file;
  ControlObjective& obj = file.objective;
  obj.horizon = require(j, "N", "objective").get<int>();
  obj.M = detail::matrix_from_json(require(j, "M", "objective"), "objective");
  obj.D = j.contains("D") ? detail::matrix_from_json(j.at("D"), "objective", n + m + 1)
                          : Eigen::MatrixXd(0, n + m + 1);
  obj.x_ref = read_references(require(j, "x_ref", "objective"), n, obj.horizon, true);
  obj.u_ref = read_references(require(j, "u_ref", "objective"), m, obj.horizon, false);
  validate_objective(obj, n, m);
  if (j.contains("x0")) {
    Eigen::VectorXd x0 = detail::vector_from_json(j.at("x0"), "objective");
    if (x0.size() == n + 1 && x0(n) == 1.0) x0.conservativeResize(n);
    if (x0.size() != n) throw Error("dims", "x0 must have n entries");
    file.x0 = std::move(x0);
  }
  return file;
}

std::string objective_to_json(const ControlObjective& obj,
                              const std::optional<Eigen::VectorXd>& x0) {
  Json j{{"M", detail::to_json(obj.M)},
         {"D", detail::to_json(obj.D)},
         {"x_ref", detail::to_json(obj.x_ref)},
         {"u_ref", detail::to_json(obj.u_ref)},
         {"N", obj.horizon}};
  if (x0) j["x0"] = detail::to_json(*x0);
  return detail::dump_canonical(j);
}

KeyFile key_from_json(std::string_view text) {
  const Json j = parse_document(text, "key-structure");
  KeyFile key;
  key.psi.P = detail::matrix_from_json(require(j, "P", "key-structure"), "key-structure");
  key.psi.F = detail::matrix_from_json(require(j, "F", "key-structure"), "key-structure");
  key.psi.G = detail::matrix_from_json(require(j, "G", "key-structure"), "key-structure");
  key.psi.S = detail::matrix_from_json(require(j, "S", "key-structure"), "key-structure");
  key.scenario = j.value("scenario", 1);
  key.seed = j.value("seed", std::uint64_t{0});
  key.fixed_point_residual = j.value("fixed_point_residual", 0.0);
  key.trivial_stabilizer = j.value("trivial_stabilizer", false);
  key.stabilizer_dim = j.value("stabilizer_dim", 0);
  validate_isomorphism(key.psi);
  return key;
}

std::string key_to_json(const KeyFile& key) {
  return detail::dump_canonical(Json{{"P", detail::to_json(key.psi.P)},
                                     {"F", detail::to_json(key.psi.F)},
                                     {"G", detail::to_json(key.psi.G)},
                                     {"S", detail::to_json(key.psi.S)},
                                     {"scenario", key.scenario},
                                     {"seed", key.seed},
                                     {"fixed_point_residual", key.fixed_point_residual},
                                     {"trivial_stabilizer", key.trivial_stabilizer},
                                     {"stabilizer_dim", key.stabilizer_dim}});
}

KeyFile to_key_file(const SampledKey& key) {
  return {key.psi,           key.scenario,           key.seed, key.fixed_point_residual,
          key.trivial_stabilizer, key.stabilizer_dim};
}

std::string privacy_report_to_json(const PrivacyReport& r) {
  return detail::dump_canonical(Json{
      {"scenario", r.scenario},
      {"n", r.n},
      {"m", r.m},
      {"p", r.p},
      {"dim_group", r.dim_group},
      {"dim_stabilizer_pair", r.dim_stabilizer_pair},
      {"dim_stabilizer_pair_oracle", r.dim_stabilizer_pair_oracle},
      {"dim_stabilizer_sys", r.dim_stabilizer_sys},
      {"dim_stabilizer_omega", r.dim_stabilizer_omega},
      {"trivial_stabilizer_certified", r.trivial_stabilizer_certified},
      {"scenario_group_dim", r.scenario_group_dim},
      {"uncertainty_dim", r.uncertainty_dim},
      {"side_knowledge_k", r.side_knowledge_k},
      {"scenario1_lower_bound", r.scenario1_lower_bound},
      {"is_brunovsky_form", r.is_brunovsky_form},
      {"dim_prime_formula", r.dim_prime_formula < 0 ? Json(nullptr) : Json(r.dim_prime_formula)},
      {"formula_oracle_agree", r.formula_oracle_agree},
      {"rank_increments", r.rank_increments},
      {"controllability_indices", r.controllability_indices},
      {"notes", r.notes}});
}

std::string session_report_to_json(const SessionResult& result, std::string_view mode) {
  Json diags = Json::array();
  for (const auto& d : result.diagnostics) diags.push_back(diagnostics_to_json(d));
  return detail::dump_canonical(Json{{"mode", std::string(mode)},
                                     {"completed", result.completed},
                                     {"failure", result.failure},
                                     {"cost", result.cost},
                                     {"steps", result.u.size()},
                                     {"x", detail::to_json(result.x)},
                                     {"u", detail::to_json(result.u)},
                                     {"y", detail::to_json(result.y)},
                                     {"diagnostics", std::move(diags)}});
}

std::string trajectory_csv(const SessionResult& result, int n, int m, int p) {
  std::ostringstream out;
  out.precision(17);
  out << "step";
  for (int i = 1; i <= n; ++i) out << ",x_" << i;
  for (int i = 1; i <= m; ++i) out << ",u_" << i;
  for (int i = 1; i <= p; ++i) out << ",y_" << i;
  out << '\n';
  for (std::size_t k = 0; k < result.u.size(); ++k) {
    out << k;
    for (int i = 0; i < n; ++i) out << ',' << result.x[k](i);
    for (int i = 0; i < m; ++i) out << ',' << result.u[k](i);
    for (int i = 0; i < p; ++i) out << ',' << result.y[k](i);
    out << '\n';
  }
  return out.str();
}

std::string canonical_json(std::string_view text) {
  const Json j = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw Error("serialization", "malformed JSON");
  return detail::dump_canonical(j);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << content;
  if (content.empty() || content.back() != '\n') out << '\n';
}

}  // namespace cloak::io
