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

#include "json_util.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "cloak/error.hpp"

namespace cloak::detail {
namespace {

void append_number(std::string& out, double v) {
  if (!std::isfinite(v)) throw Error("serialization", "non-finite number");
  if (v == 0.0) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void dump_into(std::string& out, const Json& value) {
  switch (value.type()) {
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [key, item] : value.items()) {
        if (!first) out += ',';
        first = false;
        out += Json(key).dump();
        out += ':';
        dump_into(out, item);
      }
      out += '}';
      break;
    }
    case Json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& item : value) {
        if (!first) out += ',';
        first = false;
        dump_into(out, item);
      }
      out += ']';
      break;
    }
    case Json::value_t::number_float:
      append_number(out, value.get<double>());
      break;
    default:
      out += value.dump();
      break;
  }
}

}  // namespace

std::string dump_canonical(const Json& value) {
  std::string out;
  dump_into(out, value);
  return out;
}

Json to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json to_json(const std::vector<Eigen::VectorXd>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) out.push_back(to_json(r));
  return out;
}

Eigen::VectorXd vector_from_json(const Json& value, const char* check) {
  if (!value.is_array()) throw Error(check, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(value.size()));
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (!value[i].is_number()) throw Error(check, "expected a number");
    v(static_cast<Eigen::Index>(i)) = value[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const Json& value, const char* check, Eigen::Index empty_cols) {
  if (!value.is_array()) throw Error(check, "expected a matrix (array of rows)");
  if (value.empty()) return Eigen::MatrixXd(0, empty_cols);
  const auto rows = static_cast<Eigen::Index>(value.size());
  if (!value[0].is_array()) throw Error(check, "expected a matrix (array of rows)");
  const auto cols = static_cast<Eigen::Index>(value[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::VectorXd row = vector_from_json(value[static_cast<std::size_t>(i)], check);
    if (row.size() != cols) throw Error(check, "ragged matrix rows");
    m.row(i) = row.transpose();
  }
  return m;
}

std::vector<Eigen::VectorXd> vectors_from_json(const Json& value, const char* check) {
  if (!value.is_array()) throw Error(check, "expected an array of vectors");
  std::vector<Eigen::VectorXd> out;
  for (const auto& item : value) out.push_back(vector_from_json(item, check));
  return out;
}

const Json& require(const Json& obj, const char* key, const char* check) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(check, std::string("missing field '") + key + "'");
  }
  return obj.at(key);
}

}  // namespace cloak::detail
