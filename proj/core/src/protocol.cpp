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

#include "cloak/protocol.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <utility>

#include "cloak/error.hpp"
#include "cloak/transport.hpp"
#include "json_util.hpp"

namespace cloak {
namespace {

using detail::Json;
using detail::require;

constexpr const char* kWire = "protocol";

Json parse_wire(std::string_view wire) {
  Json j = Json::parse(wire, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) throw Error(kWire, "malformed message");
  return j;
}

std::string_view direction_name(Direction d) {
  return d == Direction::kPlantToCloud ? "plant_to_cloud" : "cloud_to_plant";
}

Direction direction_from_name(const std::string& name) {
  if (name == "plant_to_cloud") return Direction::kPlantToCloud;
  if (name == "cloud_to_plant") return Direction::kCloudToPlant;
  throw Error("transcript", "unknown direction '" + name + "'");
}

Json diag_to_json(const StepDiagnostics& d) {
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

StepDiagnostics diag_from_json(const Json& j) {
  StepDiagnostics d;
  d.step = require(j, "k", kWire).get<int>();
  d.status = solve_status_from_string(require(j, "status", kWire).get<std::string>());
  d.iterations = require(j, "iterations", kWire).get<int>();
  d.polished = require(j, "polished", kWire).get<bool>();
  d.estimate_flagged = require(j, "estimate_flagged", kWire).get<bool>();
  d.qp_objective = require(j, "qp_objective", kWire).get<double>();
  const Json& kkt = require(j, "kkt", kWire);
  d.kkt.stationarity = require(kkt, "stationarity", kWire).get<double>();
  d.kkt.primal = require(kkt, "primal", kWire).get<double>();
  d.kkt.complementarity = require(kkt, "complementarity", kWire).get<double>();
  d.kkt.dual_sign = require(kkt, "dual_sign", kWire).get<double>();
  return d;
}

double magnitude(const Json& j) {
  if (j.is_number()) return std::abs(j.get<double>());
  double mag = 0.0;
  if (j.is_array() || j.is_object()) {
    for (const auto& item : j) mag = std::max(mag, magnitude(item));
  }
  return mag;
}

bool numbers_match(double a, double b, double mag) {
  if (a == b) return true;
  if (!(mag > 0.0)) return false;
  const double unit = std::pow(10.0, std::floor(std::log10(mag)) - (kCompareDigits - 1));
  return std::abs(a - b) <= unit;
}

// Arrays carry the magnitude of their outermost enclosing array.
bool json_match(const Json& a, const Json& b, double mag) {
  if (a.is_number() && b.is_number()) {
    const double x = a.get<double>();
    const double y = b.get<double>();
    if (mag >= 0.0) return numbers_match(x, y, mag);
    if (a.is_number_integer() && b.is_number_integer()) return a == b;
    return numbers_match(x, y, std::max(std::abs(x), std::abs(y)));
  }
  if (a.type() != b.type()) return false;
  if (a.is_array()) {
    if (a.size() != b.size()) return false;
    const double m = mag >= 0.0 ? mag : std::max(magnitude(a), magnitude(b));
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!json_match(a[i], b[i], m)) return false;
    }
    return true;
  }
  if (a.is_object()) {
    if (a.size() != b.size()) return false;
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!b.contains(it.key()) || !json_match(it.value(), b.at(it.key()), mag)) return false;
    }
    return true;
  }
  return a == b;
}

Eigen::VectorXd finite_or_zero(const Eigen::VectorXd& v) {
  return v.allFinite() ? v : Eigen::VectorXd::Zero(v.size());
}

}  // namespace

ProblemInstance act_on_instance(const Isomorphism& psi, const ProblemInstance& omega) {
  Eigen::VectorXd x0 = psi.P * omega.x0;
  x0(x0.size() - 1) = 1.0;
  return {act_on_system(psi, omega.system), transform_objective(psi, omega.objective),
          std::move(x0)};
}

std::string to_wire(const HandshakeMsg& msg) {
  const ControlObjective& obj = msg.objective;
  Json j{{"type", "handshake"},
         {"A", detail::to_json(msg.A)},
         {"B", detail::to_json(msg.B)},
         {"C", detail::to_json(msg.C)},
         {"M", detail::to_json(obj.M)},
         {"D", detail::to_json(obj.D)},
         {"x_ref", detail::to_json(obj.x_ref)},
         {"u_ref", detail::to_json(obj.u_ref)},
         {"N", obj.horizon}};
  return detail::dump_canonical(j);
}

std::string to_wire(const MeasurementMsg& msg) {
  return detail::dump_canonical(
      Json{{"type", "measurement"}, {"k", msg.step}, {"y", detail::to_json(msg.y)}});
}

std::string to_wire(const ControlMsg& msg, const StepDiagnostics* diag) {
  Json j{{"type", "control"},
         {"k", msg.step},
         {"u", detail::to_json(msg.u)},
         {"status", std::string(to_string(msg.status))}};
  if (diag != nullptr) j["diag"] = diag_to_json(*diag);
  return detail::dump_canonical(j);
}

MessageType wire_type(std::string_view wire) {
  const Json j = parse_wire(wire);
  const std::string type = require(j, "type", kWire).get<std::string>();
  if (type == "handshake") return MessageType::kHandshake;
  if (type == "measurement") return MessageType::kMeasurement;
  if (type == "control") return MessageType::kControl;
  throw Error(kWire, "unknown message type '" + type + "'");
}

HandshakeMsg handshake_from_wire(std::string_view wire) {
  const Json j = parse_wire(wire);
  if (require(j, "type", kWire) != "handshake") throw Error(kWire, "expected a handshake");
  HandshakeMsg msg;
  msg.A = detail::matrix_from_json(require(j, "A", kWire), kWire);
  msg.B = detail::matrix_from_json(require(j, "B", kWire), kWire);
  msg.C = detail::matrix_from_json(require(j, "C", kWire), kWire);
  ControlObjective& obj = msg.objective;
  obj.M = detail::matrix_from_json(require(j, "M", kWire), kWire);
  obj.D = detail::matrix_from_json(require(j, "D", kWire), kWire, obj.M.cols());
  obj.x_ref = detail::vectors_from_json(require(j, "x_ref", kWire), kWire);
  obj.u_ref = detail::vectors_from_json(require(j, "u_ref", kWire), kWire);
  obj.horizon = require(j, "N", kWire).get<int>();
  return msg;
}

MeasurementMsg measurement_from_wire(std::string_view wire) {
  const Json j = parse_wire(wire);
  if (require(j, "type", kWire) != "measurement") throw Error(kWire, "expected a measurement");
  return {require(j, "k", kWire).get<int>(), detail::vector_from_json(require(j, "y", kWire), kWire)};
}

ControlMsg control_from_wire(std::string_view wire, StepDiagnostics* diag) {
  const Json j = parse_wire(wire);
  if (require(j, "type", kWire) != "control") throw Error(kWire, "expected a control message");
  ControlMsg msg;
  msg.step = require(j, "k", kWire).get<int>();
  msg.u = detail::vector_from_json(require(j, "u", kWire), kWire);
  msg.status = solve_status_from_string(require(j, "status", kWire).get<std::string>());
  if (diag != nullptr && j.contains("diag")) *diag = diag_from_json(j.at("diag"));
  return msg;
}

std::string strip_diagnostics(std::string_view wire) {
  Json j = parse_wire(wire);
  j.erase("diag");
  return detail::dump_canonical(j);
}

void Transcript::validate() const {
  if (entries.empty()) throw Error("transcript", "empty transcript");
  if (entries.front().first != Direction::kPlantToCloud ||
      wire_type(entries.front().second) != MessageType::kHandshake) {
    throw Error("transcript", "transcript must begin with a plant handshake");
  }
  int last_step = -1;
  for (std::size_t i = 1; i < entries.size(); ++i) {
    const bool measurement_slot = i % 2 == 1;
    const auto& [dir, wire] = entries[i];
    const MessageType type = wire_type(wire);
    if (measurement_slot) {
      if (dir != Direction::kPlantToCloud || type != MessageType::kMeasurement) {
        throw Error("transcript", "expected a measurement at entry " + std::to_string(i));
      }
      const int step = measurement_from_wire(wire).step;
      if (step <= last_step) throw Error("transcript", "steps must strictly increase");
      last_step = step;
    } else {
      if (dir != Direction::kCloudToPlant || type != MessageType::kControl) {
        throw Error("transcript", "expected a control at entry " + std::to_string(i));
      }
      if (control_from_wire(wire).step != last_step) {
        throw Error("transcript", "control step does not answer the measurement");
      }
    }
  }
  if (meta.steps > 0 && last_step + 1 > meta.steps) {
    throw Error("transcript", "more rounds than announced in the metadata");
  }
}

std::string Transcript::to_jsonl() const {
  std::string out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Json line{{"dir", std::string(direction_name(entries[i].first))},
              {"msg", parse_wire(entries[i].second)}};
    if (i == 0) {
      line["meta"] = Json{{"n", meta.n}, {"m", meta.m}, {"p", meta.p},
                          {"N", meta.horizon}, {"T", meta.steps}};
    }
    out += detail::dump_canonical(line);
    out += '\n';
  }
  return out;
}

Transcript Transcript::from_jsonl(std::string_view text) {
  Transcript t;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error("transcript", "malformed line");
    if (t.entries.empty()) {
      const Json& meta = require(j, "meta", "transcript");
      t.meta.n = require(meta, "n", "transcript").get<int>();
      t.meta.m = require(meta, "m", "transcript").get<int>();
      t.meta.p = require(meta, "p", "transcript").get<int>();
      t.meta.horizon = require(meta, "N", "transcript").get<int>();
      t.meta.steps = require(meta, "T", "transcript").get<int>();
    }
    t.entries.emplace_back(direction_from_name(require(j, "dir", "transcript").get<std::string>()),
                           detail::dump_canonical(require(j, "msg", "transcript")));
  }
  t.validate();
  return t;
}

bool indistinguishable(const Transcript& t1, const Transcript& t2) {
  const SessionMeta& a = t1.meta;
  const SessionMeta& b = t2.meta;
  if (a.n != b.n || a.m != b.m || a.p != b.p || a.horizon != b.horizon || a.steps != b.steps) {
    return false;
  }
  if (t1.entries.size() != t2.entries.size()) return false;
  for (std::size_t i = 0; i < t1.entries.size(); ++i) {
    if (t1.entries[i].first != t2.entries[i].first) return false;
    if (t1.entries[i].second == t2.entries[i].second) continue;
    if (!json_match(parse_wire(t1.entries[i].second), parse_wire(t2.entries[i].second), -1.0)) {
      return false;
    }
  }
  return true;
}

PlantCodec::PlantCodec(const Isomorphism& psi)
    : S_(psi.S), F_(psi.F), G_(psi.G) {
  validate_isomorphism(psi);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(G_);
  if (!lu.isInvertible()) throw Error("key-invertibility", "G is singular");
  G_inv_ = lu.inverse();
  G_inv_F_ = G_inv_ * F_;
}

Eigen::VectorXd PlantCodec::encode_measurement(const Eigen::VectorXd& y) const {
  if (y.size() != S_.cols()) throw Error("dims", "measurement size");
  return S_ * y;
}

Eigen::VectorXd PlantCodec::decode_input(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& u_tilde) const {
  if (x.size() != G_inv_F_.cols() || u_tilde.size() != G_inv_.cols()) {
    throw Error("dims", "decode input size");
  }
  return G_inv_ * u_tilde - G_inv_F_ * x;
}

Eigen::VectorXd PlantCodec::encode_input(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& u) const {
  if (x.size() != F_.cols() || u.size() != G_.cols()) throw Error("dims", "encode input size");
  return F_ * x + G_ * u;
}

long PlantCodec::step_multiply_adds() const {
  return static_cast<long>(S_.size() + G_inv_.size() + G_inv_F_.size());
}

HandshakeMsg plant_handshake(const ProblemInstance& omega, const Isomorphism& psi) {
  const LiftedSystem& sys = omega.system;
  validate_isomorphism(psi, sys.n(), sys.m(), sys.p());
  validate_objective(omega.objective, sys.n(), sys.m());
  const auto mats = act_on_matrices(psi, sys.A(), sys.B(), sys.C());
  return {mats.A, mats.B, mats.C, transform_objective(psi, omega.objective)};
}

CloudSession::CloudSession(const HandshakeMsg& handshake, SolverConfig cfg)
    : mpc_(LiftedSystem::from_lifted(handshake.A, handshake.B, handshake.C), handshake.objective,
           cfg) {}

ControlMsg CloudSession::on_measurement(const MeasurementMsg& msg, StepDiagnostics* diag) {
  if (msg.step <= last_step_) {
    throw Error("protocol", "measurement steps must strictly increase");
  }
  last_step_ = msg.step;
  const OutputFeedbackMpc::Step step = mpc_.step(msg.y);
  ControlMsg out{msg.step, finite_or_zero(step.u), step.qp.status};
  if (diag != nullptr) {
    *diag = {msg.step,         step.qp.status,         step.qp.iterations,
             step.qp.polished, step.estimate.flagged, step.qp.objective,
             step.qp.kkt};
    if (!std::isfinite(diag->qp_objective)) diag->qp_objective = 0.0;
  }
  return out;
}

double closed_loop_cost(const ControlObjective& obj, const std::vector<Eigen::VectorXd>& x,
                        const std::vector<Eigen::VectorXd>& u) {
  if (x.size() < u.size()) throw Error("dims", "state trajectory shorter than inputs");
  const Eigen::VectorXd& xr = obj.x_ref.front();
  const Eigen::VectorXd& ur = obj.u_ref.front();
  Eigen::VectorXd delta(xr.size() + ur.size());
  double total = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    delta << x[k] - xr, u[k] - ur;
    total += delta.dot(obj.M * delta);
  }
  return total;
}

std::optional<Endpoint> parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) return std::nullopt;
  Endpoint ep;
  ep.host = std::string(text.substr(0, colon));
  const std::string_view port = text.substr(colon + 1);
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || ptr != port.data() + port.size() || value > 65535) return std::nullopt;
  ep.port = static_cast<std::uint16_t>(value);
  return ep;
}

SessionResult run_session(const ProblemInstance& omega, const Isomorphism& psi, int steps,
                          Transport transport, const SolverConfig& cfg,
                          const std::optional<Endpoint>& cloud) {
  if (steps < 1) throw Error("steps", "at least one step is required");
  const LiftedSystem& sys = omega.system;
  if (omega.x0.size() != sys.n() + 1) throw Error("dims", "initial state must be lifted");
  const HandshakeMsg handshake = plant_handshake(omega, psi);
  const PlantCodec codec(psi);

  std::unique_ptr<CloudChannel> channel;
  if (transport == Transport::kTcp) {
    if (!cloud) throw Error("transport", "tcp transport needs a cloud endpoint");
    channel = std::make_unique<TcpChannel>(*cloud);
  } else {
    channel = std::make_unique<InProcessChannel>(cfg);
  }

  SessionResult result;
  result.transcript.meta = {sys.n(), sys.m(), sys.p(), omega.objective.horizon, steps};
  const std::string hello = to_wire(handshake);
  channel->send(hello);
  result.transcript.entries.emplace_back(Direction::kPlantToCloud, hello);

  Eigen::VectorXd x = omega.x0;
  result.x.push_back(x);
  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd y = sys.output(x);
    const std::string measurement = to_wire(MeasurementMsg{k, codec.encode_measurement(y)});
    channel->send(measurement);
    result.transcript.entries.emplace_back(Direction::kPlantToCloud, measurement);

    const std::string reply = channel->receive();
    StepDiagnostics diag;
    diag.step = k;
    const ControlMsg control = control_from_wire(reply, &diag);
    result.transcript.entries.emplace_back(Direction::kCloudToPlant, strip_diagnostics(reply));
    result.diagnostics.push_back(diag);
    if (control.step != k) throw Error("protocol", "control answers the wrong step");
    if (control.status != SolveStatus::kSolved) {
      result.failure = "solver status " + std::string(to_string(control.status)) +
                       " at step " + std::to_string(k);
      break;
    }
    const Eigen::VectorXd u = codec.decode_input(x, control.u);
    result.y.push_back(y);
    result.u.push_back(u);
    x = sys.step(x, u);
    result.x.push_back(x);
  }
  result.completed = result.failure.empty();
  result.cost = closed_loop_cost(omega.objective, result.x, result.u);
  return result;
}

SessionResult run_direct(const ProblemInstance& omega, int steps, const SolverConfig& cfg) {
  if (steps < 1) throw Error("steps", "at least one step is required");
  const LiftedSystem& sys = omega.system;
  if (omega.x0.size() != sys.n() + 1) throw Error("dims", "initial state must be lifted");
  OutputFeedbackMpc mpc(sys, omega.objective, cfg);

  SessionResult result;
  result.transcript.meta = {sys.n(), sys.m(), sys.p(), omega.objective.horizon, steps};
  Eigen::VectorXd x = omega.x0;
  result.x.push_back(x);
  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd y = sys.output(x);
    const OutputFeedbackMpc::Step step = mpc.step(y);
    result.diagnostics.push_back({k, step.qp.status, step.qp.iterations, step.qp.polished,
                                  step.estimate.flagged, step.qp.objective, step.qp.kkt});
    if (step.qp.status != SolveStatus::kSolved) {
      result.failure = "solver status " + std::string(to_string(step.qp.status)) +
                       " at step " + std::to_string(k);
      break;
    }
    result.y.push_back(y);
    result.u.push_back(step.u);
    x = sys.step(x, step.u);
    result.x.push_back(x);
  }
  result.completed = result.failure.empty();
  result.cost = closed_loop_cost(omega.objective, result.x, result.u);
  return result;
}

}  // namespace cloak
