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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cloak/group.hpp"
#include "cloak/mpc.hpp"
#include "cloak/objective.hpp"
#include "cloak/qp.hpp"
#include "cloak/sysmodel.hpp"

namespace cloak {

// System, objective and initial state: the data a session protects.
struct ProblemInstance {
  LiftedSystem system;
  ControlObjective objective;
  Eigen::VectorXd x0;  // lifted
};

ProblemInstance act_on_instance(const Isomorphism& psi, const ProblemInstance& omega);

struct HandshakeMsg {
  Eigen::MatrixXd A, B, C;
  ControlObjective objective;  // carries M, D, references and the horizon
};

struct MeasurementMsg {
  int step = 0;
  Eigen::VectorXd y;
};

struct ControlMsg {
  int step = 0;
  Eigen::VectorXd u;
  SolveStatus status = SolveStatus::kSolved;
};

// Cloud-side solver record for one step. Travels with the control message on
// the wire but is not part of the transcript.
struct StepDiagnostics {
  int step = 0;
  SolveStatus status = SolveStatus::kSolved;
  int iterations = 0;
  bool polished = false;
  bool estimate_flagged = false;
  double qp_objective = 0.0;
  KktResiduals kkt;
};

// Canonical wire encoding: JSON, keys sorted, doubles at 17 significant
// digits.
std::string to_wire(const HandshakeMsg& msg);
std::string to_wire(const MeasurementMsg& msg);
std::string to_wire(const ControlMsg& msg, const StepDiagnostics* diag = nullptr);

enum class MessageType { kHandshake, kMeasurement, kControl };
MessageType wire_type(std::string_view wire);

HandshakeMsg handshake_from_wire(std::string_view wire);
MeasurementMsg measurement_from_wire(std::string_view wire);
ControlMsg control_from_wire(std::string_view wire, StepDiagnostics* diag = nullptr);

// Drops the "diag" member of a control message, re-serialized canonically.
std::string strip_diagnostics(std::string_view wire);

enum class Direction { kPlantToCloud, kCloudToPlant };

struct SessionMeta {
  int n = 0, m = 0, p = 0;
  int horizon = 0;
  int steps = 0;
};

// The cloud's view of a session: one handshake, then alternating
// measurement/control messages, each in canonical wire form.
struct Transcript {
  SessionMeta meta;
  std::vector<std::pair<Direction, std::string>> entries;

  // Throws Error("transcript") if the alternation invariant or step numbering
  // is broken.
  void validate() const;

  // JSON Lines; the first line is the handshake and carries the session
  // metadata.
  std::string to_jsonl() const;
  static Transcript from_jsonl(std::string_view text);
};

// Equal message sequences, numeric values compared at 12 significant digits
// relative to the magnitude of the array they belong to.
bool indistinguishable(const Transcript& t1, const Transcript& t2);

inline constexpr int kCompareDigits = 12;

// Plant-side execution-phase codec. Construction inverts G and forms G^-1 F
// once; each step is then matrix-vector products only.
class PlantCodec {
 public:
  explicit PlantCodec(const Isomorphism& psi);

  /// y~ = S y
  Eigen::VectorXd encode_measurement(const Eigen::VectorXd& y) const;
  /// u = G^-1 u~ - (G^-1 F) x
  Eigen::VectorXd decode_input(const Eigen::VectorXd& x, const Eigen::VectorXd& u_tilde) const;
  /// u~ = F x + G u
  Eigen::VectorXd encode_input(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

  // Multiply-adds performed by one encode_measurement + decode_input pair.
  long step_multiply_adds() const;

 private:
  Eigen::MatrixXd S_;
  Eigen::MatrixXd F_;
  Eigen::MatrixXd G_;
  Eigen::MatrixXd G_inv_;
  Eigen::MatrixXd G_inv_F_;
};

HandshakeMsg plant_handshake(const ProblemInstance& omega, const Isomorphism& psi);

// The cloud actor for one session.
class CloudSession {
 public:
  explicit CloudSession(const HandshakeMsg& handshake, SolverConfig cfg = {});

  // Throws Error("protocol") when steps are not strictly increasing.
  ControlMsg on_measurement(const MeasurementMsg& msg, StepDiagnostics* diag = nullptr);

 private:
  OutputFeedbackMpc mpc_;
  int last_step_ = -1;
};

struct SessionResult {
  std::vector<Eigen::VectorXd> x;  // x_0..x_T, lifted, original coordinates
  std::vector<Eigen::VectorXd> u;  // u_0..u_{T-1}
  std::vector<Eigen::VectorXd> y;  // y_0..y_{T-1}, lifted
  double cost = 0.0;
  std::vector<StepDiagnostics> diagnostics;
  Transcript transcript;
  bool completed = false;
  std::string failure;
};

// Stage cost summed over the closed loop with the horizon-start references.
double closed_loop_cost(const ControlObjective& obj, const std::vector<Eigen::VectorXd>& x,
                        const std::vector<Eigen::VectorXd>& u);

enum class Transport { kInProcess, kTcp };

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

std::optional<Endpoint> parse_endpoint(std::string_view text);

// Handshake followed by `steps` measurement/control rounds. With kTcp the
// plant connects to `cloud`. A solver failure ends the session early with
// completed = false; transport failures throw Error("transport").
SessionResult run_session(const ProblemInstance& omega, const Isomorphism& psi, int steps,
                          Transport transport = Transport::kInProcess,
                          const SolverConfig& cfg = {},
                          const std::optional<Endpoint>& cloud = std::nullopt);

// Non-private baseline: the same output-feedback MPC loop run directly on the
// original problem, without encoding or messages.
SessionResult run_direct(const ProblemInstance& omega, int steps, const SolverConfig& cfg = {});

}  // namespace cloak
