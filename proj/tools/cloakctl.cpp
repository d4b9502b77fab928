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


// cloakctl: key generation, private and direct closed-loop runs, privacy
// reports, instance verification and the TCP cloud service.

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <csignal>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cloak/error.hpp"
#include "cloak/group.hpp"
#include "cloak/io.hpp"
#include "cloak/privacy.hpp"
#include "cloak/protocol.hpp"
#include "cloak/sysmodel.hpp"
#include "cloak/transport.hpp"

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitTrivialStabilizer = 3;

constexpr double kCostTolerance = 1e-5;
constexpr double kFixedPointTolerance = 1e-8;
constexpr double kGroupTolerance = 1e-9;

struct Options {
  std::string system;
  std::string objective;
  std::string key;
  std::string out;
  std::string transport = "in-process";
  std::string listen = "127.0.0.1:0";
  std::string connect;
  int scenario = 1;
  std::uint64_t seed = 0;
  int steps = 30;
  int horizon = 0;
  int side_k = 0;
  int sessions = 0;
};

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("cloakctl");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("CLOAKCTL_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

cloak::BarePlant load_plant(const Options& opt) {
  if (opt.system.empty()) throw cloak::Error("usage", "--system is required");
  return cloak::io::plant_from_json(cloak::io::read_file(opt.system));
}

cloak::ProblemInstance load_instance(const Options& opt, const cloak::BarePlant& plant) {
  if (opt.objective.empty()) throw cloak::Error("usage", "--objective is required");
  std::string text = cloak::io::read_file(opt.objective);
  if (opt.horizon > 0) {
    Json j = Json::parse(text);
    j["N"] = opt.horizon;
    text = j.dump();
  }
  const cloak::io::ObjectiveFile file =
      cloak::io::objective_from_json(text, plant.n(), plant.m());
  const Eigen::VectorXd x0 = file.x0.value_or(Eigen::VectorXd::Zero(plant.n()));
  return {cloak::lift_system(plant), file.objective, cloak::lift_point(x0)};
}

Eigen::MatrixXd load_constraints(const Options& opt, const cloak::BarePlant& plant) {
  if (opt.objective.empty()) return Eigen::MatrixXd(0, plant.n() + 1 + plant.m());
  return load_instance(opt, plant).objective.D;
}

cloak::io::KeyFile load_key(const Options& opt, const cloak::LiftedSystem& sys) {
  if (opt.key.empty()) {
    spdlog::info("no --key given; sampling scenario {} key with seed {}", opt.scenario,
                 opt.seed);
    const cloak::SampledKey key = cloak::sample_isomorphism(opt.scenario, sys, opt.seed);
    if (key.trivial_stabilizer) spdlog::warn("trivial stabilizer: the sampled key is the identity");
    return cloak::io::to_key_file(key);
  }
  cloak::io::KeyFile key = cloak::io::key_from_json(cloak::io::read_file(opt.key));
  cloak::validate_isomorphism(key.psi, sys.n(), sys.m(), sys.p());
  return key;
}

void emit(const Options& opt, const std::string& name, const std::string& content) {
  if (opt.out.empty()) {
    std::cout << content << '\n';
  } else {
    const fs::path path = fs::path(opt.out) / name;
    cloak::io::write_file(path, content);
    spdlog::info("wrote {}", path.string());
  }
}

// A single-session cloud service running as a child process. The child
// announces its port on the first stdout line.
class ServerProcess {
 public:
  ServerProcess() {
    int fds[2];
    if (::pipe(fds) != 0) throw cloak::Error("transport", "pipe failed");
    const std::string self = fs::read_symlink("/proc/self/exe").string();
    pid_ = ::fork();
    if (pid_ < 0) throw cloak::Error("transport", "fork failed");
    if (pid_ == 0) {
      ::dup2(fds[1], STDOUT_FILENO);
      ::close(fds[0]);
      ::close(fds[1]);
      ::execl(self.c_str(), self.c_str(), "serve", "--listen", "127.0.0.1:0", "--sessions", "1",
              static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(fds[1]);
    std::string line;
    char ch = 0;
    while (::read(fds[0], &ch, 1) == 1 && ch != '\n') line.push_back(ch);
    ::close(fds[0]);
    const auto at = line.rfind(' ');
    const auto ep = cloak::parse_endpoint(at == std::string::npos ? line : line.substr(at + 1));
    if (!ep) {
      terminate();
      throw cloak::Error("transport", "cloud subprocess did not report a port");
    }
    endpoint_ = *ep;
    spdlog::info("spawned cloud service pid {} on {}:{}", pid_, endpoint_.host, endpoint_.port);
  }

  ~ServerProcess() { terminate(); }
  ServerProcess(const ServerProcess&) = delete;
  ServerProcess& operator=(const ServerProcess&) = delete;

  const cloak::Endpoint& endpoint() const { return endpoint_; }

 private:
  void terminate() {
    if (pid_ <= 0) return;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ::kill(pid_, SIGTERM);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }

  pid_t pid_ = -1;
  cloak::Endpoint endpoint_;
};

cloak::Transport parse_transport(const std::string& name) {
  if (name == "in-process") return cloak::Transport::kInProcess;
  if (name == "tcp") return cloak::Transport::kTcp;
  throw cloak::Error("usage", "transport must be in-process or tcp");
}

cloak::SessionResult run_private(const Options& opt, const cloak::ProblemInstance& omega,
                                 const cloak::Isomorphism& psi) {
  const cloak::Transport transport = parse_transport(opt.transport);
  if (transport == cloak::Transport::kInProcess) {
    return cloak::run_session(omega, psi, opt.steps);
  }
  if (!opt.connect.empty()) {
    const auto ep = cloak::parse_endpoint(opt.connect);
    if (!ep) throw cloak::Error("usage", "--connect expects host:port");
    return cloak::run_session(omega, psi, opt.steps, transport, {}, *ep);
  }
  ServerProcess server;
  return cloak::run_session(omega, psi, opt.steps, transport, {}, server.endpoint());
}

int cmd_keygen(const Options& opt) {
  const cloak::LiftedSystem sys = cloak::lift_system(load_plant(opt));
  const cloak::SampledKey key = cloak::sample_isomorphism(opt.scenario, sys, opt.seed);
  emit(opt, "key.json", cloak::io::key_to_json(cloak::io::to_key_file(key)));
  if (key.trivial_stabilizer) {
    spdlog::warn("trivial stabilizer: scenario 3 has no nontrivial symmetry; wrote the identity key");
    return kExitTrivialStabilizer;
  }
  return kExitOk;
}

void write_session(const Options& opt, const cloak::SessionResult& result,
                   const cloak::ProblemInstance& omega, const char* mode) {
  const cloak::LiftedSystem& sys = omega.system;
  if (opt.out.empty()) {
    std::cout << cloak::io::session_report_to_json(result, mode) << '\n';
    return;
  }
  const fs::path dir(opt.out);
  cloak::io::write_file(dir / "report.json", cloak::io::session_report_to_json(result, mode));
  cloak::io::write_file(dir / "trajectory.csv",
                        cloak::io::trajectory_csv(result, sys.n(), sys.m(), sys.p()));
  if (!result.transcript.entries.empty()) {
    cloak::io::write_file(dir / "transcript.jsonl", result.transcript.to_jsonl());
  }
  spdlog::info("wrote session files to {}", dir.string());
}

int cmd_simulate(const Options& opt) {
  const cloak::BarePlant plant = load_plant(opt);
  const cloak::ProblemInstance omega = load_instance(opt, plant);
  const cloak::io::KeyFile key = load_key(opt, omega.system);
  const cloak::SessionResult result = run_private(opt, omega, key.psi);
  write_session(opt, result, omega, "private");
  if (!result.completed) {
    spdlog::error("session failed: {}", result.failure);
    return kExitFailure;
  }
  spdlog::info("closed-loop cost {:.10g} over {} steps", result.cost, opt.steps);
  return kExitOk;
}

int cmd_direct(const Options& opt) {
  const cloak::BarePlant plant = load_plant(opt);
  const cloak::ProblemInstance omega = load_instance(opt, plant);
  const cloak::SessionResult result = cloak::run_direct(omega, opt.steps);
  write_session(opt, result, omega, "direct");
  if (!result.completed) {
    spdlog::error("direct run failed: {}", result.failure);
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_privacy_report(const Options& opt) {
  const cloak::BarePlant plant = load_plant(opt);
  const Eigen::MatrixXd D = load_constraints(opt, plant);
  const cloak::PrivacyReport report =
      cloak::uncertainty_dimension(opt.scenario, cloak::lift_system(plant), D, opt.side_k);
  emit(opt, "privacy.json", cloak::io::privacy_report_to_json(report));
  if (!report.formula_oracle_agree) spdlog::warn("closed-form dimension differs from the oracle");
  return kExitOk;
}

struct Check {
  std::string name;
  bool ok = false;
  std::string detail;
};

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

std::vector<Check> verify_instance(const Options& opt) {
  std::vector<Check> checks;
  const cloak::BarePlant plant = load_plant(opt);
  cloak::validate_plant(plant);
  const cloak::ProblemInstance omega = load_instance(opt, plant);
  const cloak::LiftedSystem& sys = omega.system;
  const cloak::io::KeyFile key = load_key(opt, sys);
  const cloak::Isomorphism& psi = key.psi;
  const int n = sys.n(), m = sys.m(), p = sys.p();
  checks.push_back({"load", true, "system, objective and key parsed"});

  const cloak::Isomorphism round = cloak::compose(psi, cloak::inverse(psi));
  const cloak::Isomorphism e = cloak::identity_isomorphism(n, m, p);
  const double group_err =
      std::max({max_abs_diff(round.P, e.P), max_abs_diff(round.F, e.F),
                max_abs_diff(round.G, e.G), max_abs_diff(round.S, e.S)});
  const double group_tol = kGroupTolerance * cloak::key_condition(psi);
  checks.push_back({"group-inverse", group_err <= group_tol,
                    fmt::format("max |psi psi^-1 - e| = {:.2e} (tol {:.2e})", group_err, group_tol)});

  if (key.scenario == 3) {
    const double r = cloak::fixed_point_residual(psi, sys);
    checks.push_back({"fixed-point", r <= kFixedPointTolerance,
                      fmt::format("residual {:.2e} (tol {:.0e})", r, kFixedPointTolerance)});
  }

  const cloak::ProblemInstance tomega = cloak::act_on_instance(psi, omega);
  const bool same_handshake = cloak::to_wire(cloak::plant_handshake(omega, psi)) ==
                              cloak::to_wire(cloak::plant_handshake(tomega, e));
  checks.push_back({"handshake-replay", same_handshake,
                    same_handshake ? "byte-identical" : "handshakes differ"});

  const cloak::SessionResult priv = cloak::run_session(omega, psi, opt.steps);
  const cloak::SessionResult replay = cloak::run_session(tomega, e, opt.steps);
  const cloak::SessionResult direct = cloak::run_direct(omega, opt.steps);
  const bool completed = priv.completed && replay.completed && direct.completed;
  checks.push_back({"sessions-complete", completed,
                    completed ? fmt::format("{} steps", opt.steps)
                              : priv.failure + replay.failure + direct.failure});
  const bool same = completed && cloak::indistinguishable(priv.transcript, replay.transcript);
  checks.push_back({"indistinguishability", same,
                    same ? "transcripts agree at 12 significant digits" : "transcripts differ"});
  const double rel = std::abs(priv.cost - direct.cost) / std::max(std::abs(direct.cost), 1e-12);
  checks.push_back({"cost-equivalence", completed && rel <= kCostTolerance,
                    fmt::format("private {:.10g}, direct {:.10g}, rel {:.2e} (tol {:.0e})",
                                priv.cost, direct.cost, rel, kCostTolerance)});

  const cloak::PrivacyReport report = cloak::uncertainty_dimension(key.scenario, sys,
                                                                   omega.objective.D, 0);
  checks.push_back({"formula-oracle", report.formula_oracle_agree,
                    fmt::format("pair formula {}, oracle {}", report.dim_stabilizer_pair,
                                report.dim_stabilizer_pair_oracle)});
  if (report.trivial_stabilizer_certified) {
    const int dim = cloak::stabilizer_omega_dim(sys, omega.objective.D);
    checks.push_back({"trivial-stabilizer", dim == 0,
                      fmt::format("certified trivial, numerical dimension {}", dim)});
  }
  return checks;
}

int cmd_verify(const Options& opt) {
  std::vector<Check> checks;
  try {
    checks = verify_instance(opt);
  } catch (const cloak::Error& err) {
    checks.push_back({err.check(), false, err.what()});
  }
  bool ok = true;
  Json list = Json::array();
  for (const Check& c : checks) {
    ok = ok && c.ok;
    list.push_back({{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
    if (!c.ok) spdlog::error("check {} failed: {}", c.name, c.detail);
  }
  emit(opt, "verify.json", Json{{"ok", ok}, {"checks", list}}.dump());
  return ok ? kExitOk : kExitFailure;
}

int cmd_serve(const Options& opt) {
  const auto ep = cloak::parse_endpoint(opt.listen);
  if (!ep) throw cloak::Error("usage", "--listen expects host:port");
  cloak::CloudServer server(*ep);
  std::cout << "listening on " << ep->host << ':' << server.port() << std::endl;
  server.serve(opt.sessions);
  spdlog::info("served {} sessions", server.sessions_served());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  Options opt;
  CLI::App app{"cloak: private model predictive control through system isomorphisms"};
  app.require_subcommand(1);

  const auto add_system = [&](CLI::App* cmd) {
    cmd->add_option("--system", opt.system, "Plant JSON file")->required()->check(CLI::ExistingFile);
  };
  const auto add_objective = [&](CLI::App* cmd, bool required) {
    auto* o = cmd->add_option("--objective", opt.objective, "Objective JSON file")
                  ->check(CLI::ExistingFile);
    if (required) o->required();
    cmd->add_option("--horizon", opt.horizon, "Override the prediction horizon N")
        ->check(CLI::PositiveNumber);
  };
  const auto add_key = [&](CLI::App* cmd) {
    cmd->add_option("--key", opt.key, "Key JSON file (sampled from --scenario/--seed if absent)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--scenario", opt.scenario, "Privacy scenario")->check(CLI::Range(1, 3));
    cmd->add_option("--seed", opt.seed, "Key sampling seed");
  };
  const auto add_run = [&](CLI::App* cmd) {
    cmd->add_option("--steps", opt.steps, "Closed-loop steps T")->check(CLI::PositiveNumber);
  };
  const auto add_out = [&](CLI::App* cmd) {
    cmd->add_option("--out", opt.out, "Output directory (stdout if absent)");
  };

  auto* keygen = app.add_subcommand("keygen", "Sample a secret isomorphism");
  add_system(keygen);
  keygen->add_option("--scenario", opt.scenario, "Privacy scenario")->check(CLI::Range(1, 3));
  keygen->add_option("--seed", opt.seed, "Sampling seed");
  add_out(keygen);

  auto* simulate = app.add_subcommand("simulate", "Run the private closed loop");
  add_system(simulate);
  add_objective(simulate, true);
  add_key(simulate);
  add_run(simulate);
  simulate->add_option("--transport", opt.transport, "in-process or tcp")
      ->check(CLI::IsMember({"in-process", "tcp"}));
  simulate->add_option("--connect", opt.connect, "External cloud host:port (tcp)");
  add_out(simulate);

  auto* direct = app.add_subcommand("direct", "Run the non-private baseline loop");
  add_system(direct);
  add_objective(direct, true);
  add_run(direct);
  add_out(direct);

  auto* privacy = app.add_subcommand("privacy-report", "Report uncertainty-set dimensions");
  add_system(privacy);
  add_objective(privacy, false);
  privacy->add_option("--scenario", opt.scenario, "Privacy scenario")->check(CLI::Range(1, 3));
  privacy->add_option("--side-k", opt.side_k, "Rank of the adversary's side knowledge")
      ->check(CLI::NonNegativeNumber);
  add_out(privacy);

  auto* verify = app.add_subcommand("verify", "Check invariants on one instance");
  add_system(verify);
  add_objective(verify, true);
  add_key(verify);
  add_run(verify);
  add_out(verify);

  auto* serve = app.add_subcommand("serve", "Serve cloud sessions over TCP");
  serve->add_option("--listen", opt.listen, "host:port (port 0 picks a free port)");
  serve->add_option("--sessions", opt.sessions, "Exit after this many sessions (0: run forever)")
      ->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*keygen) return cmd_keygen(opt);
    if (*simulate) return cmd_simulate(opt);
    if (*direct) return cmd_direct(opt);
    if (*privacy) return cmd_privacy_report(opt);
    if (*verify) return cmd_verify(opt);
    if (*serve) return cmd_serve(opt);
  } catch (const cloak::Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
