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


#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "cloak/group.hpp"
#include "cloak/io.hpp"
#include "cloak/linalg.hpp"
#include "cloak/privacy.hpp"
#include "cloak/protocol.hpp"
#include "test_support.hpp"

namespace cloak {
namespace {

TEST(PlantJson, RoundTrip) {
  Rng rng(201);
  for (int trial = 0; trial < 10; ++trial) {
    const BarePlant plant = random_plant(rng, 2 + trial % 3, 1 + trial % 2, 1 + trial % 2);
    const std::string text = io::plant_to_json(plant);
    const BarePlant back = io::plant_from_json(text);
    EXPECT_EQ(back.A, plant.A);
    EXPECT_EQ(back.B, plant.B);
    EXPECT_EQ(back.C, plant.C);
    EXPECT_EQ(back.c, plant.c);
    EXPECT_EQ(back.d, plant.d);
    EXPECT_EQ(io::plant_to_json(back), text);
  }
}

TEST(PlantJson, OffsetsDefaultToZero) {
  const BarePlant plant =
      io::plant_from_json(R"({"A": [[0.5, 1], [0, 0.5]], "B": [[0], [1]], "C": [[1, 0]]})");
  EXPECT_EQ(plant.c, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(plant.d, Eigen::VectorXd::Zero(1));
}

TEST(PlantJson, RejectsBadInput) {
  EXPECT_EQ(testing::error_check([] { io::plant_from_json("[1, 2]"); }), "dims");
  EXPECT_EQ(testing::error_check([] { io::plant_from_json("{\"A\": [[1]]"); }), "dims");
  EXPECT_EQ(testing::error_check([] { io::plant_from_json(R"({"A": [[1]], "B": [[1]]})"); }),
            "dims");
  EXPECT_EQ(testing::error_check([] {
              io::plant_from_json(R"({"A": [[1, 2], [3]], "B": [[1], [0]], "C": [[1, 0]]})");
            }),
            "dims");
}

TEST(ObjectiveJson, DemoFile) {
  const io::ObjectiveFile file =
      io::objective_from_json(io::read_file(CLOAK_DEMO_DIR "/objective.json"), 2, 1);
  const ControlObjective& obj = file.objective;
  EXPECT_EQ(obj.horizon, 10);
  EXPECT_EQ(obj.M.rows(), 4);
  EXPECT_EQ(obj.D.rows(), 6);
  ASSERT_EQ(obj.x_ref.size(), 11u);
  ASSERT_EQ(obj.u_ref.size(), 11u);
  EXPECT_EQ(obj.x_ref[7], (Eigen::VectorXd(3) << 1.0, 0.0, 1.0).finished());
  ASSERT_TRUE(file.x0.has_value());
  EXPECT_EQ(*file.x0, Eigen::VectorXd::Zero(2));
}

TEST(ObjectiveJson, RoundTrip) {
  Rng rng(202);
  testing::InstanceOptions opts;
  opts.n = 3;
  opts.m = 2;
  const ProblemInstance omega = testing::random_instance(rng, opts);
  const Eigen::VectorXd x0 = omega.x0.head(3);
  const std::string text = io::objective_to_json(omega.objective, x0);
  const io::ObjectiveFile back = io::objective_from_json(text, 3, 2);
  EXPECT_EQ(back.objective.M, omega.objective.M);
  EXPECT_EQ(back.objective.D, omega.objective.D);
  EXPECT_EQ(back.objective.x_ref, omega.objective.x_ref);
  EXPECT_EQ(back.objective.u_ref, omega.objective.u_ref);
  EXPECT_EQ(back.x0, std::optional<Eigen::VectorXd>(x0));
  EXPECT_EQ(io::objective_to_json(back.objective, back.x0), text);
}

TEST(ObjectiveJson, ValidatesAgainstThePlant) {
  const std::string text = io::read_file(CLOAK_DEMO_DIR "/objective.json");
  EXPECT_EQ(testing::error_check([&] { io::objective_from_json(text, 3, 1); }), "dims");
  EXPECT_EQ(testing::error_check([] {
              io::objective_from_json(R"({"M": [[1, 0], [0, -1]], "x_ref": [[0]], "u_ref": [[0]], "N": 1})",
                                      0, 1);
            }),
            "objective");
  EXPECT_EQ(testing::error_check([] { io::objective_from_json("not json", 2, 1); }), "objective");
}

TEST(KeyJson, RoundTrip) {
  Rng rng(203);
  const LiftedSystem sys = lift_system(random_plant(rng, 3, 2, 2));
  for (int scenario = 1; scenario <= 3; ++scenario) {
    const SampledKey key = sample_isomorphism(scenario, sys, 40 + scenario);
    const io::KeyFile file = io::to_key_file(key);
    const std::string text = io::key_to_json(file);
    const io::KeyFile back = io::key_from_json(text);
    EXPECT_EQ(back.psi.P, key.psi.P);
    EXPECT_EQ(back.psi.F, key.psi.F);
    EXPECT_EQ(back.psi.G, key.psi.G);
    EXPECT_EQ(back.psi.S, key.psi.S);
    EXPECT_EQ(back.scenario, scenario);
    EXPECT_EQ(back.seed, key.seed);
    EXPECT_EQ(back.stabilizer_dim, key.stabilizer_dim);
    EXPECT_EQ(io::key_to_json(back), text);
  }
}

TEST(KeyJson, RejectsMalformedKeys) {
  EXPECT_FALSE(testing::error_check([] { io::key_from_json("{}"); }).empty());
  EXPECT_FALSE(testing::error_check([] {
                 io::key_from_json(R"({"P": [[1, 0], [0, 0.5]], "F": [[0, 0]], "G": [[1]], "S": [[1, 0], [0, 1]]})");
               }).empty());
}

TEST(Reports, PrivacyReportFields) {
  const BarePlant plant = io::plant_from_json(io::read_file(CLOAK_DEMO_DIR "/system.json"));
  const PrivacyReport report =
      uncertainty_dimension(1, lift_system(plant), Eigen::MatrixXd(0, 4), 0);
  const std::string text = io::privacy_report_to_json(report);
  for (const char* key : {"\"uncertainty_dim\"", "\"dim_group\"", "\"scenario\"",
                          "\"controllability_indices\""}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
  EXPECT_NE(text.find("\"uncertainty_dim\":" + std::to_string(report.uncertainty_dim)),
            std::string::npos);
}

TEST(Reports, TrajectoryCsv) {
  const BarePlant plant = io::plant_from_json(io::read_file(CLOAK_DEMO_DIR "/system.json"));
  const io::ObjectiveFile file =
      io::objective_from_json(io::read_file(CLOAK_DEMO_DIR "/objective.json"), 2, 1);
  const ProblemInstance omega{lift_system(plant), file.objective, lift_point(*file.x0)};
  const SessionResult r = run_direct(omega, 4);
  const std::string csv = io::trajectory_csv(r, 2, 1, 1);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step,x_1,x_2,u_1,y_1");
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4);
  }
  EXPECT_EQ(rows, 4);
  EXPECT_NE(io::session_report_to_json(r, "direct").find("\"direct\""), std::string::npos);
}

TEST(Canonical, SortedCompactAndStable) {
  const std::string text = io::canonical_json(R"({"z": [1, 2.5e-3], "a": {"y": true, "b": null}})");
  EXPECT_EQ(text, R"({"a":{"b":null,"y":true},"z":[1,0.0025000000000000001]})");
  EXPECT_EQ(io::canonical_json(text), text);
  EXPECT_EQ(testing::error_check([] { io::canonical_json("{"); }), "serialization");
}

TEST(Files, WriteThenRead) {
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "cloak_io_test_roundtrip.json";
  io::write_file(path, "{\"k\":1}\n");
  EXPECT_EQ(io::read_file(path), "{\"k\":1}\n");
  std::filesystem::remove(path);
  EXPECT_EQ(testing::error_check([&] { io::read_file(path); }), "io");
}

}  // namespace
}  // namespace cloak
