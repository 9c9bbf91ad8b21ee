// Copyright 2026 The heraldsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "heraldsim/scenarios.hpp"

using namespace heraldsim;
using namespace heraldsim::harness;

TEST_CASE("config text overrides defaults") {
  const auto c = parse_config(
      "# comment\n"
      "scenario = herald\n"
      "params.kappa_2 = 0.5   # trailing comment\n"
      "params.gamma_1 = 0.2\n"
      "run.n_traj = 12\n"
      "run.seed = 42\n"
      "run.emit = both\n"
      "sweep.gamma = 0.1, 0.2\n"
      "schedule.t_drive = 2\n");
  CHECK(c.scenario == Scenario::herald);
  CHECK(c.params.nodes[1].kappa == 0.5);
  CHECK(c.params.nodes[0].gamma == 0.2);
  CHECK(c.n_traj == 12);
  CHECK(c.master_seed == 42);
  CHECK(c.emit == Emit::both);
  CHECK(c.sweep_gamma == std::vector<double>{0.1, 0.2});
  CHECK(c.schedule.t_drive == 2.0);
}

TEST_CASE("config errors name the problem") {
  CHECK_THROWS_AS(parse_config("no.such.key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("run.n_traj = 3\nrun.n_traj = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("params.kappa_1 = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("params.kappa_1 = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("scenario = fig9\n"), ConfigError);
  try {
    parse_config("\n\nbogus = 1\n");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("physical units resolve through the reduction") {
  const auto c = parse_config("params.unit_mode = physical-ueV\n");
  CHECK(c.params.nodes[0].lambda == doctest::Approx(1.0));
  CHECK(c.params.reference_rate_rad_s > 0.0);
  CHECK_FALSE(c.report.empty());
}

TEST_CASE("numbers print with 17 significant digits and never as NaN") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK_THROWS_AS(format_number(std::numeric_limits<double>::quiet_NaN()), NumericalIntegrityError);
  CHECK_THROWS_AS(format_number(INFINITY), NumericalIntegrityError);
  CHECK(column_label(1.0) == "1.0");
  CHECK(column_label(0.05) == "0.05");
}

TEST_CASE("tables render empty cells and reject ragged rows") {
  Table t{"x", {"a", "b", "c"}, {}};
  t.add_row({1.5, Cell{}, std::string("p,q")});
  CHECK(to_csv(t) == "a,b,c\r\n1.5,,\"p,q\"\r\n");
  CHECK_THROWS_AS(t.add_row({1.0}), StructuralError);
}

TEST_CASE("grid spacing and relative change") {
  int stride = 0;
  const double dt = grid_dt(3.0, 0.011, 60, &stride);
  CHECK(dt <= 0.011);
  CHECK(stride * 60 * dt == doctest::Approx(3.0));
  CHECK(relative_change({1.0, 2.0}, {1.0, 2.002}) == doctest::Approx(1e-3));
  CHECK(relative_change({0.0}, {0.0}) == 0.0);
}

TEST_CASE("herald scenario writes csv and json") {
  auto c = default_config();
  c.scenario = Scenario::herald;
  c.n_traj = 6;
  c.emit = Emit::both;
  c.output_dir = (std::filesystem::temp_directory_path() / "heraldsim_harness_test").string();
  std::filesystem::remove_all(c.output_dir);
  const auto r = run_scenario(c);
  CHECK(r.exit_code == kExitOk);
  CHECK(std::filesystem::exists(std::filesystem::path(c.output_dir) / "herald.csv"));
  CHECK(std::filesystem::exists(std::filesystem::path(c.output_dir) / "herald.json"));
  std::ifstream in(std::filesystem::path(c.output_dir) / "herald.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("index,seed,success,herald_port", 0) == 0);
}
