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

#pragma once

#include <string>
#include <variant>
#include <vector>

#include "heraldsim/config.hpp"

namespace heraldsim::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitConvergence = 3;
inline constexpr int kExitIntegrity = 4;

using Cell = std::variant<std::monostate, double, std::string>;

struct Table {
  std::string name;  // file stem
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

/// 17 significant digits; throws NumericalIntegrityError on NaN or Inf.
std::string format_number(double v);
/// Short label for a swept value in a column name: 0.1, 0.05, 1.0.
std::string column_label(double v);
std::string to_csv(const Table& table);

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // how value is compared with threshold
  bool pass = false;
};

struct Gate {
  std::string name;
  double max_relative_change = 0.0;
  double tolerance = 1e-6;
  bool pass = false;
};

struct ScenarioResult {
  int exit_code = kExitOk;
  std::vector<Table> tables;
  std::vector<Check> checks;
  std::vector<Gate> gates;
  std::vector<std::string> log;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> files;  // filled by write_outputs
};

/// max_r |a_r - b_r| / max_r |a_r|; 0 when both are identically zero.
double relative_change(const std::vector<double>& a, const std::vector<double>& b);

/// Throws NumericalIntegrityError unless every recorded point has trace
/// error < 1e-8, Hermiticity defect < 1e-10 and min eigenvalue >= -1e-8.
/// `suffix` selects columns such as trace_err_1.
void require_integrity(const dynamics::TimeSeries& series, const std::string& suffix = "");

/// dt giving `points` equal record intervals over t_max with a whole number
/// of steps per interval and at most `dt_rule`.
double grid_dt(double t_max, double dt_rule, int points, int* stride);

ScenarioResult run_fig2(const RunConfig& config);
ScenarioResult run_fig3(const RunConfig& config);
ScenarioResult run_fig4(const RunConfig& config);
ScenarioResult run_herald(const RunConfig& config);
ScenarioResult run_validate(const RunConfig& config);
ScenarioResult run_custom(const RunConfig& config);

/// Writes CSV and/or JSON into config.output_dir and records the paths.
void write_outputs(const RunConfig& config, ScenarioResult& result);

/// Dispatches on config.scenario, then writes outputs.
ScenarioResult run_scenario(const RunConfig& config);

std::string git_describe();

}  // namespace heraldsim::harness
