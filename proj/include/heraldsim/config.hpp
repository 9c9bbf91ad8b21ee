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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "heraldsim/model.hpp"
#include "heraldsim/protocol.hpp"

namespace heraldsim::harness {

class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Scenario { fig2, fig3, fig4, herald, validate, custom };
enum class Emit { csv, json, both };

const char* to_string(Scenario s);
Scenario parse_scenario(const std::string& name);  // throws ConfigError
const char* to_string(Emit e);
Emit parse_emit(const std::string& name);

struct RunConfig {
  Scenario scenario = Scenario::fig3;
  model::ModelParams params;  // always reduced units after parsing
  /// Physical inputs, kept for provenance and for fig4 when given.
  std::array<model::PhysicalNode, 2> physical = model::inas_physical_nodes();
  double gamma_trion_mhz = model::kInasTrionDecayMhz;
  protocol::ProtocolSchedule schedule;
  int n_traj = 1000;
  std::uint64_t master_seed = 20260419;
  std::string output_dir = "results";
  Emit emit = Emit::csv;
  bool convergence_gates = true;

  std::vector<double> sweep_t_drive{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  std::vector<double> sweep_gamma{0.01, 0.05, 0.1, 0.5, 1.0};
  std::vector<double> sweep_kappa{0.1, 0.2, 0.5, 1.0};
  double fig2_t_max = 3.0;
  int fig2_points = 60;
  double fig2_gamma = 0.0;
  double fig4_t_max = 10.0;
  int fig4_points = 500;

  std::vector<std::string> report;  // resolution report, one line per key
};

/// Defaults: fig3 preset, lambda = kappa = 1, Gamma = 0.05 on both nodes.
RunConfig default_config();

/// Flat `key = value` text; `#` starts a comment. Unknown keys, malformed
/// numbers and parameter-invariant violations raise ConfigError naming the
/// line.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Every recognised key with a one-line description.
std::vector<std::pair<std::string, std::string>> config_keys();

}  // namespace heraldsim::harness
