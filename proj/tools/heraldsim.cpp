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

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "heraldsim/scenarios.hpp"

namespace hs = heraldsim;
namespace hh = heraldsim::harness;

namespace {

int run(int argc, char** argv) {
  CLI::App app{"heraldsim: heralded entanglement of two cavity-coupled spins"};
  app.set_version_flag("--version", hh::git_describe());

  std::string scenario;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> n_traj;
  std::optional<std::string> emit;
  bool list_keys = false;

  app.add_option("scenario", scenario, "fig2 | fig3 | fig4 | herald | validate | custom");
  app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--n-traj", n_traj, "trajectories per ensemble")->check(CLI::PositiveNumber);
  app.add_option("--emit", emit, "csv | json | both");
  app.add_flag("--list-keys", list_keys, "print every configuration key and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? hh::kExitOk : hh::kExitConfig;
  }

  if (list_keys) {
    for (const auto& [key, help] : hh::config_keys()) std::cout << key << "  " << help << '\n';
    return hh::kExitOk;
  }

  hh::RunConfig config = config_path.empty() ? hh::default_config() : hh::load_config(config_path);
  if (!scenario.empty()) config.scenario = hh::parse_scenario(scenario);
  if (seed) config.master_seed = *seed;
  if (out) config.output_dir = *out;
  if (n_traj) config.n_traj = *n_traj;
  if (emit) config.emit = hh::parse_emit(*emit);

  for (const auto& line : config.report) std::cerr << "config: " << line << '\n';
  hh::ScenarioResult result = hh::run_scenario(config);
  for (const auto& line : result.log) std::cerr << line << '\n';
  for (const auto& c : result.checks) {
    std::cout << (c.pass ? "ok   " : "FAIL ") << c.name << ": " << c.value << ' ' << c.relation
              << ' ' << c.threshold << '\n';
  }
  for (const auto& path : result.files) std::cout << "wrote " << path << '\n';
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const hh::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return hh::kExitConfig;
  } catch (const hs::model::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return hh::kExitConfig;
  } catch (const hs::StepSizeError& e) {
    std::cerr << "step size error: " << e.what() << '\n';
    return hh::kExitConfig;
  } catch (const hs::TruncationError& e) {
    std::cerr << "truncation error: " << e.what() << '\n';
    return hh::kExitConfig;
  } catch (const hs::ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << '\n';
    return hh::kExitConvergence;
  } catch (const hs::NumericalIntegrityError& e) {
    std::cerr << "numerical integrity error: " << e.what() << '\n';
    return hh::kExitIntegrity;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return hh::kExitIntegrity;
  }
}
