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

#include "heraldsim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

namespace heraldsim::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

[[noreturn]] void fail(const std::string& key, const Entry& e, const std::string& what) {
  std::ostringstream msg;
  msg << "line " << e.line << ": " << key << " = '" << e.value << "': " << what;
  throw ConfigError(msg.str());
}

double to_double(const std::string& key, const Entry& e) {
  const std::string& v = e.value;
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
    fail(key, e, "not a finite number");
  }
  return out;
}

long long to_integer(const std::string& key, const Entry& e) {
  const std::string& v = e.value;
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) fail(key, e, "not an integer");
  return out;
}

bool to_bool(const std::string& key, const Entry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  fail(key, e, "expected true or false");
}

std::vector<double> to_list(const std::string& key, const Entry& e) {
  std::vector<double> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(to_double(key, Entry{trim(item), e.line}));
  }
  if (out.empty()) fail(key, e, "empty list");
  return out;
}

// Node-indexed keys: params.<name>_<1|2>.
const std::vector<std::string> kNodeFields{"lambda",      "kappa",      "gamma",
                                           "omega_plus",  "omega_minus", "g_plus",
                                           "g_minus",     "delta_plus", "delta_minus"};

double& reduced_field(model::NodeParams& n, const std::string& f) {
  if (f == "lambda") return n.lambda;
  if (f == "kappa") return n.kappa;
  if (f == "gamma") return n.gamma;
  if (f == "omega_plus") return n.omega_plus;
  if (f == "omega_minus") return n.omega_minus;
  if (f == "g_plus") return n.g_plus;
  if (f == "g_minus") return n.g_minus;
  if (f == "delta_plus") return n.delta_plus;
  return n.delta_minus;
}

double* physical_field(model::PhysicalNode& n, const std::string& f) {
  if (f == "kappa") return &n.kappa_mhz;
  if (f == "gamma") return &n.gamma_mhz;
  if (f == "omega_plus") return &n.omega_plus_ueV;
  if (f == "omega_minus") return &n.omega_minus_ueV;
  if (f == "g_plus") return &n.g_plus_ueV;
  if (f == "g_minus") return &n.g_minus_ueV;
  if (f == "delta_plus") return &n.delta_plus_ueV;
  if (f == "delta_minus") return &n.delta_minus_ueV;
  return nullptr;  // lambda is derived
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::fig2: return "fig2";
    case Scenario::fig3: return "fig3";
    case Scenario::fig4: return "fig4";
    case Scenario::herald: return "herald";
    case Scenario::validate: return "validate";
    case Scenario::custom: return "custom";
  }
  return "?";
}

Scenario parse_scenario(const std::string& name) {
  for (Scenario s : {Scenario::fig2, Scenario::fig3, Scenario::fig4, Scenario::herald,
                     Scenario::validate, Scenario::custom}) {
    if (name == to_string(s)) return s;
  }
  throw ConfigError("unknown scenario '" + name +
                    "' (expected fig2, fig3, fig4, herald, validate or custom)");
}

const char* to_string(Emit e) {
  switch (e) {
    case Emit::csv: return "csv";
    case Emit::json: return "json";
    case Emit::both: return "both";
  }
  return "?";
}

Emit parse_emit(const std::string& name) {
  if (name == "csv") return Emit::csv;
  if (name == "json") return Emit::json;
  if (name == "both") return Emit::both;
  throw ConfigError("unknown emit mode '" + name + "' (expected csv, json or both)");
}

RunConfig default_config() {
  RunConfig c;
  for (auto& n : c.params.nodes) {
    n.lambda = 1.0;
    n.kappa = 1.0;
    n.gamma = 0.05;
  }
  c.schedule.t_drive = 1.0;
  return c;
}

std::vector<std::pair<std::string, std::string>> config_keys() {
  std::vector<std::pair<std::string, std::string>> keys{
      {"scenario", "fig2 | fig3 | fig4 | herald | validate | custom"},
      {"params.unit_mode", "reduced | physical-ueV"},
      {"params.dot_decoherence", "relaxation | dephasing"},
      {"params.gamma_T", "trion decay (reduced rate, or MHz in physical mode)"},
      {"params.n_fock", "Fock cutoff per cavity, 0 for the cutoff policy"},
  };
  for (const auto& f : kNodeFields) {
    for (int i = 1; i <= 2; ++i) {
      keys.emplace_back("params." + f + "_" + std::to_string(i),
                        "node " + std::to_string(i) + " " + f +
                            " (reduced rate; ueV or MHz in physical mode)");
    }
  }
  const std::vector<std::pair<std::string, std::string>> rest{
      {"schedule.t_drive", "drive duration (1/lambda_1)"},
      {"schedule.t_ringdown", "ring-down duration, <= 0 for 20/min(kappa)"},
      {"schedule.dt", "time step, <= 0 for the step rule"},
      {"schedule.record_stride", "steps between recorded points"},
      {"schedule.ringdown_decoherence", "keep dot decoherence on during ring-down"},
      {"run.n_traj", "trajectories per ensemble"},
      {"run.seed", "master seed"},
      {"run.output_dir", "output directory"},
      {"run.emit", "csv | json | both"},
      {"run.convergence_gates", "run dt-halving and cutoff-doubling gates"},
      {"sweep.t_drive", "comma list of drive durations (fig3)"},
      {"sweep.gamma", "comma list of Gamma/lambda values (fig3)"},
      {"sweep.kappa", "comma list of kappa/lambda values (fig2)"},
      {"fig2.t_max", "fig2 time window"},
      {"fig2.points", "fig2 recorded intervals"},
      {"fig2.gamma", "dot decoherence used for fig2"},
      {"fig4.t_max", "fig4 time window (1/lambda)"},
      {"fig4.points", "fig4 recorded intervals"},
  };
  keys.insert(keys.end(), rest.begin(), rest.end());
  return keys;
}

RunConfig parse_config(const std::string& text) {
  std::map<std::string, Entry> entries;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    Entry e{trim(line.substr(eq + 1)), line_no};
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (entries.count(key)) {
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    bool known = false;
    for (const auto& [k, _] : config_keys()) known = known || (k == key);
    if (!known) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    entries.emplace(key, std::move(e));
  }

  RunConfig c = default_config();
  auto take = [&](const std::string& key, const std::function<void(const Entry&)>& apply) {
    const auto it = entries.find(key);
    if (it == entries.end()) return;
    apply(it->second);
    c.report.push_back(key + " = " + it->second.value);
  };

  take("scenario", [&](const Entry& e) {
    try {
      c.scenario = parse_scenario(e.value);
    } catch (const ConfigError& err) {
      fail("scenario", e, err.what());
    }
  });

  bool physical = false;
  take("params.unit_mode", [&](const Entry& e) {
    if (e.value == "physical-ueV" || e.value == "physical-µeV") {
      physical = true;
    } else if (e.value != "reduced") {
      fail("params.unit_mode", e, "expected reduced or physical-ueV");
    }
  });
  take("params.dot_decoherence", [&](const Entry& e) {
    if (e.value == "relaxation") {
      c.params.dot_decoherence = model::DotDecoherence::relaxation;
    } else if (e.value == "dephasing") {
      c.params.dot_decoherence = model::DotDecoherence::dephasing;
    } else {
      fail("params.dot_decoherence", e, "expected relaxation or dephasing");
    }
  });

  if (physical) {
    bool kappa_given[2] = {false, false};
    for (const auto& f : kNodeFields) {
      for (int i = 0; i < 2; ++i) {
        const std::string key = "params." + f + "_" + std::to_string(i + 1);
        take(key, [&](const Entry& e) {
          double* slot = physical_field(c.physical[i], f);
          if (slot == nullptr) fail(key, e, "lambda is derived from omega g / delta in physical mode");
          *slot = to_double(key, e);
          if (f == "kappa") kappa_given[i] = true;
        });
      }
    }
    take("params.gamma_T", [&](const Entry& e) { c.gamma_trion_mhz = to_double("params.gamma_T", e); });
    // kappa defaults to lambda of its own node
    for (int i = 0; i < 2; ++i) {
      if (kappa_given[i]) continue;
      auto& n = c.physical[i];
      if (n.delta_plus_ueV > 0.0) {
        const auto lam = model::lambda_from_physical(n.omega_plus_ueV, n.g_plus_ueV, n.delta_plus_ueV);
        n.kappa_mhz = lam.rad_per_s / (2.0 * std::numbers::pi) / 1e6;
      }
    }
    const int n_fock = c.params.n_fock;
    const auto decoherence = c.params.dot_decoherence;
    for (int i = 0; i < 2; ++i) {
      const auto& n = c.physical[i];
      if (!(n.delta_plus_ueV > 0.0) || !(n.delta_minus_ueV > 0.0)) {
        throw ConfigError("params.delta_plus_" + std::to_string(i + 1) + " and delta_minus_" +
                          std::to_string(i + 1) + " must be > 0 in physical mode");
      }
      for (double v : {n.kappa_mhz, n.gamma_mhz, n.omega_plus_ueV, n.omega_minus_ueV, n.g_plus_ueV,
                       n.g_minus_ueV}) {
        if (v < 0.0) {
          throw ConfigError("node " + std::to_string(i + 1) +
                            ": rates and couplings must be >= 0 (invariant: all rates >= 0)");
        }
      }
    }
    if (c.gamma_trion_mhz < 0.0) throw ConfigError("params.gamma_T must be >= 0");
    try {
      c.params = model::reduce_physical(c.physical, c.gamma_trion_mhz);
    } catch (const Error& err) {
      throw ConfigError(std::string("physical parameters: ") + err.what());
    }
    c.params.n_fock = n_fock;
    c.params.dot_decoherence = decoherence;
    const double unit_ueV = model::rad_per_s_to_ueV(c.params.reference_rate_rad_s);
    c.report.push_back("resolved lambda_1 = " + fmt(unit_ueV) + " ueV = 1 reduced unit (" +
                       fmt(c.params.reference_rate_rad_s / (2.0 * std::numbers::pi) / 1e9) + " GHz x 2pi)");
    for (int i = 0; i < 2; ++i) {
      c.report.push_back("resolved node " + std::to_string(i + 1) + ": lambda = " +
                         fmt(c.params.nodes[i].lambda) + ", kappa = " + fmt(c.params.nodes[i].kappa) +
                         ", gamma = " + fmt(c.params.nodes[i].gamma));
    }
  } else {
    for (const auto& f : kNodeFields) {
      for (int i = 0; i < 2; ++i) {
        const std::string key = "params." + f + "_" + std::to_string(i + 1);
        take(key, [&](const Entry& e) { reduced_field(c.params.nodes[i], f) = to_double(key, e); });
      }
    }
    take("params.gamma_T", [&](const Entry& e) { c.params.gamma_trion = to_double("params.gamma_T", e); });
    if (c.params.nodes[0].lambda != 1.0) {
      c.report.push_back("note: lambda_1 = " + fmt(c.params.nodes[0].lambda) +
                         " (time is measured in the unit it was given in)");
    }
  }

  take("params.n_fock", [&](const Entry& e) {
    const long long n = to_integer("params.n_fock", e);
    if (n != 0 && n < 2) fail("params.n_fock", e, "must be 0 (policy) or >= 2");
    c.params.n_fock = static_cast<int>(n);
  });

  take("schedule.t_drive", [&](const Entry& e) {
    c.schedule.t_drive = to_double("schedule.t_drive", e);
    if (c.schedule.t_drive < 0.0) fail("schedule.t_drive", e, "must be >= 0");
  });
  take("schedule.t_ringdown", [&](const Entry& e) { c.schedule.t_ringdown = to_double("schedule.t_ringdown", e); });
  take("schedule.dt", [&](const Entry& e) { c.schedule.dt = to_double("schedule.dt", e); });
  take("schedule.record_stride", [&](const Entry& e) {
    const long long n = to_integer("schedule.record_stride", e);
    if (n < 1) fail("schedule.record_stride", e, "must be >= 1");
    c.schedule.record_stride = static_cast<int>(n);
  });
  take("schedule.ringdown_decoherence", [&](const Entry& e) {
    c.schedule.ringdown_decoherence = to_bool("schedule.ringdown_decoherence", e);
  });

  take("run.n_traj", [&](const Entry& e) {
    const long long n = to_integer("run.n_traj", e);
    if (n < 1) fail("run.n_traj", e, "must be >= 1");
    c.n_traj = static_cast<int>(n);
  });
  take("run.seed", [&](const Entry& e) {
    const long long n = to_integer("run.seed", e);
    if (n < 0) fail("run.seed", e, "must be >= 0");
    c.master_seed = static_cast<std::uint64_t>(n);
  });
  take("run.output_dir", [&](const Entry& e) {
    if (e.value.empty()) fail("run.output_dir", e, "must not be empty");
    c.output_dir = e.value;
  });
  take("run.emit", [&](const Entry& e) {
    try {
      c.emit = parse_emit(e.value);
    } catch (const ConfigError& err) {
      fail("run.emit", e, err.what());
    }
  });
  take("run.convergence_gates", [&](const Entry& e) { c.convergence_gates = to_bool("run.convergence_gates", e); });

  take("sweep.t_drive", [&](const Entry& e) { c.sweep_t_drive = to_list("sweep.t_drive", e); });
  take("sweep.gamma", [&](const Entry& e) { c.sweep_gamma = to_list("sweep.gamma", e); });
  take("sweep.kappa", [&](const Entry& e) { c.sweep_kappa = to_list("sweep.kappa", e); });
  take("fig2.t_max", [&](const Entry& e) { c.fig2_t_max = to_double("fig2.t_max", e); });
  take("fig2.points", [&](const Entry& e) { c.fig2_points = static_cast<int>(to_integer("fig2.points", e)); });
  take("fig2.gamma", [&](const Entry& e) { c.fig2_gamma = to_double("fig2.gamma", e); });
  take("fig4.t_max", [&](const Entry& e) { c.fig4_t_max = to_double("fig4.t_max", e); });
  take("fig4.points", [&](const Entry& e) { c.fig4_points = static_cast<int>(to_integer("fig4.points", e)); });

  for (double t : c.sweep_t_drive) {
    if (t <= 0.0) throw ConfigError("sweep.t_drive entries must be > 0");
  }
  for (double g : c.sweep_gamma) {
    if (g < 0.0) throw ConfigError("sweep.gamma entries must be >= 0 (invariant: all rates >= 0)");
  }
  for (double k : c.sweep_kappa) {
    if (k <= 0.0) throw ConfigError("sweep.kappa entries must be > 0");
  }
  if (c.fig2_t_max <= 0.0 || c.fig4_t_max <= 0.0) throw ConfigError("t_max values must be > 0");
  if (c.fig2_points < 1 || c.fig4_points < 1) throw ConfigError("points must be >= 1");
  if (c.fig2_gamma < 0.0) throw ConfigError("fig2.gamma must be >= 0 (invariant: all rates >= 0)");

  // Model invariants, reported with the key that carries them.
  for (int i = 0; i < 2; ++i) {
    const auto& n = c.params.nodes[i];
    const std::pair<const char*, double> rates[] = {{"lambda", n.lambda}, {"kappa", n.kappa},
                                                    {"gamma", n.gamma}};
    for (const auto& [name, v] : rates) {
      if (v < 0.0) {
        const std::string key = std::string("params.") + name + "_" + std::to_string(i + 1);
        const auto it = entries.find(key);
        std::ostringstream msg;
        if (it != entries.end()) msg << "line " << it->second.line << ": ";
        msg << key << " = " << v << " violates the invariant: all rates >= 0";
        throw ConfigError(msg.str());
      }
    }
  }
  try {
    model::check_params(c.params, model::ModelKind::effective);
  } catch (const model::ParameterError& err) {
    throw ConfigError(std::string("parameter invariant violated: ") + err.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace heraldsim::harness
