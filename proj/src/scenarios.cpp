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

#include "heraldsim/scenarios.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "heraldsim/dynamics.hpp"
#include "heraldsim/protocol.hpp"

#ifndef HERALDSIM_GIT_DESCRIBE
#define HERALDSIM_GIT_DESCRIBE "unknown"
#endif

namespace heraldsim::harness {

namespace {

using nlohmann::ordered_json;
using dynamics::TimeSeries;
using kernels::Exec;

double closed_form_photons(double lambda, double kappa, double t) {
  if (kappa == 0.0) return 0.0;
  return 4.0 * lambda * lambda / kappa *
         (t - 4.0 / kappa * -std::expm1(-0.5 * kappa * t) + 1.0 / kappa * -std::expm1(-kappa * t));
}

model::ModelParams with_node_values(model::ModelParams p, double kappa, double gamma) {
  for (auto& n : p.nodes) {
    n.kappa = kappa;
    n.gamma = gamma;
  }
  return p;
}

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

Gate make_gate(std::string name, double change) {
  Gate g;
  g.name = std::move(name);
  g.max_relative_change = change;
  g.pass = change < g.tolerance;
  return g;
}

void finish_gates(ScenarioResult& r) {
  for (const auto& g : r.gates) {
    if (!g.pass) {
      std::ostringstream msg;
      msg << "convergence gate '" << g.name << "' failed: relative change "
          << g.max_relative_change << " >= " << g.tolerance;
      r.log.push_back(msg.str());
      r.exit_code = kExitConvergence;
    }
  }
}

struct PhotonRun {
  TimeSeries series;
  int n_fock = 0;
  double dt = 0.0;
  int stride = 1;
};

PhotonRun photon_run(const model::ModelParams& p, double t_max, int points, int n_fock = 0,
                     double dt_scale = 1.0) {
  PhotonRun run;
  run.n_fock = n_fock > 0 ? n_fock : protocol::protocol_fock_cutoff(p, t_max);
  double rule = t_max;
  for (int i = 0; i < 2; ++i) {
    const auto m = model::make_single_node_model(p, run.n_fock, i);
    rule = std::min(rule, dynamics::choose_dt(m.hamiltonian, t_max));
  }
  run.dt = grid_dt(t_max, rule, points, &run.stride);
  if (dt_scale != 1.0) {
    run.dt *= dt_scale;
    run.stride = static_cast<int>(std::lround(run.stride / dt_scale));
  }
  run.series = protocol::mean_detected_photons(p, t_max, run.dt, run.stride, run.n_fock);
  require_integrity(run.series, "_1");
  require_integrity(run.series, "_2");
  return run;
}

ordered_json cell_json(const Cell& c) {
  if (std::holds_alternative<double>(c)) return std::get<double>(c);
  if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
  return nullptr;
}

ordered_json config_json(const RunConfig& c) {
  ordered_json j;
  j["scenario"] = to_string(c.scenario);
  ordered_json nodes = ordered_json::array();
  for (const auto& n : c.params.nodes) {
    nodes.push_back({{"lambda", n.lambda},         {"kappa", n.kappa},
                     {"gamma", n.gamma},           {"omega_plus", n.omega_plus},
                     {"omega_minus", n.omega_minus}, {"g_plus", n.g_plus},
                     {"g_minus", n.g_minus},       {"delta_plus", n.delta_plus},
                     {"delta_minus", n.delta_minus}});
  }
  j["params"] = {{"nodes", nodes},
                 {"gamma_T", c.params.gamma_trion},
                 {"n_fock", c.params.n_fock},
                 {"unit_mode", c.params.unit_mode == model::UnitMode::reduced ? "reduced"
                                                                               : "physical-ueV"},
                 {"dot_decoherence", c.params.dot_decoherence == model::DotDecoherence::relaxation
                                         ? "relaxation"
                                         : "dephasing"},
                 {"reference_rate_rad_s", c.params.reference_rate_rad_s}};
  j["schedule"] = {{"t_drive", c.schedule.t_drive},
                   {"t_ringdown", c.schedule.ringdown_duration(c.params)},
                   {"dt", c.schedule.dt},
                   {"record_stride", c.schedule.record_stride},
                   {"ringdown_decoherence", c.schedule.ringdown_decoherence}};
  j["run"] = {{"n_traj", c.n_traj},
              {"seed", c.master_seed},
              {"output_dir", c.output_dir},
              {"emit", to_string(c.emit)},
              {"convergence_gates", c.convergence_gates}};
  j["sweep"] = {{"t_drive", c.sweep_t_drive}, {"gamma", c.sweep_gamma}, {"kappa", c.sweep_kappa}};
  j["fig2"] = {{"t_max", c.fig2_t_max}, {"points", c.fig2_points}, {"gamma", c.fig2_gamma}};
  j["fig4"] = {{"t_max", c.fig4_t_max}, {"points", c.fig4_points}};
  return j;
}

Check make_check(std::string name, double value, double threshold, const std::string& relation) {
  Check c{std::move(name), value, threshold, relation, false};
  if (relation == "<") c.pass = value < threshold;
  if (relation == "<=") c.pass = value <= threshold;
  if (relation == ">") c.pass = value > threshold;
  if (relation == ">=") c.pass = value >= threshold;
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tables

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != header.size()) {
    throw StructuralError("table '" + name + "': row width does not match the header");
  }
  rows.push_back(std::move(row));
}

std::string format_number(double v) {
  if (!std::isfinite(v)) throw NumericalIntegrityError("non-finite value in output table");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string column_label(double v) {
  char buf[40];
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.1f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%g", v);
  }
  return buf;
}

std::string to_csv(const Table& table) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
      if (ch == '"') out += '"';
      out += ch;
    }
    return out + "\"";
  };
  std::ostringstream os;
  for (std::size_t k = 0; k < table.header.size(); ++k) {
    if (k) os << ',';
    os << quote(table.header[k]);
  }
  os << "\r\n";
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) os << ',';
      if (std::holds_alternative<double>(row[k])) {
        os << format_number(std::get<double>(row[k]));
      } else if (std::holds_alternative<std::string>(row[k])) {
        os << quote(std::get<std::string>(row[k]));
      }
    }
    os << "\r\n";
  }
  return os.str();
}

double relative_change(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw StructuralError("relative_change: length mismatch");
  double diff = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff = std::max(diff, std::abs(a[k] - b[k]));
    scale = std::max(scale, std::abs(a[k]));
  }
  if (scale == 0.0) return diff == 0.0 ? 0.0 : INFINITY;
  return diff / scale;
}

void require_integrity(const TimeSeries& series, const std::string& suffix) {
  const auto& tr = series.column("trace_err" + suffix);
  const auto& herm = series.column("herm_defect" + suffix);
  const auto& eig = series.column("min_eig" + suffix);
  for (std::size_t r = 0; r < series.size(); ++r) {
    if (!(tr[r] < 1e-8) || !(herm[r] < 1e-10) || !(eig[r] >= -1e-8)) {
      std::ostringstream msg;
      msg << "density-matrix integrity lost at t=" << series.t[r] << ": trace_err=" << tr[r]
          << " herm_defect=" << herm[r] << " min_eig=" << eig[r];
      throw NumericalIntegrityError(msg.str());
    }
  }
}

double grid_dt(double t_max, double dt_rule, int points, int* stride) {
  if (points < 1 || !(dt_rule > 0.0)) throw StructuralError("grid_dt: bad arguments");
  const double min_steps = std::ceil(t_max / dt_rule - 1e-9);
  const int per_point = std::max(1, static_cast<int>(std::ceil(min_steps / points - 1e-12)));
  if (stride != nullptr) *stride = per_point;
  return t_max / (static_cast<double>(points) * per_point);
}

std::string git_describe() { return HERALDSIM_GIT_DESCRIBE; }

// ---------------------------------------------------------------------------
// fig2: leaked photon number against lambda t for several kappa

ScenarioResult run_fig2(const RunConfig& config) {
  ScenarioResult r;
  Table table{"fig2", {"lambda_t"}, {}};
  Table totals{"fig2_total", {"lambda_t"}, {}};
  std::vector<std::vector<double>> columns, total_columns;
  for (double kappa : config.sweep_kappa) {
    const auto p = with_node_values(config.params, kappa, config.fig2_gamma);
    const PhotonRun run = photon_run(p, config.fig2_t_max, config.fig2_points);
    table.header.push_back("N_kappa_" + column_label(kappa));
    totals.header.push_back("N_total_kappa_" + column_label(kappa));
    columns.push_back(run.series.column("N"));
    total_columns.push_back(run.series.column("N_total"));
    r.metrics.emplace_back("N_final_kappa_" + column_label(kappa), columns.back().back());
    r.metrics.emplace_back("n_fock_kappa_" + column_label(kappa), run.n_fock);
    r.metrics.emplace_back("dt_kappa_" + column_label(kappa), run.dt);

    if (config.convergence_gates) {
      const PhotonRun half = photon_run(p, config.fig2_t_max, config.fig2_points, run.n_fock, 0.5);
      r.gates.push_back(make_gate("fig2 dt halving, kappa=" + column_label(kappa),
                                  relative_change(run.series.column("N"), half.series.column("N"))));
      const PhotonRun wide = photon_run(p, config.fig2_t_max, config.fig2_points, 2 * run.n_fock);
      // Doubling the cutoff may tighten dt; compare on the shared record grid.
      r.gates.push_back(make_gate("fig2 cutoff doubling, kappa=" + column_label(kappa),
                                  relative_change(run.series.column("N"), wide.series.column("N"))));
    }
  }
  for (int k = 0; k <= config.fig2_points; ++k) {
    const double t = config.fig2_t_max * k / config.fig2_points;
    std::vector<Cell> row{t}, total_row{t};
    for (std::size_t c = 0; c < columns.size(); ++c) {
      row.emplace_back(columns[c][k]);
      total_row.emplace_back(total_columns[c][k]);
    }
    table.add_row(std::move(row));
    totals.add_row(std::move(total_row));
  }
  r.tables.push_back(std::move(table));
  r.tables.push_back(std::move(totals));
  finish_gates(r);
  return r;
}

// ---------------------------------------------------------------------------
// fig3: heralded fidelity against drive duration for several Gamma

ScenarioResult run_fig3(const RunConfig& config) {
  ScenarioResult r;
  Table table{"fig3", {"lambda_T"}, {}};
  Table detail{"fig3_detail",
               {"gamma", "lambda_T", "n_traj", "P_success", "P_success_stderr", "F_mean",
                "F_stderr", "F_c_mean", "F_c_count", "F_d_mean", "F_d_count", "F_even_mean",
                "F_max_raw", "n_fock", "dt"},
               {}};
  for (double g : config.sweep_gamma) table.header.push_back("F_mean_gamma_" + column_label(g));
  for (double g : config.sweep_gamma) table.header.push_back("F_stderr_gamma_" + column_label(g));
  for (double g : config.sweep_gamma) table.header.push_back("P_success_gamma_" + column_label(g));

  const std::size_t ng = config.sweep_gamma.size(), nt = config.sweep_t_drive.size();
  std::vector<protocol::HeraldSummary> grid(ng * nt);
  std::uint64_t cell = 0;
  for (std::size_t gi = 0; gi < ng; ++gi) {
    const double g = config.sweep_gamma[gi];
    model::ModelParams p = config.params;
    for (auto& n : p.nodes) n.gamma = g;
    for (std::size_t ti = 0; ti < nt; ++ti) {
      protocol::ProtocolSchedule s = config.schedule;
      s.t_drive = config.sweep_t_drive[ti];
      const protocol::HeraldExperiment ex(p, s);
      auto& summary = grid[gi * nt + ti];
      summary = protocol::herald_statistics(ex, s.t_drive, config.n_traj,
                                            dynamics::derive_seed(config.master_seed, cell++));
      auto opt = [](const protocol::MeanWithError& m) -> Cell {
        return m.count > 0 ? Cell{m.mean} : Cell{};
      };
      detail.add_row({g, s.t_drive, static_cast<double>(config.n_traj), summary.success.mean,
                      summary.success.stderr_, opt(summary.fidelity),
                      summary.fidelity.count > 0 ? Cell{summary.fidelity.stderr_} : Cell{},
                      opt(summary.fidelity_c), static_cast<double>(summary.fidelity_c.count),
                      opt(summary.fidelity_d), static_cast<double>(summary.fidelity_d.count),
                      opt(summary.fidelity_even), summary.max_fidelity,
                      static_cast<double>(ex.n_fock()), ex.dt()});
      if (summary.fidelity.count == 0) {
        r.log.push_back("fig3: no heralded trajectory at gamma=" + column_label(g) +
                        ", lambda_T=" + column_label(s.t_drive) + "; fidelity cell left empty");
      }
      if (summary.max_fidelity > 1.0 + 1e-8) {
        throw NumericalIntegrityError("fig3: fidelity exceeded 1 + 1e-8 before clamping");
      }
    }
    if (config.convergence_gates) {
      // The trajectory discretisation (dt, cutoff) is gated on the master
      // equation photon count over the longest drive window.
      protocol::ProtocolSchedule s = config.schedule;
      s.t_drive = *std::max_element(config.sweep_t_drive.begin(), config.sweep_t_drive.end());
      const protocol::HeraldExperiment ex(p, s);
      const int steps = static_cast<int>(std::lround(s.t_drive / ex.dt()));
      const auto base = protocol::mean_detected_photons(p, s.t_drive, ex.dt(), steps, ex.n_fock());
      const auto half =
          protocol::mean_detected_photons(p, s.t_drive, 0.5 * ex.dt(), 2 * steps, ex.n_fock());
      const double rule2 = dynamics::choose_dt(
          model::make_single_node_model(p, 2 * ex.n_fock(), 0).hamiltonian, s.t_drive);
      const int steps2 = static_cast<int>(std::lround(s.t_drive / rule2));
      const auto wide = protocol::mean_detected_photons(p, s.t_drive, rule2, steps2, 2 * ex.n_fock());
      for (const auto* ts : {&base, &half, &wide}) {
        require_integrity(*ts, "_1");
        require_integrity(*ts, "_2");
      }
      r.gates.push_back(make_gate("fig3 dt halving, gamma=" + column_label(g),
                                  relative_change(base.column("N"), half.column("N"))));
      r.gates.push_back(make_gate("fig3 cutoff doubling, gamma=" + column_label(g),
                                  relative_change(base.column("N"), wide.column("N"))));
    }
  }
  for (std::size_t ti = 0; ti < nt; ++ti) {
    std::vector<Cell> row{config.sweep_t_drive[ti]};
    for (std::size_t gi = 0; gi < ng; ++gi) {
      const auto& s = grid[gi * nt + ti];
      row.push_back(s.fidelity.count > 0 ? Cell{s.fidelity.mean} : Cell{});
    }
    for (std::size_t gi = 0; gi < ng; ++gi) {
      const auto& s = grid[gi * nt + ti];
      row.push_back(s.fidelity.count > 0 ? Cell{s.fidelity.stderr_} : Cell{});
    }
    for (std::size_t gi = 0; gi < ng; ++gi) row.emplace_back(grid[gi * nt + ti].success.mean);
    table.add_row(std::move(row));
  }
  r.tables.push_back(std::move(table));
  r.tables.push_back(std::move(detail));
  finish_gates(r);
  return r;
}

// ---------------------------------------------------------------------------
// fig4: trion population of the four-level model

ScenarioResult run_fig4(const RunConfig& config) {
  ScenarioResult r;
  model::ModelParams p = config.params.unit_mode == model::UnitMode::physical_ueV
                             ? config.params
                             : model::reduce_physical(model::inas_physical_nodes(),
                                                      model::kInasTrionDecayMhz);
  if (p.n_fock == 0) p.n_fock = config.params.n_fock;
  const auto report = model::check_params(p, model::ModelKind::full);
  for (const auto& w : report.warnings) r.log.push_back("warning: " + w);

  auto run = [&](int n_fock, double scale) {
    const int nf = n_fock > 0 ? n_fock
                              : model::fock_cutoff(model::max_branch_amplitude(
                                    p.nodes[0].lambda, p.nodes[0].kappa, config.fig4_t_max));
    const auto m = model::make_full_node_model(p, nf, 0);
    int stride = 1;
    double dt = grid_dt(config.fig4_t_max, dynamics::choose_dt(m.hamiltonian, config.fig4_t_max),
                        config.fig4_points, &stride);
    if (scale != 1.0) {
      dt *= scale;
      stride = static_cast<int>(std::lround(stride / scale));
    }
    auto res = protocol::trion_population(p, config.fig4_t_max, dt, stride, nf);
    require_integrity(res.series);
    return res;
  };
  const auto base = run(0, 1.0);
  if (config.convergence_gates) {
    const auto half = run(base.n_fock, 0.5);
    r.gates.push_back(make_gate("fig4 dt halving", relative_change(base.series.column("P_trion"),
                                                                   half.series.column("P_trion"))));
    const auto wide = run(2 * base.n_fock, 1.0);
    r.gates.push_back(make_gate("fig4 cutoff doubling",
                                relative_change(base.series.column("P_trion"),
                                                wide.series.column("P_trion"))));
  }

  Table table{"fig4", {"t_ns", "lambda_t", "P_trion", "P_trion_avg", "survival"}, {}};
  const double ns_per_unit = p.reference_rate_rad_s > 0.0 ? 1e9 / p.reference_rate_rad_s : 0.0;
  const auto& s = base.series;
  for (std::size_t k = 0; k < s.size(); ++k) {
    table.add_row({s.t[k] * ns_per_unit, s.t[k], s.column("P_trion")[k],
                   s.column("P_trion_avg")[k], s.column("survival")[k]});
  }
  r.tables.push_back(std::move(table));
  r.metrics = {{"early_window_lambda_t", base.early_window},
               {"early_max_P_trion_avg", base.early_max_avg},
               {"perturbative_bound", base.perturbative_bound},
               {"max_P_trion", max_of(s.column("P_trion"))},
               {"fitted_rate_mhz", base.fitted_rate_mhz},
               {"early_window_rate_mhz", base.early_rate_mhz},
               {"branch_rate_plus_mhz", base.branch_rate_plus_mhz},
               {"branch_rate_minus_mhz", base.branch_rate_minus_mhz},
               {"n_fock", static_cast<double>(base.n_fock)},
               {"dt", base.dt}};
  finish_gates(r);
  return r;
}

// ---------------------------------------------------------------------------
// herald: one row per trajectory

ScenarioResult run_herald(const RunConfig& config) {
  ScenarioResult r;
  const protocol::HeraldExperiment ex(config.params, config.schedule);
  std::vector<protocol::HeraldOutcome> outcomes;
  const auto summary = protocol::herald_statistics(ex, config.schedule.t_drive, config.n_traj,
                                                   config.master_seed, Exec::parallel, &outcomes);
  Table table{"herald",
              {"index", "seed", "success", "herald_port", "parity", "clicks_c", "clicks_d",
               "dot_jumps", "herald_time", "fidelity", "fidelity_even"},
              {}};
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const auto& o = outcomes[k];
    const auto& rec = o.record;
    table.add_row({static_cast<double>(k), std::to_string(rec.seed), o.success ? 1.0 : 0.0,
                   std::string(protocol::to_string(o.herald_port)), static_cast<double>(o.parity),
                   static_cast<double>(rec.count(model::ChannelKind::detector_c)),
                   static_cast<double>(rec.count(model::ChannelKind::detector_d)),
                   static_cast<double>(rec.count(model::ChannelKind::dot)),
                   o.success ? Cell{o.herald_time} : Cell{},
                   o.fidelity ? Cell{*o.fidelity} : Cell{},
                   o.fidelity_even ? Cell{*o.fidelity_even} : Cell{}});
  }
  r.tables.push_back(std::move(table));
  r.metrics = {{"t_drive", config.schedule.t_drive},
               {"t_ringdown", ex.ringdown_steps() * ex.dt()},
               {"n_fock", static_cast<double>(ex.n_fock())},
               {"dt", ex.dt()},
               {"success_probability", summary.success.mean},
               {"success_stderr", summary.success.stderr_},
               {"fidelity_mean", summary.fidelity.mean},
               {"fidelity_stderr", summary.fidelity.stderr_},
               {"fidelity_c_mean", summary.fidelity_c.mean},
               {"fidelity_c_count", static_cast<double>(summary.fidelity_c.count)},
               {"fidelity_d_mean", summary.fidelity_d.mean},
               {"fidelity_d_count", static_cast<double>(summary.fidelity_d.count)},
               {"fidelity_even_mean", summary.fidelity_even.mean}};
  if (summary.fidelity.count == 0) r.log.push_back("herald: no successful trajectory");
  return r;
}

// ---------------------------------------------------------------------------
// validate: a fast invariant suite with a deterministic report

ScenarioResult run_validate(const RunConfig& config) {
  ScenarioResult r;

  {
    const auto lam = model::lambda_from_physical(41.4, 90.0, 414.0);
    const auto lam_minus = model::lambda_from_physical(46.0, 90.0, 460.0);
    r.checks.push_back(make_check("lambda branch mismatch (ueV)", std::abs(lam.ueV - lam_minus.ueV),
                                  1e-9, "<"));
    r.checks.push_back(make_check("lambda/2pi relative deviation from 2.2 GHz",
                                  std::abs(lam.ghz_over_2pi() - 2.2) / 2.2, 0.02, "<"));
  }

  {
    model::ModelParams p;
    p.nodes[0].kappa = 0.7;
    p.nodes[1].kappa = 1.3;
    p.nodes[1].lambda = 1.2;
    const auto layout = model::two_node_layout(6);
    const auto h = model::build_effective_hamiltonian(p, layout);
    r.checks.push_back(make_check("effective Hamiltonian Hermiticity defect", h.hermiticity_defect(),
                                  1e-12, "<"));
    const auto modes = model::detector_jump_ops(p, layout);
    const SparseOperator lhs = modes.c.adjoint() * modes.c + modes.d.adjoint() * modes.d;
    const SparseOperator rhs =
        embed_sparse(number_op(6, "cav1"), "cav1", layout) * cplx(p.nodes[0].kappa) +
        embed_sparse(number_op(6, "cav2"), "cav2", layout) * cplx(p.nodes[1].kappa);
    r.checks.push_back(make_check("detector identity c^dag c + d^dag d",
                                  (lhs - rhs).to_dense().matrix().cwiseAbs().maxCoeff(), 1e-12,
                                  "<"));
  }

  {
    // Closed single node: ME state against the displaced-branch state.
    model::ModelParams p;
    p.nodes[0].kappa = 0.0;
    const int nf = 36;
    const auto m = model::make_single_node_model(p, nf, 0);
    dynamics::IntegrationOptions opts;
    opts.t_max = 2.0;
    opts.dt = grid_dt(2.0, dynamics::choose_dt(m.hamiltonian, 2.0), 20, &opts.record_stride);
    const std::array<int, 2> ground{model::dot::x_minus, 0};
    double worst = 1.0;
    dynamics::propagate_master(
        m, DensityMatrix(StateVector::basis(m.layout, ground)), opts, {}, {}, Exec::serial,
        [&](std::size_t, double t, const DensityMatrix& rho) {
          Vector v = Vector::Zero(m.layout.total_dim());
          for (int s : {+1, -1}) {
            const auto field =
                coherent_state(model::branch_amplitude_analytic(1.0, 0.0, t, s), nf, "cav");
            v += tensor_product(model::y_state(s), field.state).amplitudes() / std::sqrt(2.0);
          }
          worst = std::min(worst, fidelity_pure(rho, StateVector(m.layout, v).normalize()));
        });
    r.checks.push_back(make_check("closed-system overlap with displaced branches", worst,
                                  1.0 - 1e-6, ">"));
  }

  {
    model::ModelParams p;
    double worst_trace = 0.0;
    for (double kappa : {1.0, 0.1}) {
      const auto pk = with_node_values(p, kappa, 0.0);
      const PhotonRun run = photon_run(pk, 3.0, 60);
      const double expect = closed_form_photons(1.0, kappa, 3.0);
      r.checks.push_back(make_check("N(3) closed-form relative error, kappa=" + column_label(kappa),
                                    std::abs(run.series.column("N").back() - expect) / expect, 0.01,
                                    "<"));
      worst_trace = std::max({worst_trace, max_of(run.series.column("trace_err_1")),
                              max_of(run.series.column("trace_err_2"))});
      if (kappa == 1.0) {
        const PhotonRun half = photon_run(pk, 3.0, 60, run.n_fock, 0.5);
        r.checks.push_back(make_check("N(t) dt-halving relative change",
                                      relative_change(run.series.column("N"),
                                                      half.series.column("N")),
                                      1e-6, "<"));
      }
    }
    r.checks.push_back(make_check("max trace error on photon runs", worst_trace, 1e-8, "<"));
  }

  {
    model::ModelParams p;
    for (auto& n : p.nodes) n.gamma = 0.0;
    protocol::ProtocolSchedule s;
    s.t_drive = 1.5;
    const protocol::HeraldExperiment ex(p, s);
    const int n = std::min(config.n_traj, 32);
    std::vector<protocol::HeraldOutcome> serial, parallel;
    protocol::herald_statistics(ex, s.t_drive, n, config.master_seed, Exec::serial, &serial);
    protocol::herald_statistics(ex, s.t_drive, n, config.master_seed, Exec::parallel, &parallel);
    double worst = 0.0;
    bool identical = true;
    for (int k = 0; k < n; ++k) {
      if (serial[k].success) worst = std::max(worst, std::abs(*serial[k].fidelity - 1.0));
      identical = identical && serial[k].record.clicks.size() == parallel[k].record.clicks.size() &&
                  serial[k].record.final_state.amplitudes() ==
                      parallel[k].record.final_state.amplitudes();
    }
    r.checks.push_back(make_check("Gamma=0 heralded fidelity |F-1| (worst trajectory)", worst,
                                  1e-6, "<"));
    r.checks.push_back(make_check("serial and parallel ensembles bit-identical",
                                  identical ? 1.0 : 0.0, 1.0, ">="));
  }

  Table table{"validate", {"check", "value", "threshold", "relation", "pass"}, {}};
  for (const auto& c : r.checks) {
    table.add_row({c.name, c.value, c.threshold, c.relation, c.pass ? 1.0 : 0.0});
    if (!c.pass) r.exit_code = kExitConvergence;
  }
  r.tables.push_back(std::move(table));
  return r;
}

// ---------------------------------------------------------------------------
// custom: every knob from the config, photon count plus herald summary

ScenarioResult run_custom(const RunConfig& config) {
  ScenarioResult r;
  const double t_max = config.schedule.t_drive > 0.0 ? config.schedule.t_drive : 1.0;
  const PhotonRun photons = photon_run(config.params, t_max, 60, config.params.n_fock);
  Table table{"custom_photons", {"lambda_t", "N_1", "N_2", "N_total", "N"}, {}};
  const auto& s = photons.series;
  for (std::size_t k = 0; k < s.size(); ++k) {
    table.add_row({s.t[k], s.column("N_1")[k], s.column("N_2")[k], s.column("N_total")[k],
                   s.column("N")[k]});
  }
  r.tables.push_back(std::move(table));

  const ScenarioResult herald = run_herald(config);
  Table summary{"custom_herald", {"metric", "value"}, {}};
  for (const auto& [k, v] : herald.metrics) summary.add_row({k, v});
  r.tables.push_back(std::move(summary));
  r.log = herald.log;
  return r;
}

// ---------------------------------------------------------------------------

void write_outputs(const RunConfig& config, ScenarioResult& result) {
  namespace fs = std::filesystem;
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  const bool csv = config.emit == Emit::csv || config.emit == Emit::both;
  const bool json = config.emit == Emit::json || config.emit == Emit::both;

  // Format everything first so a bad value aborts before any file is touched.
  std::vector<std::string> rendered;
  for (const auto& t : result.tables) rendered.push_back(to_csv(t));

  if (csv) {
    for (std::size_t k = 0; k < result.tables.size(); ++k) {
      const fs::path path = dir / (result.tables[k].name + ".csv");
      std::ofstream(path, std::ios::binary) << rendered[k];
      result.files.push_back(path.string());
    }
  }

  // The JSON mirror always exists as run metadata when csv alone is asked for.
  ordered_json j;
  j["scenario"] = to_string(config.scenario);
  j["git_describe"] = git_describe();
  j["master_seed"] = config.master_seed;
  j["n_traj"] = config.n_traj;
  j["config"] = config_json(config);
  j["resolution_report"] = config.report;
  j["exit_code"] = result.exit_code;
  ordered_json gates = ordered_json::array();
  for (const auto& g : result.gates) {
    gates.push_back({{"name", g.name},
                     {"max_relative_change", g.max_relative_change},
                     {"tolerance", g.tolerance},
                     {"pass", g.pass}});
  }
  j["gates"] = gates;
  ordered_json checks = ordered_json::array();
  for (const auto& c : result.checks) {
    checks.push_back({{"name", c.name},
                      {"value", c.value},
                      {"threshold", c.threshold},
                      {"relation", c.relation},
                      {"pass", c.pass}});
  }
  j["checks"] = checks;
  ordered_json metrics = ordered_json::object();
  for (const auto& [k, v] : result.metrics) metrics[k] = v;
  j["metrics"] = metrics;
  j["log"] = result.log;
  if (json) {
    ordered_json tables = ordered_json::object();
    for (const auto& t : result.tables) {
      ordered_json rows = ordered_json::array();
      for (const auto& row : t.rows) {
        ordered_json jr = ordered_json::array();
        for (const auto& c : row) jr.push_back(cell_json(c));
        rows.push_back(std::move(jr));
      }
      tables[t.name] = {{"columns", t.header}, {"rows", std::move(rows)}};
    }
    j["tables"] = std::move(tables);
  }
  const fs::path meta = dir / (std::string(to_string(config.scenario)) + ".json");
  std::ofstream(meta, std::ios::binary) << j.dump(2) << '\n';
  result.files.push_back(meta.string());
}

ScenarioResult run_scenario(const RunConfig& config) {
  ScenarioResult r;
  switch (config.scenario) {
    case Scenario::fig2: r = run_fig2(config); break;
    case Scenario::fig3: r = run_fig3(config); break;
    case Scenario::fig4: r = run_fig4(config); break;
    case Scenario::herald: r = run_herald(config); break;
    case Scenario::validate: r = run_validate(config); break;
    case Scenario::custom: r = run_custom(config); break;
  }
  write_outputs(config, r);
  return r;
}

}  // namespace heraldsim::harness
