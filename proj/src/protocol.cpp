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

#include "heraldsim/protocol.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace heraldsim::protocol {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Operator level_projector(int dim, int level, const std::string& label) {
  Matrix m = Matrix::Zero(dim, dim);
  m(level, level) = 1.0;
  return Operator(HilbertLayout::single(label, dim), std::move(m));
}

StateVector two_node_ground(int n_fock) {
  const HilbertLayout layout = model::two_node_layout(n_fock);
  const std::array<int, 4> digits{model::dot::x_minus, model::dot::x_minus, 0, 0};
  return StateVector::basis(layout, digits);
}

model::ModelParams without_dot_decoherence(model::ModelParams p) {
  for (auto& n : p.nodes) n.gamma = 0.0;
  return p;
}

double min_positive_kappa(const model::ModelParams& params) {
  double k = 0.0;
  for (const auto& n : params.nodes) {
    if (n.kappa > 0.0) k = (k == 0.0) ? n.kappa : std::min(k, n.kappa);
  }
  return k;
}

}  // namespace

double ProtocolSchedule::ringdown_duration(const model::ModelParams& params) const {
  if (t_ringdown > 0.0) return t_ringdown;
  const double k = min_positive_kappa(params);
  return k > 0.0 ? 20.0 / k : 0.0;
}

const char* to_string(Port port) {
  switch (port) {
    case Port::c: return "c";
    case Port::d: return "d";
    case Port::none: break;
  }
  return "none";
}

StateVector bell_target(Port port, int parity) {
  if (port == Port::none) throw StructuralError("bell_target needs a heralding port");
  const double sign = (parity % 2 == 0) ? 1.0 : -1.0;
  const int other = port == Port::c ? +1 : -1;
  const StateVector first =
      tensor_product(model::y_state(+1, "dot1"), model::y_state(other, "dot2"));
  const StateVector second =
      tensor_product(model::y_state(-1, "dot1"), model::y_state(-other, "dot2"));
  Vector v = (first.amplitudes() + sign * second.amplitudes()) / std::sqrt(2.0);
  return StateVector(first.layout(), std::move(v));
}

double detection_rate(const DensityMatrix& rho, const SparseOperator& jump) {
  if (!(rho.layout() == jump.layout())) throw StructuralError("detection_rate: layout mismatch");
  const SparseOperator ldl = jump.adjoint() * jump;
  const double rate = expectation(ldl, rho).real();
  if (rate < -1e-12) {
    std::ostringstream msg;
    msg << "negative detection rate " << rate;
    throw NumericalIntegrityError(msg.str());
  }
  return std::max(rate, 0.0);
}

TimeSeries mean_detected_photons(const model::ModelParams& params, double t_max, double dt,
                                 int record_stride, int n_fock) {
  if (!(t_max > 0.0)) throw StructuralError("mean_detected_photons: t_max must be positive");
  int nf = n_fock > 0 ? n_fock : params.n_fock;
  if (nf <= 0) {
    double alpha = 0.0;
    for (const auto& n : params.nodes) {
      alpha = std::max(alpha, model::max_branch_amplitude(n.lambda, n.kappa, t_max));
    }
    nf = model::fock_cutoff(alpha);
  }

  std::array<model::LindbladModel, 2> nodes{model::make_single_node_model(params, nf, 0),
                                            model::make_single_node_model(params, nf, 1)};
  if (dt <= 0.0) {
    dt = std::min(dynamics::choose_dt(nodes[0].hamiltonian, t_max),
                  dynamics::choose_dt(nodes[1].hamiltonian, t_max));
  }
  dynamics::IntegrationOptions opts;
  opts.dt = dt;
  opts.t_max = t_max;
  opts.record_stride = record_stride;

  TimeSeries out;
  const std::array<int, 2> ground{model::dot::x_minus, 0};
  for (int i = 0; i < 2; ++i) {
    const auto& m = nodes[i];
    const SparseOperator n_op = embed_sparse(number_op(nf, "cav"), "cav", m.layout);
    const dynamics::Observable leak{"N", n_op * cplx(params.nodes[i].kappa)};
    const DensityMatrix rho0(StateVector::basis(m.layout, ground));
    const auto res = dynamics::propagate_master(m, rho0, opts, {}, {leak});
    const std::string tag = std::to_string(i + 1);
    if (i == 0) out.t = res.series.t;
    out.add_column("N_" + tag, res.series.column("N"));
    out.add_column("trace_err_" + tag, res.series.column("trace_err"));
    out.add_column("herm_defect_" + tag, res.series.column("herm_defect"));
    out.add_column("min_eig_" + tag, res.series.column("min_eig"));
  }
  std::vector<double> total(out.size()), mean(out.size());
  for (std::size_t r = 0; r < out.size(); ++r) {
    total[r] = out.column("N_1")[r] + out.column("N_2")[r];
    mean[r] = 0.5 * total[r];
  }
  out.add_column("N_total", std::move(total));
  out.add_column("N", std::move(mean));
  out.check_shape();
  return out;
}

int protocol_fock_cutoff(const model::ModelParams& params, double t_drive) {
  if (params.n_fock > 0) return params.n_fock;
  double alpha = 0.0;
  for (const auto& n : params.nodes) {
    alpha = std::max(alpha, model::max_branch_amplitude(n.lambda, n.kappa, t_drive));
  }
  return model::fock_cutoff(alpha);
}

// ---------------------------------------------------------------------------
// Heralding

HeraldExperiment::HeraldExperiment(const model::ModelParams& params,
                                   const ProtocolSchedule& schedule, int n_fock)
    : drive_(model::make_two_node_model(
          params, n_fock > 0 ? n_fock : protocol_fock_cutoff(params, schedule.t_drive), true)),
      drive_traj_(drive_),
      ring_traj_(model::make_two_node_model(
          schedule.ringdown_decoherence ? params : without_dot_decoherence(params),
          drive_.layout.dim("cav1"), false)) {
  n_fock_ = drive_.layout.dim("cav1");
  psi0_ = two_node_ground(n_fock_);
  if (schedule.t_drive < 0.0) throw StructuralError("t_drive must be >= 0");

  if (schedule.dt > 0.0) {
    dt_ = schedule.dt;
  } else if (schedule.t_drive > 0.0) {
    dt_ = dynamics::choose_dt(drive_.hamiltonian, schedule.t_drive);
  } else {
    dt_ = 0.01;
  }
  if (schedule.t_drive > 0.0) {
    dynamics::IntegrationOptions opts;
    opts.dt = dt_;
    opts.t_max = schedule.t_drive;
    drive_steps_ = opts.steps();
    const double product = dt_ * kernels::row_sum_bound(drive_.hamiltonian.matrix());
    if (product > opts.max_step_product * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "step rule violated: dt * |H|_bound = " << product;
      throw StepSizeError(msg.str());
    }
  }
  const double ring = schedule.ringdown_duration(params);
  ring_steps_ = ring > 0.0 ? static_cast<int>(std::ceil(ring / dt_ - 1e-9)) : 0;
}

HeraldOutcome HeraldExperiment::run(std::uint64_t seed) const {
  dynamics::TrajectoryState state(psi0_, seed);
  const dynamics::SegmentRecorder quiet{nullptr, nullptr, {}, false};
  dynamics::evolve_segment(drive_traj_, state, dt_, drive_steps_, std::max(1, drive_steps_),
                           quiet);
  dynamics::evolve_segment(ring_traj_, state, dt_, ring_steps_, std::max(1, ring_steps_), quiet);

  HeraldOutcome out;
  out.record = std::move(state.record);
  out.record.final_state = state.normalized_state(drive_.layout);
  for (const auto& click : out.record.clicks) {
    if (click.kind == model::ChannelKind::detector_c) {
      out.herald_port = Port::c;
    } else if (click.kind == model::ChannelKind::detector_d) {
      out.herald_port = Port::d;
    } else {
      continue;
    }
    out.herald_time = click.t;
    break;
  }
  out.success = out.herald_port != Port::none;
  if (!out.success) return out;

  out.parity = out.herald_port == Port::c ? out.record.c_parity : out.record.d_parity;
  out.target_state = bell_target(out.herald_port, out.parity);
  const DensityMatrix dots = partial_trace(out.record.final_state, {"dot1", "dot2"});
  const Vector& t = out.target_state.amplitudes();
  out.fidelity_raw = t.dot(dots.matrix() * t).real();
  out.fidelity = fidelity_pure(dots, out.target_state);
  out.fidelity_even = fidelity_pure(dots, bell_target(out.herald_port, 0));
  return out;
}

HeraldOutcome run_herald_protocol(const model::ModelParams& params,
                                  const ProtocolSchedule& schedule, std::uint64_t seed) {
  return HeraldExperiment(params, schedule).run(seed);
}

MeanWithError mean_with_error(const std::vector<double>& values) {
  MeanWithError m;
  m.count = static_cast<int>(values.size());
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / m.count;
  if (m.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.stderr_ = std::sqrt(ss / (m.count - 1) / m.count);
  }
  return m;
}

HeraldSummary herald_statistics(const HeraldExperiment& experiment, double t_drive, int n_traj,
                                std::uint64_t master_seed, Exec exec,
                                std::vector<HeraldOutcome>* outcomes) {
  if (n_traj < 1) throw StructuralError("herald_statistics needs n_traj >= 1");
  std::vector<HeraldOutcome> runs(static_cast<std::size_t>(n_traj));
  dynamics::for_each_index(n_traj, exec, [&](int k) {
    runs[static_cast<std::size_t>(k)] =
        experiment.run(dynamics::derive_seed(master_seed, static_cast<std::uint64_t>(k)));
  });

  HeraldSummary s;
  s.t_drive = t_drive;
  s.n_traj = n_traj;
  std::vector<double> success, pooled, port_c, port_d, even;
  for (const auto& r : runs) {
    success.push_back(r.success ? 1.0 : 0.0);
    if (!r.success) continue;
    pooled.push_back(*r.fidelity);
    even.push_back(*r.fidelity_even);
    (r.herald_port == Port::c ? port_c : port_d).push_back(*r.fidelity);
    s.max_fidelity = std::max(s.max_fidelity, r.fidelity_raw);
  }
  s.success = mean_with_error(success);
  s.fidelity = mean_with_error(pooled);
  s.fidelity_c = mean_with_error(port_c);
  s.fidelity_d = mean_with_error(port_d);
  s.fidelity_even = mean_with_error(even);
  if (outcomes != nullptr) *outcomes = std::move(runs);
  return s;
}

HeraldSummary herald_statistics(const model::ModelParams& params,
                                const ProtocolSchedule& schedule, int n_traj,
                                std::uint64_t master_seed, Exec exec) {
  const HeraldExperiment experiment(params, schedule);
  return herald_statistics(experiment, schedule.t_drive, n_traj, master_seed, exec);
}

StateVector analytic_joint_state(const model::ModelParams& params, double t, int n_fock) {
  for (const auto& n : params.nodes) {
    if (n.gamma != 0.0) {
      throw model::ParameterError("analytic_joint_state requires zero dot decoherence");
    }
  }
  const HilbertLayout layout = model::two_node_layout(n_fock);
  // node_amp[i](d, n) = sum_s <d|y_s> <n|alpha_s> / sqrt 2
  std::array<Matrix, 2> node_amp;
  for (int i = 0; i < 2; ++i) {
    const auto& p = params.nodes[i];
    node_amp[i] = Matrix::Zero(2, n_fock);
    for (int s : {+1, -1}) {
      const cplx alpha = model::branch_amplitude_analytic(p.lambda, p.kappa, t, s);
      const Vector field = coherent_state(alpha, n_fock).state.amplitudes();
      const Vector y = model::y_state(s).amplitudes();
      node_amp[i] += (y * field.transpose()) / std::sqrt(2.0);
    }
  }
  Vector v(layout.total_dim());
  std::array<int, 4> digits{};
  for (int d1 = 0; d1 < 2; ++d1) {
    for (int d2 = 0; d2 < 2; ++d2) {
      for (int n1 = 0; n1 < n_fock; ++n1) {
        for (int n2 = 0; n2 < n_fock; ++n2) {
          digits = {d1, d2, n1, n2};
          v(layout.flat_index(digits)) = node_amp[0](d1, n1) * node_amp[1](d2, n2);
        }
      }
    }
  }
  return StateVector(layout, v / v.norm());
}

// ---------------------------------------------------------------------------
// Four-level check

double linear_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw StructuralError("linear_slope: bad input");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  if (sxx == 0.0) throw StructuralError("linear_slope: degenerate abscissa");
  return sxy / sxx;
}

TrionResult trion_population(const model::ModelParams& params, double t_max, double dt,
                             int record_stride, int n_fock, Exec exec) {
  TrionResult out;
  const auto& node = params.nodes[0];
  int nf = n_fock > 0 ? n_fock : params.n_fock;
  if (nf <= 0) nf = model::fock_cutoff(model::max_branch_amplitude(node.lambda, node.kappa, t_max));
  out.n_fock = nf;

  const model::LindbladModel m = model::make_full_node_model(params, nf, 0);
  if (dt <= 0.0) dt = dynamics::choose_dt(m.hamiltonian, t_max);
  out.dt = dt;

  const SparseOperator p_trion =
      embed_sparse(level_projector(4, model::dot::t_plus, "dot") +
                       level_projector(4, model::dot::t_minus, "dot"),
                   "dot", m.layout);
  const SparseOperator n_cav = embed_sparse(number_op(nf, "cav"), "cav", m.layout);
  dynamics::IntegrationOptions opts;
  opts.dt = dt;
  opts.t_max = t_max;
  opts.record_stride = record_stride;
  const std::array<int, 2> ground{model::dot::x_minus, 0};
  const DensityMatrix rho0(StateVector::basis(m.layout, ground));
  auto res = dynamics::propagate_master(
      m, rho0, opts, {{"P_trion", p_trion}, {"n_cav", n_cav}},
      {{"trion_loss", p_trion * cplx(params.gamma_trion)}}, exec);
  TimeSeries& s = res.series;

  // Cycle average over the fastest detuning period removes the Rabi ripple
  // from the sudden switch-on.
  const double period = kTwoPi / std::min(node.delta_plus, node.delta_minus);
  const auto& p = s.column("P_trion");
  std::vector<double> avg(s.size()), survival(s.size());
  std::size_t lo = 0;
  double window_sum = 0.0;
  for (std::size_t r = 0; r < s.size(); ++r) {
    window_sum += p[r];
    while (s.t[r] - s.t[lo] > period) window_sum -= p[lo++];
    avg[r] = window_sum / static_cast<double>(r - lo + 1);
    survival[r] = std::exp(-s.column("trion_loss")[r]);
  }

  // Early window: until the intracavity photon number reaches 0.1.
  const auto& n = s.column("n_cav");
  std::size_t early_end = s.size() - 1;
  for (std::size_t r = 0; r < s.size(); ++r) {
    if (n[r] >= 0.1) {
      early_end = r;
      break;
    }
  }
  out.early_window = s.t[early_end];
  out.early_max_avg = *std::max_element(avg.begin(), avg.begin() + early_end + 1);
  out.perturbative_bound = std::pow(node.omega_plus / node.delta_plus, 2) +
                           std::pow(node.omega_minus / node.delta_minus, 2);

  const auto& loss = s.column("trion_loss");
  out.fitted_rate = linear_slope(s.t, loss);
  const double early_rate =
      early_end >= 2 ? linear_slope(std::vector<double>(s.t.begin(), s.t.begin() + early_end + 1),
                                    std::vector<double>(loss.begin(), loss.begin() + early_end + 1))
                     : 0.0;
  if (params.reference_rate_rad_s > 0.0) {
    const double to_mhz = params.reference_rate_rad_s / kTwoPi / 1e6;
    out.fitted_rate_mhz = out.fitted_rate * to_mhz;
    out.early_rate_mhz = early_rate * to_mhz;
    out.branch_rate_plus_mhz = params.gamma_trion * node.omega_plus * node.g_plus /
                               (node.delta_plus * node.delta_plus) * to_mhz;
    out.branch_rate_minus_mhz = params.gamma_trion * node.omega_minus * node.g_minus /
                                (node.delta_minus * node.delta_minus) * to_mhz;
  }

  s.add_column("P_trion_avg", std::move(avg));
  s.add_column("survival", std::move(survival));
  s.check_shape();
  out.series = std::move(s);
  return out;
}

}  // namespace heraldsim::protocol
