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

// The two-node heralding experiment: photon counting, heralded Bell
// fidelity with click-parity correction, the no-click analytic state, and
// the four-level trion check.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "heraldsim/dynamics.hpp"
#include "heraldsim/model.hpp"
#include "heraldsim/qcore.hpp"

namespace heraldsim::protocol {

using dynamics::Exec;
using dynamics::TimeSeries;

struct ProtocolSchedule {
  double t_drive = 3.0;
  double t_ringdown = 0.0;  // <= 0 picks 20 / min(kappa)
  double dt = 0.0;          // <= 0 picks the largest dt allowed by the step rule
  int record_stride = 1;
  /// Keep dot decoherence switched on while the lasers are off.
  bool ringdown_decoherence = false;

  double ringdown_duration(const model::ModelParams& params) const;
};

enum class Port { none, c, d };
const char* to_string(Port port);

/// (|y+y+> + (-1)^p |y-y->)/sqrt 2 for port c, (|y+y-> + (-1)^p |y-y+>)/sqrt 2
/// for port d, on the (dot1, dot2) layout.
StateVector bell_target(Port port, int parity);

struct HeraldOutcome {
  dynamics::TrajectoryRecord record;
  Port herald_port = Port::none;
  int parity = 0;  // click parity at the heralding port
  StateVector target_state;
  std::optional<double> fidelity;      // against the parity-adjusted target
  std::optional<double> fidelity_even; // against the even-parity target
  double fidelity_raw = 0.0;           // <target|rho|target> before clamping
  bool success = false;
  double herald_time = 0.0;
};

/// Tr(L rho L^dag); throws NumericalIntegrityError below -1e-12.
double detection_rate(const DensityMatrix& rho, const SparseOperator& jump);

/// Master-equation photon counting from |X-,X-,0,0>. Columns:
/// N_1, N_2 (time-integrated kappa_i <n_i>), N_total = N_1 + N_2,
/// N = N_total / 2 (mean per node), and per-node trace diagnostics.
/// The two-node unconditional state factorizes, so each node is propagated
/// on its own (dot, cavity) space.
TimeSeries mean_detected_photons(const model::ModelParams& params, double t_max, double dt = 0.0,
                                 int record_stride = 1, int n_fock = 0);

/// Cutoff used for the trajectory runs over a drive window of length t_drive.
int protocol_fock_cutoff(const model::ModelParams& params, double t_drive);

/// Precompiled drive and ring-down models shared by an ensemble.
class HeraldExperiment {
 public:
  HeraldExperiment(const model::ModelParams& params, const ProtocolSchedule& schedule,
                   int n_fock = 0);

  HeraldOutcome run(std::uint64_t seed) const;

  const model::LindbladModel& drive_model() const { return drive_; }
  const StateVector& initial_state() const { return psi0_; }
  int n_fock() const { return n_fock_; }
  double dt() const { return dt_; }
  int drive_steps() const { return drive_steps_; }
  int ringdown_steps() const { return ring_steps_; }
  double t_end() const { return dt_ * (drive_steps_ + ring_steps_); }

 private:
  model::LindbladModel drive_;
  dynamics::TrajectoryModel drive_traj_;
  dynamics::TrajectoryModel ring_traj_;
  StateVector psi0_;
  int n_fock_ = 0;
  double dt_ = 0.0;
  int drive_steps_ = 0;
  int ring_steps_ = 0;
};

HeraldOutcome run_herald_protocol(const model::ModelParams& params,
                                  const ProtocolSchedule& schedule, std::uint64_t seed);

struct MeanWithError {
  double mean = 0.0;
  double stderr_ = 0.0;
  int count = 0;
};

struct HeraldSummary {
  double t_drive = 0.0;
  int n_traj = 0;
  MeanWithError success;        // indicator of >= 1 detector click
  MeanWithError fidelity;       // pooled over both ports
  MeanWithError fidelity_c;
  MeanWithError fidelity_d;
  MeanWithError fidelity_even;  // pooled, fixed even-parity targets
  double max_fidelity = 0.0;    // largest pre-clamp value seen
};

MeanWithError mean_with_error(const std::vector<double>& values);

/// Aggregates run() over seeds derive_seed(master_seed, k).
HeraldSummary herald_statistics(const HeraldExperiment& experiment, double t_drive, int n_traj,
                                std::uint64_t master_seed, Exec exec = Exec::parallel,
                                std::vector<HeraldOutcome>* outcomes = nullptr);

HeraldSummary herald_statistics(const model::ModelParams& params,
                                const ProtocolSchedule& schedule, int n_traj,
                                std::uint64_t master_seed, Exec exec = Exec::parallel);

/// Pre-herald (no-click) state for Gamma_1 = Gamma_2 = 0 on the two-node
/// layout: the product over nodes of (|y+>|alpha_+> + |y->|alpha_->)/sqrt 2.
/// The no-click damping factor is branch independent and drops out on
/// normalisation.
StateVector analytic_joint_state(const model::ModelParams& params, double t, int n_fock);

struct TrionResult {
  TimeSeries series;            // P_trion, P_trion_avg, survival, plus diagnostics
  double early_max_avg = 0.0;   // max of the cycle-averaged P_trion over the early window
  double early_window = 0.0;    // reduced time bounding "before cavity buildup"
  double perturbative_bound = 0.0;
  double fitted_rate = 0.0;     // reduced units
  double fitted_rate_mhz = 0.0; // rate / 2 pi in MHz
  double early_rate_mhz = 0.0;  // same fit restricted to the early window
  double branch_rate_plus_mhz = 0.0;  // Gamma_T Omega_+ g_+ / Delta_+^2 over 2 pi
  double branch_rate_minus_mhz = 0.0;
  int n_fock = 0;
  double dt = 0.0;
};

/// Single-node four-level evolution from |X->|0>. Records P_trion and the
/// trion-decay survival S(t) = exp(-int Gamma_T P_trion); the effective
/// loss rate is the slope of a least-squares line through -ln S(t).
TrionResult trion_population(const model::ModelParams& params, double t_max, double dt = 0.0,
                             int record_stride = 1, int n_fock = 0, Exec exec = Exec::serial);

/// Least-squares slope of y against x.
double linear_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace heraldsim::protocol
