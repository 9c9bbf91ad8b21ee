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

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "heraldsim/kernels.hpp"
#include "heraldsim/model.hpp"
#include "heraldsim/qcore.hpp"

namespace heraldsim::dynamics {

using kernels::Exec;

enum class StepRule { fixed_rk4 };

struct IntegrationOptions {
  double dt = 1e-3;
  double t_max = 1.0;
  int record_stride = 1;
  StepRule step_rule = StepRule::fixed_rk4;
  double tolerance_trace = 1e-8;
  /// dt * (row-sum bound of H) must not exceed this.
  double max_step_product = 0.05;

  int steps() const;  // t_max / dt, which must be (close to) an integer
};

/// Largest dt <= the step rule that divides `interval` into whole steps.
double choose_dt(const SparseOperator& hamiltonian, double interval, double max_step_product = 0.05);

/// Uniform grid plus named real columns of equal length.
class TimeSeries {
 public:
  std::vector<double> t;

  void add_column(const std::string& name, std::vector<double> values = {});
  bool has(const std::string& name) const;
  std::vector<double>& column(const std::string& name);
  const std::vector<double>& column(const std::string& name) const;
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return t.size(); }
  /// Throws StructuralError unless every column matches the grid length.
  void check_shape() const;

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
};

struct Observable {
  std::string name;
  SparseOperator op;
};

struct MasterResult {
  TimeSeries series;
  DensityMatrix final_state;
};

using DensityHook = std::function<void(std::size_t record, double t, const DensityMatrix& rho)>;

/// Fixed-step RK4 on the Lindblad generator. Records the real part of each
/// observable, the time integral of each `integrals` entry (same quadrature
/// as the state update), and the diagnostics columns trace_err,
/// herm_defect, min_eig. Aborts with NumericalIntegrityError when the trace
/// error exceeds opts.tolerance_trace.
MasterResult propagate_master(const model::LindbladModel& model, const DensityMatrix& rho0,
                              const IntegrationOptions& opts,
                              const std::vector<Observable>& observables = {},
                              const std::vector<Observable>& integrals = {},
                              Exec exec = Exec::serial, const DensityHook& on_record = {});

// ---------------------------------------------------------------------------
// Quantum-jump trajectories

struct Click {
  double t = 0.0;
  std::string label;
  model::ChannelKind kind = model::ChannelKind::cavity;
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::vector<Click> clicks;
  int c_parity = 0;
  int d_parity = 0;
  StateVector final_state;

  int count(model::ChannelKind kind) const;
};

/// Splitmix-style hash of (master seed, index); independent of scheduling.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

/// Jump-unravelling data compiled from a LindbladModel.
class TrajectoryModel {
 public:
  explicit TrajectoryModel(const model::LindbladModel& model);

  const HilbertLayout& layout() const { return layout_; }
  const SparseMatrix& h_nonhermitian() const { return h_nh_; }
  const SparseMatrix& hamiltonian() const { return h_; }
  std::size_t n_channels() const { return jumps_.size(); }
  const SparseMatrix& jump(std::size_t k) const { return jumps_[k]; }
  const std::string& label(std::size_t k) const { return labels_[k]; }
  model::ChannelKind kind(std::size_t k) const { return kinds_[k]; }
  /// True when H_nh is diagonal; such segments are stepped exactly.
  bool diagonal() const { return diagonal_; }

 private:
  HilbertLayout layout_;
  SparseMatrix h_;
  SparseMatrix h_nh_;
  std::vector<SparseMatrix> jumps_;
  std::vector<std::string> labels_;
  std::vector<model::ChannelKind> kinds_;
  bool diagonal_ = false;
};

/// Mutable state of one trajectory; survives across schedule segments.
struct TrajectoryState {
  Vector psi;  // unnormalised between jumps
  double t = 0.0;
  std::mt19937_64 rng;
  double threshold = 0.0;
  TrajectoryRecord record;

  TrajectoryState(const StateVector& psi0, std::uint64_t seed);
  double uniform();
  StateVector normalized_state(const HilbertLayout& layout) const;
};

using StateHook = std::function<void(std::size_t record, double t, const Vector& psi)>;

struct SegmentRecorder {
  const std::vector<Observable>* observables = nullptr;
  TimeSeries* series = nullptr;   // appended to when non-null
  StateHook on_record;            // normalised state at each record point
  bool record_initial = true;     // include the segment's first point
};

/// Advances `state` through `steps` fixed steps of size dt under `model`.
void evolve_segment(const TrajectoryModel& model, TrajectoryState& state, double dt, int steps,
                    int record_stride, const SegmentRecorder& recorder = {});

/// First-order Monte-Carlo wavefunction trajectory over [0, t_max].
/// Observables are evaluated on the normalised state; the series also
/// carries norm_sq (pre-renormalisation squared norm) and n_clicks.
std::pair<TrajectoryRecord, TimeSeries> mcwf_trajectory(
    const model::LindbladModel& model, const StateVector& psi0, const IntegrationOptions& opts,
    std::uint64_t seed, const std::vector<Observable>& observables = {},
    const StateHook& on_record = {});

/// Mean and standard error of observables over n_traj trajectories with
/// seeds derive_seed(master_seed, k). Columns: <name>, <name>_stderr.
/// Serial and parallel execution give bit-identical output.
TimeSeries ensemble_average(const model::LindbladModel& model, const StateVector& psi0,
                            const IntegrationOptions& opts, int n_traj,
                            std::uint64_t master_seed, const std::vector<Observable>& observables,
                            Exec exec = Exec::parallel);

/// Normalised trajectory states at every record point: result[r] has one
/// column per trajectory.
std::vector<Matrix> ensemble_states(const model::LindbladModel& model, const StateVector& psi0,
                                    const IntegrationOptions& opts, int n_traj,
                                    std::uint64_t master_seed, Exec exec = Exec::parallel);

/// Runs body(k) for k in [0, n). The parallel path uses OpenMP dynamic
/// scheduling; results must be written to per-index slots.
void for_each_index(int n, Exec exec, const std::function<void(int)>& body);

}  // namespace heraldsim::dynamics
