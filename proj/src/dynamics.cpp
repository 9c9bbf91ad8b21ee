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

#include "heraldsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <omp.h>

namespace heraldsim::dynamics {

namespace {

void check_step_rule(const SparseMatrix& h, const IntegrationOptions& opts) {
  if (!(opts.dt > 0.0)) throw StepSizeError("dt must be positive");
  const double bound = kernels::row_sum_bound(h);
  if (opts.dt * bound > opts.max_step_product * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "step rule violated: dt * |H|_bound = " << opts.dt * bound << " > "
        << opts.max_step_product << " (dt=" << opts.dt << ", bound=" << bound << ")";
    throw StepSizeError(msg.str());
  }
}

double real_expectation(const SparseMatrix& op, const Matrix& rho) {
  cplx acc = 0.0;
  for (int i = 0; i < op.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(op, i); it; ++it) acc += it.value() * rho(it.col(), i);
  }
  return acc.real();
}

double normalized_expectation(const SparseMatrix& op, const Vector& psi, Vector& scratch) {
  scratch.resize(psi.size());
  kernels::spmv(op, psi.data(), scratch.data());
  return (psi.dot(scratch) / psi.squaredNorm()).real();
}

}  // namespace

int IntegrationOptions::steps() const {
  if (!(dt > 0.0)) throw StepSizeError("dt must be positive");
  if (t_max < 0.0) throw StructuralError("t_max must be >= 0");
  const double ratio = t_max / dt;
  const long long n = std::llround(ratio);
  if (std::abs(static_cast<double>(n) - ratio) > 1e-6) {
    std::ostringstream msg;
    msg << "t_max=" << t_max << " is not a whole number of steps of dt=" << dt;
    throw StructuralError(msg.str());
  }
  if (record_stride <= 0) throw StructuralError("record_stride must be positive");
  return static_cast<int>(n);
}

double choose_dt(const SparseOperator& hamiltonian, double interval, double max_step_product) {
  if (!(interval > 0.0)) throw StructuralError("choose_dt: interval must be positive");
  const double bound = kernels::row_sum_bound(hamiltonian.matrix());
  const double n = std::max(1.0, std::ceil(interval * bound / max_step_product - 1e-12));
  return interval / n;
}

// ---------------------------------------------------------------------------
// TimeSeries

void TimeSeries::add_column(const std::string& name, std::vector<double> values) {
  if (has(name)) throw StructuralError("duplicate time-series column '" + name + "'");
  names_.push_back(name);
  columns_.push_back(std::move(values));
}

bool TimeSeries::has(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::vector<double>& TimeSeries::column(const std::string& name) {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw StructuralError("no time-series column '" + name + "'");
  return columns_[static_cast<std::size_t>(it - names_.begin())];
}

const std::vector<double>& TimeSeries::column(const std::string& name) const {
  return const_cast<TimeSeries*>(this)->column(name);
}

void TimeSeries::check_shape() const {
  for (std::size_t k = 0; k < names_.size(); ++k) {
    if (columns_[k].size() != t.size()) {
      throw StructuralError("column '" + names_[k] + "' does not match the time grid");
    }
  }
}

// ---------------------------------------------------------------------------
// Master equation

MasterResult propagate_master(const model::LindbladModel& model, const DensityMatrix& rho0,
                              const IntegrationOptions& opts,
                              const std::vector<Observable>& observables,
                              const std::vector<Observable>& integrals, Exec exec,
                              const DensityHook& on_record) {
  if (!(rho0.layout() == model.layout)) {
    throw StructuralError("propagate_master: initial state layout does not match the model");
  }
  for (const auto& o : observables) {
    if (!(o.op.layout() == model.layout)) throw StructuralError("observable layout mismatch");
  }
  for (const auto& o : integrals) {
    if (!(o.op.layout() == model.layout)) throw StructuralError("integral layout mismatch");
  }
  rho0.validate();
  check_step_rule(model.hamiltonian.matrix(), opts);
  const int steps = opts.steps();

  std::vector<SparseMatrix> jumps;
  for (const auto& ch : model.channels) jumps.push_back(ch.op.matrix());
  const auto gen = kernels::LindbladGenerator::build(model.hamiltonian.matrix(), jumps);
  kernels::LindbladWorkspace ws;

  MasterResult out;
  TimeSeries& series = out.series;
  for (const auto& o : observables) series.add_column(o.name);
  for (const auto& o : integrals) series.add_column(o.name);
  series.add_column("trace_err");
  series.add_column("herm_defect");
  series.add_column("min_eig");

  Matrix rho = rho0.matrix();
  std::vector<double> accumulated(integrals.size(), 0.0);

  auto record = [&](std::size_t index, double t) {
    series.t.push_back(t);
    for (const auto& o : observables) {
      series.column(o.name).push_back(real_expectation(o.op.matrix(), rho));
    }
    for (std::size_t k = 0; k < integrals.size(); ++k) {
      series.column(integrals[k].name).push_back(accumulated[k]);
    }
    const DensityMatrix snapshot(model.layout, rho);
    const auto diag = snapshot.diagnostics();
    series.column("trace_err").push_back(diag.trace_error);
    series.column("herm_defect").push_back(diag.hermiticity_defect);
    series.column("min_eig").push_back(diag.min_eigenvalue);
    if (on_record) on_record(index, t, snapshot);
  };

  std::size_t n_records = 0;
  record(n_records++, 0.0);

  Matrix k1, k2, k3, k4, stage;
  const double dt = opts.dt;
  std::vector<double> f(integrals.size());
  auto accumulate = [&](const Matrix& r, double weight) {
    for (std::size_t k = 0; k < integrals.size(); ++k) {
      f[k] += weight * real_expectation(integrals[k].op.matrix(), r);
    }
  };

  for (int step = 1; step <= steps; ++step) {
    std::fill(f.begin(), f.end(), 0.0);
    kernels::lindblad_rhs(gen, rho, k1, ws, exec);
    accumulate(rho, 1.0);
    stage = rho + (0.5 * dt) * k1;
    kernels::lindblad_rhs(gen, stage, k2, ws, exec);
    accumulate(stage, 2.0);
    stage = rho + (0.5 * dt) * k2;
    kernels::lindblad_rhs(gen, stage, k3, ws, exec);
    accumulate(stage, 2.0);
    stage = rho + dt * k3;
    kernels::lindblad_rhs(gen, stage, k4, ws, exec);
    accumulate(stage, 1.0);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    for (std::size_t k = 0; k < integrals.size(); ++k) accumulated[k] += (dt / 6.0) * f[k];

    const double trace_err = std::abs(rho.trace() - cplx(1.0));
    if (!(trace_err <= opts.tolerance_trace)) {
      std::ostringstream msg;
      msg << "trace divergence at t=" << step * dt << ": |Tr rho - 1| = " << trace_err
          << " (dt too large or Fock cutoff too small)";
      throw NumericalIntegrityError(msg.str());
    }
    if (step % opts.record_stride == 0 || step == steps) record(n_records++, step * dt);
  }

  out.final_state = DensityMatrix(model.layout, std::move(rho));
  return out;
}

// ---------------------------------------------------------------------------
// Trajectories

int TrajectoryRecord::count(model::ChannelKind kind) const {
  return static_cast<int>(
      std::count_if(clicks.begin(), clicks.end(), [&](const Click& c) { return c.kind == kind; }));
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  return mix(mix(master_seed) ^ (index * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

TrajectoryModel::TrajectoryModel(const model::LindbladModel& model)
    : layout_(model.layout), h_(model.hamiltonian.matrix()) {
  std::vector<SparseMatrix> ops;
  for (const auto& ch : model.channels) {
    if (!(ch.op.layout() == layout_)) throw StructuralError("channel layout mismatch");
    jumps_.push_back(ch.op.matrix());
    labels_.push_back(ch.label);
    kinds_.push_back(ch.kind);
  }
  h_nh_ = kernels::LindbladGenerator::build(h_, jumps_).h_nonhermitian;
  diagonal_ = SparseOperator(layout_, h_nh_).is_diagonal();
}

TrajectoryState::TrajectoryState(const StateVector& psi0, std::uint64_t seed)
    : psi(psi0.amplitudes()), rng(seed) {
  record.seed = seed;
  threshold = uniform();
}

double TrajectoryState::uniform() {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

StateVector TrajectoryState::normalized_state(const HilbertLayout& layout) const {
  return StateVector(layout, psi / psi.norm());
}

void evolve_segment(const TrajectoryModel& model, TrajectoryState& state, double dt, int steps,
                    int record_stride, const SegmentRecorder& recorder) {
  const SparseMatrix& h = model.h_nonhermitian();
  const auto n = h.rows();
  if (state.psi.size() != n) throw StructuralError("trajectory state does not match the model");

  Vector k1(n), k2(n), k3(n), k4(n), stage(n), scratch(n);
  std::vector<Vector> jumped(model.n_channels(), Vector(n));
  Vector diag_step;
  if (model.diagonal()) {
    diag_step.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      diag_step(i) = std::exp(cplx(0.0, -1.0) * h.coeff(i, i) * dt);
    }
  }

  auto rhs = [&](const Vector& in, Vector& out) {
    kernels::spmv(h, in.data(), out.data());
    out *= cplx(0.0, -1.0);
  };

  std::size_t record_index = 0;
  auto record = [&]() {
    const double norm_sq = state.psi.squaredNorm();
    if (recorder.series != nullptr) {
      TimeSeries& s = *recorder.series;
      s.t.push_back(state.t);
      if (recorder.observables != nullptr) {
        for (const auto& o : *recorder.observables) {
          s.column(o.name).push_back(normalized_expectation(o.op.matrix(), state.psi, scratch));
        }
      }
      s.column("norm_sq").push_back(norm_sq);
      s.column("n_clicks").push_back(static_cast<double>(state.record.clicks.size()));
    }
    if (recorder.on_record) recorder.on_record(record_index, state.t, state.psi / std::sqrt(norm_sq));
    ++record_index;
  };

  if (recorder.record_initial) record();
  const double t0 = state.t;

  for (int step = 1; step <= steps; ++step) {
    if (model.diagonal()) {
      state.psi = state.psi.cwiseProduct(diag_step);
    } else {
      rhs(state.psi, k1);
      stage = state.psi + (0.5 * dt) * k1;
      rhs(stage, k2);
      stage = state.psi + (0.5 * dt) * k2;
      rhs(stage, k3);
      stage = state.psi + dt * k3;
      rhs(stage, k4);
      state.psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    state.t = t0 + step * dt;

    if (state.psi.squaredNorm() < state.threshold) {
      double total = 0.0;
      std::vector<double> weights(model.n_channels());
      for (std::size_t k = 0; k < model.n_channels(); ++k) {
        kernels::spmv(model.jump(k), state.psi.data(), jumped[k].data());
        weights[k] = jumped[k].squaredNorm();
        total += weights[k];
      }
      if (!(total > 0.0)) {
        std::ostringstream msg;
        msg << "jump threshold crossed with zero total jump rate at t=" << state.t
            << " (norm_sq=" << state.psi.squaredNorm() << ", threshold=" << state.threshold << ")";
        throw NumericalIntegrityError(msg.str());
      }
      const double pick = state.uniform() * total;
      std::size_t chosen = model.n_channels() - 1;
      double acc = 0.0;
      for (std::size_t k = 0; k < model.n_channels(); ++k) {
        acc += weights[k];
        if (pick < acc && weights[k] > 0.0) {
          chosen = k;
          break;
        }
      }
      state.psi = jumped[chosen] / std::sqrt(weights[chosen]);
      state.record.clicks.push_back(Click{state.t, model.label(chosen), model.kind(chosen)});
      if (model.kind(chosen) == model::ChannelKind::detector_c) state.record.c_parity ^= 1;
      if (model.kind(chosen) == model::ChannelKind::detector_d) state.record.d_parity ^= 1;
      state.threshold = state.uniform();
    }
    if (step % record_stride == 0 || step == steps) record();
  }
}

std::pair<TrajectoryRecord, TimeSeries> mcwf_trajectory(const model::LindbladModel& model,
                                                        const StateVector& psi0,
                                                        const IntegrationOptions& opts,
                                                        std::uint64_t seed,
                                                        const std::vector<Observable>& observables,
                                                        const StateHook& on_record) {
  if (!(psi0.layout() == model.layout)) {
    throw StructuralError("mcwf_trajectory: initial state layout does not match the model");
  }
  if (std::abs(psi0.norm() - 1.0) > 1e-9) {
    throw NumericalIntegrityError("mcwf_trajectory: initial state is not normalized");
  }
  check_step_rule(model.hamiltonian.matrix(), opts);
  const int steps = opts.steps();

  const TrajectoryModel compiled(model);
  TrajectoryState state(psi0, seed);
  TimeSeries series;
  for (const auto& o : observables) series.add_column(o.name);
  series.add_column("norm_sq");
  series.add_column("n_clicks");

  SegmentRecorder recorder{&observables, &series, on_record, true};
  evolve_segment(compiled, state, opts.dt, steps, opts.record_stride, recorder);

  state.record.final_state = state.normalized_state(model.layout);
  return {std::move(state.record), std::move(series)};
}

void for_each_index(int n, Exec exec, const std::function<void(int)>& body) {
  if (exec == Exec::serial) {
    for (int k = 0; k < n; ++k) body(k);
    return;
  }
  std::exception_ptr failure;
  std::mutex guard;
#pragma omp parallel for schedule(dynamic) num_threads(kernels::worker_threads())
  for (int k = 0; k < n; ++k) {
    try {
      body(k);
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

TimeSeries ensemble_average(const model::LindbladModel& model, const StateVector& psi0,
                            const IntegrationOptions& opts, int n_traj,
                            std::uint64_t master_seed, const std::vector<Observable>& observables,
                            Exec exec) {
  if (n_traj < 1) throw StructuralError("ensemble_average needs n_traj >= 1");
  std::vector<TimeSeries> runs(static_cast<std::size_t>(n_traj));
  for_each_index(n_traj, exec, [&](int k) {
    runs[static_cast<std::size_t>(k)] =
        mcwf_trajectory(model, psi0, opts, derive_seed(master_seed, static_cast<std::uint64_t>(k)),
                        observables)
            .second;
  });

  TimeSeries out;
  out.t = runs.front().t;
  const std::size_t n_rec = out.t.size();
  const double n = static_cast<double>(n_traj);
  for (const auto& o : observables) {
    std::vector<double> mean(n_rec, 0.0), stderr_(n_rec, 0.0);
    for (std::size_t r = 0; r < n_rec; ++r) {
      double sum = 0.0;
      for (const auto& run : runs) sum += run.column(o.name)[r];
      mean[r] = sum / n;
      if (n_traj > 1) {
        double ss = 0.0;
        for (const auto& run : runs) {
          const double d = run.column(o.name)[r] - mean[r];
          ss += d * d;
        }
        stderr_[r] = std::sqrt(ss / (n - 1.0) / n);
      }
    }
    out.add_column(o.name, std::move(mean));
    out.add_column(o.name + "_stderr", std::move(stderr_));
  }
  return out;
}

std::vector<Matrix> ensemble_states(const model::LindbladModel& model, const StateVector& psi0,
                                    const IntegrationOptions& opts, int n_traj,
                                    std::uint64_t master_seed, Exec exec) {
  if (n_traj < 1) throw StructuralError("ensemble_states needs n_traj >= 1");
  const int steps = opts.steps();
  const std::size_t n_rec =
      static_cast<std::size_t>(steps / opts.record_stride) + 1 +
      ((steps % opts.record_stride) != 0 ? 1 : 0);
  std::vector<Matrix> out(n_rec, Matrix(model.layout.total_dim(), n_traj));
  for_each_index(n_traj, exec, [&](int k) {
    mcwf_trajectory(model, psi0, opts, derive_seed(master_seed, static_cast<std::uint64_t>(k)), {},
                    [&](std::size_t r, double, const Vector& psi) { out[r].col(k) = psi; });
  });
  return out;
}

}  // namespace heraldsim::dynamics
