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

#include <algorithm>
#include <array>
#include <cmath>

#include "heraldsim/dynamics.hpp"

using namespace heraldsim;
using dynamics::Exec;

namespace {

// A bare decaying cavity starting in |n>, built directly from qcore pieces.
model::LindbladModel decaying_cavity(int n_fock, double kappa) {
  model::LindbladModel m;
  m.layout = HilbertLayout::single("cav", n_fock);
  m.hamiltonian = SparseOperator::zero(m.layout);
  model::Channel ch;
  ch.label = "cav";
  ch.kind = model::ChannelKind::cavity;
  ch.op = SparseOperator(annihilation_op(n_fock, "cav")) * cplx(std::sqrt(kappa));
  m.channels.push_back(ch);
  return m;
}

StateVector fock(const HilbertLayout& layout, int n) {
  const std::array<int, 1> d{n};
  return StateVector::basis(layout, d);
}

// Mean cavity occupation of the driven, damped single node: every sigma_y
// branch carries a coherent state with |alpha|^2 = (2 lambda/kappa)^2 (1 - e^{-kappa t/2})^2.
double driven_occupation(double lambda, double kappa, double t) {
  const double a = 2.0 * lambda / kappa * (1.0 - std::exp(-0.5 * kappa * t));
  return a * a;
}

}  // namespace

TEST_CASE("integration options demand a whole number of steps") {
  dynamics::IntegrationOptions o;
  o.t_max = 1.0;
  o.dt = 0.1;
  CHECK(o.steps() == 10);
  o.dt = 0.3;
  CHECK_THROWS_AS(o.steps(), StructuralError);
}

TEST_CASE("master equation reproduces the driven cavity occupation") {
  model::ModelParams p;
  p.nodes[0].kappa = 0.8;
  const int nf = 26;
  const auto m = model::make_single_node_model(p, nf);
  dynamics::IntegrationOptions o;
  o.t_max = 3.0;
  o.dt = dynamics::choose_dt(m.hamiltonian, o.t_max);
  o.record_stride = 10;
  const std::array<int, 2> g{0, 0};
  const dynamics::Observable n{"n", embed_sparse(number_op(nf, "cav"), "cav", m.layout)};
  const auto res = dynamics::propagate_master(m, DensityMatrix(StateVector::basis(m.layout, g)), o, {n});
  const auto& col = res.series.column("n");
  for (std::size_t r = 0; r < res.series.size(); ++r) {
    CHECK(col[r] == doctest::Approx(driven_occupation(1.0, 0.8, res.series.t[r])).epsilon(1e-6));
    CHECK(res.series.column("trace_err")[r] < 1e-10);
  }
  CHECK(res.series.t.back() == doctest::Approx(3.0));
}

TEST_CASE("the step rule is enforced") {
  const auto m = model::make_single_node_model(model::ModelParams{}, 10);
  dynamics::IntegrationOptions o;
  o.t_max = 1.0;
  o.dt = 0.5;
  const std::array<int, 2> g{0, 0};
  CHECK_THROWS_AS(
      dynamics::propagate_master(m, DensityMatrix(StateVector::basis(m.layout, g)), o),
      StepSizeError);
}

TEST_CASE("first click times of a decaying photon are exponential") {
  const double kappa = 1.3;
  const auto m = decaying_cavity(3, kappa);
  dynamics::IntegrationOptions o;
  o.t_max = 4.0;
  o.dt = 0.002;
  const int n = 600;
  std::vector<double> times;
  int silent = 0;
  for (int k = 0; k < n; ++k) {
    const auto [rec, series] =
        dynamics::mcwf_trajectory(m, fock(m.layout, 1), o, dynamics::derive_seed(99, k));
    if (rec.clicks.empty()) {
      ++silent;
    } else {
      CHECK(rec.clicks.size() == 1);
      times.push_back(rec.clicks.front().t);
    }
  }
  // Kolmogorov-Smirnov against 1 - e^{-kappa t}, censored at t_max.
  std::sort(times.begin(), times.end());
  double dmax = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double f = 1.0 - std::exp(-kappa * times[i]);
    dmax = std::max({dmax, std::abs(f - static_cast<double>(i) / n),
                     std::abs(f - static_cast<double>(i + 1) / n)});
  }
  CHECK(dmax < 1.63 / std::sqrt(static_cast<double>(n)));
  const double p_silent = std::exp(-kappa * o.t_max);
  CHECK(std::abs(silent - n * p_silent) < 4.0 * std::sqrt(n * p_silent) + 1.0);
}

TEST_CASE("trajectory ensemble converges to the master equation") {
  model::ModelParams p;
  p.nodes[0].gamma = 0.2;
  const int nf = 12;
  const auto m = model::make_single_node_model(p, nf);
  dynamics::IntegrationOptions o;
  o.t_max = 2.0;
  o.dt = dynamics::choose_dt(m.hamiltonian, o.t_max);
  o.record_stride = 20;
  const std::array<int, 2> g{0, 0};
  const auto psi0 = StateVector::basis(m.layout, g);
  const dynamics::Observable n{"n", embed_sparse(number_op(nf, "cav"), "cav", m.layout)};
  const dynamics::Observable sx{"pop", embed_sparse(
      Operator(HilbertLayout::single("dot", 2), Matrix::Identity(2, 2) * 0.5 +
               0.5 * model::sigma_y_dot().matrix()), "dot", m.layout)};
  const auto me = dynamics::propagate_master(m, DensityMatrix(psi0), o, {n, sx});
  // Jumps land on step boundaries, so a first-order dt bias remains.
  const auto avg = dynamics::ensemble_average(m, psi0, o, 400, 5, {n, sx});
  REQUIRE(avg.size() == me.series.size());
  for (const char* name : {"n", "pop"}) {
    const auto& a = avg.column(name);
    const auto& e = me.series.column(name);
    const auto& s = avg.column(std::string(name) + "_stderr");
    for (std::size_t r = 1; r < avg.size(); ++r) {
      CHECK(std::abs(a[r] - e[r]) < 5.0 * s[r] + 1e-3);
    }
  }
}

TEST_CASE("ensembles are reproducible and schedule independent") {
  model::ModelParams p;
  p.nodes[0].gamma = 0.5;
  const auto m = model::make_single_node_model(p, 10);
  dynamics::IntegrationOptions o;
  o.t_max = 1.0;
  o.dt = dynamics::choose_dt(m.hamiltonian, o.t_max);
  o.record_stride = 5;
  const std::array<int, 2> g{0, 0};
  const auto psi0 = StateVector::basis(m.layout, g);
  const dynamics::Observable n{"n", embed_sparse(number_op(10, "cav"), "cav", m.layout)};

  const auto serial = dynamics::ensemble_average(m, psi0, o, 24, 3, {n}, Exec::serial);
  const auto parallel = dynamics::ensemble_average(m, psi0, o, 24, 3, {n}, Exec::parallel);
  CHECK(serial.column("n") == parallel.column("n"));
  CHECK(serial.column("n_stderr") == parallel.column("n_stderr"));

  const auto one = dynamics::ensemble_average(m, psi0, o, 1, 3, {n});
  const auto [rec, single] = dynamics::mcwf_trajectory(m, psi0, o, dynamics::derive_seed(3, 0), {n});
  CHECK(one.column("n") == single.column("n"));

  const auto states = dynamics::ensemble_states(m, psi0, o, 4, 3, Exec::parallel);
  CHECK(states.size() == serial.size());
  CHECK(states.back().cols() == 4);
}

TEST_CASE("derived seeds differ across indices and masters") {
  CHECK(dynamics::derive_seed(1, 0) != dynamics::derive_seed(1, 1));
  CHECK(dynamics::derive_seed(1, 0) != dynamics::derive_seed(2, 0));
  CHECK(dynamics::derive_seed(1, 5) == dynamics::derive_seed(1, 5));
}
