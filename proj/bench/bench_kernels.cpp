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

// Serial against OpenMP-parallel kernels on the two-node Hilbert space.

#include <benchmark/benchmark.h>

#include <random>

#include "heraldsim/dynamics.hpp"
#include "heraldsim/kernels.hpp"
#include "heraldsim/model.hpp"

using namespace heraldsim;
using kernels::Exec;

namespace {

Matrix random_state(int n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  Matrix rho = a * a.adjoint();
  return rho / rho.trace();
}

model::ModelParams bench_params() {
  model::ModelParams p;
  for (auto& n : p.nodes) n.gamma = 0.05;
  return p;
}

void BM_spmm(benchmark::State& state) {
  const auto exec = state.range(1) ? Exec::parallel : Exec::serial;
  const auto m = model::make_two_node_model(bench_params(), static_cast<int>(state.range(0)));
  const Matrix b = random_state(m.layout.total_dim());
  Matrix out;
  for (auto _ : state) {
    kernels::spmm(m.hamiltonian.matrix(), b, out, exec);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_lindblad_rhs(benchmark::State& state) {
  const auto exec = state.range(1) ? Exec::parallel : Exec::serial;
  const auto m = model::make_two_node_model(bench_params(), static_cast<int>(state.range(0)));
  std::vector<SparseMatrix> jumps;
  for (const auto& c : m.channels) jumps.push_back(c.op.matrix());
  const auto gen = kernels::LindbladGenerator::build(m.hamiltonian.matrix(), jumps);
  const Matrix rho = random_state(m.layout.total_dim());
  kernels::LindbladWorkspace ws;
  Matrix out;
  for (auto _ : state) {
    kernels::lindblad_rhs(gen, rho, out, ws, exec);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_ensemble(benchmark::State& state) {
  const auto exec = state.range(0) ? Exec::parallel : Exec::serial;
  const auto m = model::make_two_node_model(bench_params(), 6);
  dynamics::IntegrationOptions o;
  o.t_max = 1.0;
  o.dt = dynamics::choose_dt(m.hamiltonian, o.t_max);
  o.record_stride = o.steps();
  std::vector<int> ground(4, 0);
  const auto psi0 = StateVector::basis(m.layout, ground);
  for (auto _ : state) {
    auto series = dynamics::ensemble_average(m, psi0, o, 32, 7, {}, exec);
    benchmark::DoNotOptimize(series.t.data());
  }
}

}  // namespace

BENCHMARK(BM_spmm)->ArgsProduct({{8, 12}, {0, 1}});
BENCHMARK(BM_lindblad_rhs)->ArgsProduct({{6, 9}, {0, 1}});
BENCHMARK(BM_ensemble)->Arg(0)->Arg(1);

BENCHMARK_MAIN();
