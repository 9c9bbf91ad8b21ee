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

#include <random>

#include "heraldsim/kernels.hpp"
#include "heraldsim/model.hpp"

using namespace heraldsim;
using kernels::Exec;

namespace {

Matrix random_density(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  Matrix rho = a * a.adjoint();
  return rho / rho.trace();
}

// Dense textbook generator, written without the precompiled H_nh form.
Matrix dense_lindblad(const Matrix& h, const std::vector<Matrix>& ls, const Matrix& rho) {
  const cplx i(0.0, 1.0);
  Matrix out = -i * (h * rho - rho * h);
  for (const auto& l : ls) {
    const Matrix ldl = l.adjoint() * l;
    out += l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl);
  }
  return out;
}

}  // namespace

TEST_CASE("sparse products agree between serial and parallel paths") {
  model::ModelParams p;
  p.nodes[1].lambda = 0.8;
  const auto layout = model::two_node_layout(5);
  const SparseMatrix h = model::build_effective_hamiltonian(p, layout).matrix();
  const Matrix b = random_density(layout.total_dim(), 7);
  Matrix s, q;
  kernels::spmm(h, b, s, Exec::serial);
  kernels::spmm(h, b, q, Exec::parallel);
  CHECK((s - q).cwiseAbs().maxCoeff() == 0.0);
  const Matrix dense = Matrix(h) * b;
  CHECK((s - dense).cwiseAbs().maxCoeff() < 1e-12);

  Vector y1(layout.total_dim()), y2(layout.total_dim());
  kernels::spmv(h, b.col(0).data(), y1.data(), Exec::serial);
  kernels::spmv(h, b.col(0).data(), y2.data(), Exec::parallel);
  CHECK((y1 - y2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Lindblad right-hand side matches the dense generator") {
  model::ModelParams p;
  p.nodes[0].gamma = 0.3;
  p.nodes[1].kappa = 0.6;
  const auto m = model::make_two_node_model(p, 4);
  std::vector<SparseMatrix> jumps;
  std::vector<Matrix> dense_jumps;
  for (const auto& c : m.channels) {
    jumps.push_back(c.op.matrix());
    dense_jumps.emplace_back(c.op.matrix());
  }
  const auto gen = kernels::LindbladGenerator::build(m.hamiltonian.matrix(), jumps);
  const Matrix rho = random_density(m.layout.total_dim(), 11);
  kernels::LindbladWorkspace ws;
  Matrix serial, parallel;
  kernels::lindblad_rhs(gen, rho, serial, ws, Exec::serial);
  kernels::lindblad_rhs(gen, rho, parallel, ws, Exec::parallel);
  const Matrix expect = dense_lindblad(Matrix(m.hamiltonian.matrix()), dense_jumps, rho);
  CHECK((serial - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((serial - parallel).cwiseAbs().maxCoeff() == 0.0);
  // Trace preservation of the generator.
  CHECK(std::abs(serial.trace()) < 1e-12);
}

TEST_CASE("row-sum bound dominates the spectral radius") {
  const auto m = model::make_single_node_model(model::ModelParams{}, 8);
  const Matrix h(m.hamiltonian.matrix());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
  CHECK(kernels::row_sum_bound(m.hamiltonian.matrix()) >= radius - 1e-12);
}

TEST_CASE("worker thread override") {
  const int before = kernels::worker_threads();
  kernels::set_worker_threads(1);
  CHECK(kernels::worker_threads() == 1);
  kernels::set_worker_threads(0);
  CHECK(kernels::worker_threads() == before);
}
