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

#include "heraldsim/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include <omp.h>

namespace heraldsim::kernels {

namespace {

int g_threads = 0;

inline void spmv_row(const SparseMatrix& a, int row, const cplx* x, cplx* y) {
  const auto* outer = a.outerIndexPtr();
  const auto* inner = a.innerIndexPtr();
  const cplx* val = a.valuePtr();
  cplx acc = 0.0;
  for (auto k = outer[row]; k < outer[row + 1]; ++k) acc += val[k] * x[inner[k]];
  y[row] = acc;
}

}  // namespace

int worker_threads() {
  if (g_threads > 0) return g_threads;
  if (const char* env = std::getenv("HERALDSIM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

void set_worker_threads(int n) { g_threads = std::max(0, n); }

void spmv(const SparseMatrix& a, const cplx* x, cplx* y, Exec exec) {
  const int rows = static_cast<int>(a.rows());
  if (exec == Exec::serial) {
    for (int i = 0; i < rows; ++i) spmv_row(a, i, x, y);
    return;
  }
#pragma omp parallel for schedule(static) num_threads(worker_threads())
  for (int i = 0; i < rows; ++i) spmv_row(a, i, x, y);
}

void spmm(const SparseMatrix& a, const Matrix& b, Matrix& out, Exec exec) {
  out.resize(a.rows(), b.cols());
  const int cols = static_cast<int>(b.cols());
  const int rows = static_cast<int>(a.rows());
  if (exec == Exec::serial) {
    for (int j = 0; j < cols; ++j) {
      for (int i = 0; i < rows; ++i) spmv_row(a, i, b.col(j).data(), out.col(j).data());
    }
    return;
  }
#pragma omp parallel for schedule(static) num_threads(worker_threads())
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) spmv_row(a, i, b.col(j).data(), out.col(j).data());
  }
}

LindbladGenerator LindbladGenerator::build(const SparseMatrix& hamiltonian,
                                           const std::vector<SparseMatrix>& jumps) {
  LindbladGenerator g;
  SparseMatrix decay(hamiltonian.rows(), hamiltonian.cols());
  for (const auto& l : jumps) {
    SparseMatrix adj = l.adjoint();
    decay += SparseMatrix(adj * l);
    g.jumps.push_back(l);
    g.jumps_adjoint.push_back(std::move(adj));
  }
  g.h_nonhermitian = hamiltonian - cplx(0.0, 0.5) * decay;
  // Beamsplitter cross terms cancel exactly in c^dag c + d^dag d; drop them.
  g.h_nonhermitian.prune([](Eigen::Index, Eigen::Index, const cplx& v) { return v != cplx(0.0); });
  g.h_nonhermitian.makeCompressed();
  return g;
}

void lindblad_rhs(const LindbladGenerator& gen, const Matrix& rho, Matrix& out,
                  LindbladWorkspace& ws, Exec exec) {
  const int n = gen.dim();
  out.resize(n, n);
  spmm(gen.h_nonhermitian, rho, ws.x, exec);

  // -i (X - X^dag), X = H_nh rho; rho H_nh^dag equals X^dag for Hermitian rho.
  auto commutator_col = [&](int j) {
    for (int i = 0; i < n; ++i) {
      out(i, j) = cplx(0.0, -1.0) * (ws.x(i, j) - std::conj(ws.x(j, i)));
    }
  };
  if (exec == Exec::serial) {
    for (int j = 0; j < n; ++j) commutator_col(j);
  } else {
#pragma omp parallel for schedule(static) num_threads(worker_threads())
    for (int j = 0; j < n; ++j) commutator_col(j);
  }

  for (const auto& l : gen.jumps) {
    spmm(l, rho, ws.y, exec);  // Y = L rho
    ws.z = ws.y.adjoint();     // Y^dag = rho L^dag
    spmm(l, ws.z, ws.y, exec); // L rho L^dag
    if (exec == Exec::serial) {
      out += ws.y;
    } else {
#pragma omp parallel for schedule(static) num_threads(worker_threads())
      for (int j = 0; j < n; ++j) out.col(j) += ws.y.col(j);
    }
  }
}

double row_sum_bound(const SparseMatrix& a) {
  double worst = 0.0;
  for (int i = 0; i < a.outerSize(); ++i) {
    double row = 0.0;
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) row += std::abs(it.value());
    worst = std::max(worst, row);
  }
  return worst;
}

}  // namespace heraldsim::kernels
