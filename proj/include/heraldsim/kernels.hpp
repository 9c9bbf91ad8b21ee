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

// Hot loops of the integrators. Every kernel has a serial reference and an
// OpenMP version; the two must agree bit for bit (each output element is
// produced by the same sequence of floating-point operations).

#pragma once

#include <vector>

#include "heraldsim/qcore.hpp"

namespace heraldsim::kernels {

enum class Exec { serial, parallel };

/// Worker count for parallel kernels: HERALDSIM_THREADS if set, otherwise
/// the OpenMP default.
int worker_threads();
void set_worker_threads(int n);

// y = A x
void spmv(const SparseMatrix& a, const cplx* x, cplx* y, Exec exec = Exec::serial);

// out = A B  (B dense, column-major)
void spmm(const SparseMatrix& a, const Matrix& b, Matrix& out, Exec exec = Exec::serial);

/// Precompiled Lindblad generator:
///   d rho/dt = -i (H_nh rho - rho H_nh^dag) + sum_k L_k rho L_k^dag
/// with H_nh = H - (i/2) sum_k L_k^dag L_k.
struct LindbladGenerator {
  SparseMatrix h_nonhermitian;
  std::vector<SparseMatrix> jumps;
  std::vector<SparseMatrix> jumps_adjoint;

  static LindbladGenerator build(const SparseMatrix& hamiltonian,
                                 const std::vector<SparseMatrix>& jumps);
  int dim() const { return static_cast<int>(h_nonhermitian.rows()); }
};

struct LindbladWorkspace {
  Matrix x;
  Matrix y;
  Matrix z;
};

void lindblad_rhs(const LindbladGenerator& gen, const Matrix& rho, Matrix& out,
                  LindbladWorkspace& ws, Exec exec = Exec::serial);

/// Largest absolute row sum; bounds the spectral radius.
double row_sum_bound(const SparseMatrix& a);

}  // namespace heraldsim::kernels
