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

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace heraldsim {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

inline constexpr cplx kI{0.0, 1.0};

// Error taxonomy. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class StructuralError : public Error {
 public:
  using Error::Error;
};
class TruncationError : public Error {
 public:
  using Error::Error;
};
class NumericalIntegrityError : public Error {
 public:
  using Error::Error;
};
class StepSizeError : public Error {
 public:
  using Error::Error;
};
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

struct Factor {
  std::string label;
  int dim = 0;

  bool operator==(const Factor&) const = default;
};

/// Ordered tensor-product layout. The first factor is the most significant
/// digit of the flat index.
class HilbertLayout {
 public:
  HilbertLayout() = default;
  explicit HilbertLayout(std::vector<Factor> factors);

  static HilbertLayout single(std::string label, int dim);

  const std::vector<Factor>& factors() const { return factors_; }
  int total_dim() const { return total_dim_; }
  std::size_t size() const { return factors_.size(); }

  /// Index of the factor carrying `label`; throws StructuralError if absent.
  std::size_t position(const std::string& label) const;
  bool contains(const std::string& label) const;
  int dim(const std::string& label) const { return factors_[position(label)].dim; }

  /// Flat index of a multi-index (one digit per factor).
  int flat_index(std::span<const int> digits) const;
  std::vector<int> digits(int flat) const;

  HilbertLayout concat(const HilbertLayout& other) const;

  bool operator==(const HilbertLayout&) const = default;

 private:
  std::vector<Factor> factors_;
  int total_dim_ = 1;
};

class Operator {
 public:
  Operator() = default;
  Operator(HilbertLayout layout, Matrix entries);

  static Operator identity(const HilbertLayout& layout);
  static Operator zero(const HilbertLayout& layout);

  const HilbertLayout& layout() const { return layout_; }
  const Matrix& matrix() const { return entries_; }
  int dim() const { return layout_.total_dim(); }

  Operator adjoint() const;
  /// Same matrix, relabelled layout (dims must match factor by factor in total).
  Operator relabel(HilbertLayout layout) const;

  Operator operator+(const Operator& rhs) const;
  Operator operator-(const Operator& rhs) const;
  Operator operator*(const Operator& rhs) const;
  Operator operator*(cplx s) const;
  friend Operator operator*(cplx s, const Operator& op) { return op * s; }

  double hermiticity_defect() const;

 private:
  HilbertLayout layout_;
  Matrix entries_;
};

/// Sparse counterpart of Operator used for the composite two-node spaces,
/// where dense storage would run to hundreds of megabytes.
class SparseOperator {
 public:
  SparseOperator() = default;
  SparseOperator(HilbertLayout layout, SparseMatrix entries);
  explicit SparseOperator(const Operator& dense, double drop_tol = 0.0);

  static SparseOperator identity(const HilbertLayout& layout);
  static SparseOperator zero(const HilbertLayout& layout);

  const HilbertLayout& layout() const { return layout_; }
  const SparseMatrix& matrix() const { return entries_; }
  int dim() const { return layout_.total_dim(); }

  SparseOperator adjoint() const;
  Operator to_dense() const;

  SparseOperator operator+(const SparseOperator& rhs) const;
  SparseOperator operator-(const SparseOperator& rhs) const;
  SparseOperator operator*(const SparseOperator& rhs) const;
  SparseOperator operator*(cplx s) const;
  friend SparseOperator operator*(cplx s, const SparseOperator& op) { return op * s; }

  double hermiticity_defect() const;
  bool is_diagonal() const;

 private:
  HilbertLayout layout_;
  SparseMatrix entries_;
};

class StateVector {
 public:
  StateVector() = default;
  StateVector(HilbertLayout layout, Vector amplitudes, bool normalized = true);

  /// Computational basis state given one digit per factor.
  static StateVector basis(const HilbertLayout& layout, std::span<const int> digits);

  const HilbertLayout& layout() const { return layout_; }
  const Vector& amplitudes() const { return amplitudes_; }
  bool normalized() const { return normalized_; }
  double norm() const { return amplitudes_.norm(); }

  StateVector normalize() const;
  cplx inner(const StateVector& other) const;  // <this|other>

 private:
  HilbertLayout layout_;
  Vector amplitudes_;
  bool normalized_ = true;
};

StateVector tensor_product(const StateVector& a, const StateVector& b);

struct DensityDiagnostics {
  double hermiticity_defect = 0.0;
  double trace_error = 0.0;
  double min_eigenvalue = 0.0;
};

class DensityMatrix {
 public:
  DensityMatrix() = default;
  DensityMatrix(HilbertLayout layout, Matrix entries);
  explicit DensityMatrix(const StateVector& pure);

  static DensityMatrix maximally_mixed(const HilbertLayout& layout);

  const HilbertLayout& layout() const { return layout_; }
  const Matrix& matrix() const { return entries_; }
  int dim() const { return layout_.total_dim(); }

  cplx trace() const { return entries_.trace(); }
  double purity() const;
  DensityDiagnostics diagnostics() const;
  /// Throws NumericalIntegrityError unless Hermitian to 1e-10, unit trace to
  /// 1e-8 and eigenvalues >= -1e-8.
  void validate() const;

 private:
  HilbertLayout layout_;
  Matrix entries_;
};

DensityMatrix tensor_product(const DensityMatrix& a, const DensityMatrix& b);

// Kronecker products; A's factors precede B's in the result layout.
Operator tensor_product(const Operator& a, const Operator& b);
SparseOperator tensor_product(const SparseOperator& a, const SparseOperator& b);

/// Lifts `op` (acting on the factor labelled `target`) to the whole layout.
Operator embed(const Operator& op, const std::string& target, const HilbertLayout& layout);
SparseOperator embed_sparse(const Operator& op, const std::string& target,
                            const HilbertLayout& layout);

Operator annihilation_op(int n_fock, const std::string& label = "mode");
Operator number_op(int n_fock, const std::string& label = "mode");

struct CoherentState {
  StateVector state;
  double tail_mass = 0.0;  // Poisson weight lost above the cutoff
};

/// Truncated coherent state, renormalised. Throws TruncationError when the
/// discarded Poisson tail exceeds `max_tail`.
CoherentState coherent_state(cplx alpha, int n_fock, const std::string& label = "mode",
                             double max_tail = 1e-4);

/// Poisson(mean) probability mass at n >= cutoff, summed directly.
double poisson_tail(double mean, int cutoff);

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& keep);
DensityMatrix partial_trace(const StateVector& psi, const std::vector<std::string>& keep);

cplx expectation(const Operator& op, const StateVector& psi);
cplx expectation(const Operator& op, const DensityMatrix& rho);
cplx expectation(const SparseOperator& op, const StateVector& psi);
cplx expectation(const SparseOperator& op, const DensityMatrix& rho);

double fidelity_pure(const DensityMatrix& rho, const StateVector& target);
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

}  // namespace heraldsim
