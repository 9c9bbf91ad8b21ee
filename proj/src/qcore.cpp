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

#include "heraldsim/qcore.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

namespace heraldsim {

namespace {

void require_same_layout(const HilbertLayout& a, const HilbertLayout& b, const char* what) {
  if (!(a == b)) {
    throw StructuralError(std::string(what) + ": layout mismatch");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// HilbertLayout

HilbertLayout::HilbertLayout(std::vector<Factor> factors) : factors_(std::move(factors)) {
  std::set<std::string> seen;
  total_dim_ = 1;
  for (const auto& f : factors_) {
    if (f.dim <= 0) {
      throw StructuralError("factor '" + f.label + "' has non-positive dimension");
    }
    if (!seen.insert(f.label).second) {
      throw StructuralError("duplicate factor label '" + f.label + "'");
    }
    total_dim_ *= f.dim;
  }
}

HilbertLayout HilbertLayout::single(std::string label, int dim) {
  return HilbertLayout({Factor{std::move(label), dim}});
}

std::size_t HilbertLayout::position(const std::string& label) const {
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    if (factors_[k].label == label) return k;
  }
  throw StructuralError("unknown factor label '" + label + "'");
}

bool HilbertLayout::contains(const std::string& label) const {
  return std::any_of(factors_.begin(), factors_.end(),
                     [&](const Factor& f) { return f.label == label; });
}

int HilbertLayout::flat_index(std::span<const int> digits) const {
  if (digits.size() != factors_.size()) {
    throw StructuralError("multi-index length does not match layout");
  }
  int idx = 0;
  for (std::size_t k = 0; k < factors_.size(); ++k) {
    if (digits[k] < 0 || digits[k] >= factors_[k].dim) {
      throw StructuralError("digit out of range for factor '" + factors_[k].label + "'");
    }
    idx = idx * factors_[k].dim + digits[k];
  }
  return idx;
}

std::vector<int> HilbertLayout::digits(int flat) const {
  std::vector<int> out(factors_.size());
  for (std::size_t k = factors_.size(); k-- > 0;) {
    out[k] = flat % factors_[k].dim;
    flat /= factors_[k].dim;
  }
  return out;
}

HilbertLayout HilbertLayout::concat(const HilbertLayout& other) const {
  std::vector<Factor> all = factors_;
  all.insert(all.end(), other.factors_.begin(), other.factors_.end());
  return HilbertLayout(std::move(all));
}

// ---------------------------------------------------------------------------
// Operator

Operator::Operator(HilbertLayout layout, Matrix entries)
    : layout_(std::move(layout)), entries_(std::move(entries)) {
  if (entries_.rows() != layout_.total_dim() || entries_.cols() != layout_.total_dim()) {
    throw StructuralError("operator matrix does not match layout dimension");
  }
}

Operator Operator::identity(const HilbertLayout& layout) {
  return Operator(layout, Matrix::Identity(layout.total_dim(), layout.total_dim()));
}

Operator Operator::zero(const HilbertLayout& layout) {
  return Operator(layout, Matrix::Zero(layout.total_dim(), layout.total_dim()));
}

Operator Operator::adjoint() const { return Operator(layout_, entries_.adjoint()); }

Operator Operator::relabel(HilbertLayout layout) const {
  return Operator(std::move(layout), entries_);
}

Operator Operator::operator+(const Operator& rhs) const {
  require_same_layout(layout_, rhs.layout_, "operator +");
  return Operator(layout_, entries_ + rhs.entries_);
}

Operator Operator::operator-(const Operator& rhs) const {
  require_same_layout(layout_, rhs.layout_, "operator -");
  return Operator(layout_, entries_ - rhs.entries_);
}

Operator Operator::operator*(const Operator& rhs) const {
  require_same_layout(layout_, rhs.layout_, "operator *");
  return Operator(layout_, entries_ * rhs.entries_);
}

Operator Operator::operator*(cplx s) const { return Operator(layout_, entries_ * s); }

double Operator::hermiticity_defect() const {
  if (entries_.size() == 0) return 0.0;
  return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// SparseOperator

SparseOperator::SparseOperator(HilbertLayout layout, SparseMatrix entries)
    : layout_(std::move(layout)), entries_(std::move(entries)) {
  if (entries_.rows() != layout_.total_dim() || entries_.cols() != layout_.total_dim()) {
    throw StructuralError("sparse operator does not match layout dimension");
  }
  entries_.makeCompressed();
}

SparseOperator::SparseOperator(const Operator& dense, double drop_tol)
    : layout_(dense.layout()) {
  entries_ = dense.matrix().sparseView(1.0, drop_tol);
  entries_.makeCompressed();
}

SparseOperator SparseOperator::identity(const HilbertLayout& layout) {
  SparseMatrix m(layout.total_dim(), layout.total_dim());
  m.setIdentity();
  return SparseOperator(layout, std::move(m));
}

SparseOperator SparseOperator::zero(const HilbertLayout& layout) {
  return SparseOperator(layout, SparseMatrix(layout.total_dim(), layout.total_dim()));
}

SparseOperator SparseOperator::adjoint() const {
  SparseMatrix adj = entries_.adjoint();
  return SparseOperator(layout_, std::move(adj));
}

Operator SparseOperator::to_dense() const { return Operator(layout_, Matrix(entries_)); }

SparseOperator SparseOperator::operator+(const SparseOperator& rhs) const {
  require_same_layout(layout_, rhs.layout_, "sparse operator +");
  SparseMatrix sum = entries_ + rhs.entries_;
  return SparseOperator(layout_, std::move(sum));
}

SparseOperator SparseOperator::operator-(const SparseOperator& rhs) const {
  require_same_layout(layout_, rhs.layout_, "sparse operator -");
  SparseMatrix diff = entries_ - rhs.entries_;
  return SparseOperator(layout_, std::move(diff));
}

SparseOperator SparseOperator::operator*(const SparseOperator& rhs) const {
  require_same_layout(layout_, rhs.layout_, "sparse operator *");
  SparseMatrix prod = entries_ * rhs.entries_;
  return SparseOperator(layout_, std::move(prod));
}

SparseOperator SparseOperator::operator*(cplx s) const {
  SparseMatrix scaled = entries_ * s;
  return SparseOperator(layout_, std::move(scaled));
}

double SparseOperator::hermiticity_defect() const {
  SparseMatrix diff = entries_ - SparseMatrix(entries_.adjoint());
  double worst = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) {
      worst = std::max(worst, std::abs(it.value()));
    }
  }
  return worst;
}

bool SparseOperator::is_diagonal() const {
  for (int k = 0; k < entries_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(entries_, k); it; ++it) {
      if (it.row() != it.col() && it.value() != cplx(0.0)) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(HilbertLayout layout, Vector amplitudes, bool normalized)
    : layout_(std::move(layout)), amplitudes_(std::move(amplitudes)), normalized_(normalized) {
  if (amplitudes_.size() != layout_.total_dim()) {
    throw StructuralError("state vector length does not match layout dimension");
  }
  if (normalized_ && std::abs(amplitudes_.norm() - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "state flagged normalized has norm " << amplitudes_.norm();
    throw NumericalIntegrityError(msg.str());
  }
}

StateVector StateVector::basis(const HilbertLayout& layout, std::span<const int> digits) {
  Vector v = Vector::Zero(layout.total_dim());
  v(layout.flat_index(digits)) = 1.0;
  return StateVector(layout, std::move(v));
}

StateVector StateVector::normalize() const {
  const double n = amplitudes_.norm();
  if (n == 0.0) throw NumericalIntegrityError("cannot normalize a zero state");
  return StateVector(layout_, amplitudes_ / n, true);
}

cplx StateVector::inner(const StateVector& other) const {
  require_same_layout(layout_, other.layout_, "inner product");
  return amplitudes_.dot(other.amplitudes_);
}

StateVector tensor_product(const StateVector& a, const StateVector& b) {
  HilbertLayout layout = a.layout().concat(b.layout());
  Vector v(layout.total_dim());
  const auto nb = b.amplitudes().size();
  for (Eigen::Index i = 0; i < a.amplitudes().size(); ++i) {
    v.segment(i * nb, nb) = a.amplitudes()(i) * b.amplitudes();
  }
  return StateVector(std::move(layout), std::move(v), a.normalized() && b.normalized());
}

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(HilbertLayout layout, Matrix entries)
    : layout_(std::move(layout)), entries_(std::move(entries)) {
  if (entries_.rows() != layout_.total_dim() || entries_.cols() != layout_.total_dim()) {
    throw StructuralError("density matrix does not match layout dimension");
  }
}

DensityMatrix::DensityMatrix(const StateVector& pure)
    : layout_(pure.layout()), entries_(pure.amplitudes() * pure.amplitudes().adjoint()) {}

DensityMatrix DensityMatrix::maximally_mixed(const HilbertLayout& layout) {
  const int d = layout.total_dim();
  return DensityMatrix(layout, Matrix::Identity(d, d) / static_cast<double>(d));
}

double DensityMatrix::purity() const { return (entries_ * entries_).trace().real(); }

DensityDiagnostics DensityMatrix::diagnostics() const {
  DensityDiagnostics d;
  d.hermiticity_defect = (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
  d.trace_error = std::abs(entries_.trace() - cplx(1.0));
  const Matrix herm = 0.5 * (entries_ + entries_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(herm, Eigen::EigenvaluesOnly);
  d.min_eigenvalue = solver.eigenvalues().minCoeff();
  return d;
}

void DensityMatrix::validate() const {
  const auto d = diagnostics();
  std::ostringstream msg;
  if (d.hermiticity_defect > 1e-10) {
    msg << "density matrix not Hermitian (defect " << d.hermiticity_defect << ")";
  } else if (d.trace_error > 1e-8) {
    msg << "density matrix trace off by " << d.trace_error;
  } else if (d.min_eigenvalue < -1e-8) {
    msg << "density matrix has negative eigenvalue " << d.min_eigenvalue;
  } else {
    return;
  }
  throw NumericalIntegrityError(msg.str());
}

DensityMatrix tensor_product(const DensityMatrix& a, const DensityMatrix& b) {
  HilbertLayout layout = a.layout().concat(b.layout());
  Matrix m = Eigen::kroneckerProduct(a.matrix(), b.matrix()).eval();
  return DensityMatrix(std::move(layout), std::move(m));
}

// ---------------------------------------------------------------------------
// Tensor products and embedding

Operator tensor_product(const Operator& a, const Operator& b) {
  HilbertLayout layout = a.layout().concat(b.layout());
  Matrix m = Eigen::kroneckerProduct(a.matrix(), b.matrix()).eval();
  return Operator(std::move(layout), std::move(m));
}

SparseOperator tensor_product(const SparseOperator& a, const SparseOperator& b) {
  HilbertLayout layout = a.layout().concat(b.layout());
  SparseMatrix m = Eigen::kroneckerProduct(a.matrix(), b.matrix());
  return SparseOperator(std::move(layout), std::move(m));
}

namespace {

struct EmbedDims {
  int before = 1;
  int after = 1;
};

EmbedDims embed_dims(const Operator& op, const std::string& target, const HilbertLayout& layout) {
  const std::size_t pos = layout.position(target);
  if (op.dim() != layout.factors()[pos].dim) {
    throw StructuralError("embed: operator dimension " + std::to_string(op.dim()) +
                          " does not match factor '" + target + "'");
  }
  EmbedDims d;
  for (std::size_t k = 0; k < pos; ++k) d.before *= layout.factors()[k].dim;
  for (std::size_t k = pos + 1; k < layout.size(); ++k) d.after *= layout.factors()[k].dim;
  return d;
}

}  // namespace

Operator embed(const Operator& op, const std::string& target, const HilbertLayout& layout) {
  const auto d = embed_dims(op, target, layout);
  Matrix m = Eigen::kroneckerProduct(
                 Matrix::Identity(d.before, d.before),
                 Eigen::kroneckerProduct(op.matrix(), Matrix::Identity(d.after, d.after)).eval())
                 .eval();
  return Operator(layout, std::move(m));
}

SparseOperator embed_sparse(const Operator& op, const std::string& target,
                            const HilbertLayout& layout) {
  const auto d = embed_dims(op, target, layout);
  SparseMatrix before(d.before, d.before);
  before.setIdentity();
  SparseMatrix after(d.after, d.after);
  after.setIdentity();
  SparseMatrix local = op.matrix().sparseView();
  SparseMatrix inner = Eigen::kroneckerProduct(local, after);
  SparseMatrix full = Eigen::kroneckerProduct(before, inner);
  return SparseOperator(layout, std::move(full));
}

Operator annihilation_op(int n_fock, const std::string& label) {
  if (n_fock < 2) throw StructuralError("annihilation_op needs n_fock >= 2");
  Matrix a = Matrix::Zero(n_fock, n_fock);
  for (int n = 1; n < n_fock; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return Operator(HilbertLayout::single(label, n_fock), std::move(a));
}

Operator number_op(int n_fock, const std::string& label) {
  if (n_fock < 2) throw StructuralError("number_op needs n_fock >= 2");
  Matrix n = Matrix::Zero(n_fock, n_fock);
  for (int k = 0; k < n_fock; ++k) n(k, k) = k;
  return Operator(HilbertLayout::single(label, n_fock), std::move(n));
}

// ---------------------------------------------------------------------------
// Coherent states

double poisson_tail(double mean, int cutoff) {
  if (cutoff <= 0) return 1.0;
  if (mean <= 0.0) return 0.0;
  double log_term = -mean + cutoff * std::log(mean) - std::lgamma(cutoff + 1.0);
  double term = std::exp(log_term);
  double sum = 0.0;
  for (int n = cutoff; n < cutoff + 100000; ++n) {
    sum += term;
    term *= mean / (n + 1.0);
    if (n > mean && term < 1e-18 * sum) break;
    if (term == 0.0) break;
  }
  return sum;
}

CoherentState coherent_state(cplx alpha, int n_fock, const std::string& label,
                             double max_tail) {
  if (n_fock < 2) throw StructuralError("coherent_state needs n_fock >= 2");
  const double mean = std::norm(alpha);
  const double tail = poisson_tail(mean, n_fock);
  if (tail > max_tail) {
    std::ostringstream msg;
    msg << "coherent state |alpha|=" << std::abs(alpha) << " loses " << tail
        << " probability above n_fock=" << n_fock << "; raise the cutoff";
    throw TruncationError(msg.str());
  }
  Vector c(n_fock);
  c(0) = std::exp(-0.5 * mean);
  for (int n = 0; n + 1 < n_fock; ++n) {
    c(n + 1) = c(n) * alpha / std::sqrt(n + 1.0);
  }
  c /= c.norm();
  return CoherentState{StateVector(HilbertLayout::single(label, n_fock), std::move(c)), tail};
}

// ---------------------------------------------------------------------------
// Reductions

namespace {

struct TraceSplit {
  HilbertLayout kept;
  // full flat index = kept_offset[k] + traced_offset[t]
  std::vector<int> kept_offset;
  std::vector<int> traced_offset;
};

TraceSplit split_for_trace(const HilbertLayout& layout, const std::vector<std::string>& keep) {
  if (keep.empty()) throw StructuralError("partial_trace: keep list is empty");
  std::vector<bool> is_kept(layout.size(), false);
  for (const auto& label : keep) is_kept[layout.position(label)] = true;

  std::vector<Factor> kept_factors;
  std::vector<int> stride(layout.size(), 1);
  for (std::size_t k = layout.size(); k-- > 1;) {
    stride[k - 1] = stride[k] * layout.factors()[k].dim;
  }
  std::vector<std::size_t> kept_pos, traced_pos;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (is_kept[k]) {
      kept_factors.push_back(layout.factors()[k]);
      kept_pos.push_back(k);
    } else {
      traced_pos.push_back(k);
    }
  }

  auto offsets = [&](const std::vector<std::size_t>& positions) {
    std::vector<int> out{0};
    for (std::size_t p : positions) {
      std::vector<int> next;
      next.reserve(out.size() * layout.factors()[p].dim);
      for (int base : out) {
        for (int d = 0; d < layout.factors()[p].dim; ++d) next.push_back(base + d * stride[p]);
      }
      out = std::move(next);
    }
    return out;
  };

  return TraceSplit{HilbertLayout(std::move(kept_factors)), offsets(kept_pos),
                    offsets(traced_pos)};
}

}  // namespace

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& keep) {
  const auto split = split_for_trace(rho.layout(), keep);
  const int nk = static_cast<int>(split.kept_offset.size());
  Matrix out = Matrix::Zero(nk, nk);
  const Matrix& m = rho.matrix();
  for (int j = 0; j < nk; ++j) {
    for (int i = 0; i < nk; ++i) {
      cplx acc = 0.0;
      for (int t : split.traced_offset) {
        acc += m(split.kept_offset[i] + t, split.kept_offset[j] + t);
      }
      out(i, j) = acc;
    }
  }
  return DensityMatrix(split.kept, std::move(out));
}

DensityMatrix partial_trace(const StateVector& psi, const std::vector<std::string>& keep) {
  const auto split = split_for_trace(psi.layout(), keep);
  const int nk = static_cast<int>(split.kept_offset.size());
  const int nt = static_cast<int>(split.traced_offset.size());
  Matrix block(nk, nt);
  for (int i = 0; i < nk; ++i) {
    for (int t = 0; t < nt; ++t) {
      block(i, t) = psi.amplitudes()(split.kept_offset[i] + split.traced_offset[t]);
    }
  }
  Matrix out = block * block.adjoint();
  return DensityMatrix(split.kept, std::move(out));
}

cplx expectation(const Operator& op, const StateVector& psi) {
  require_same_layout(op.layout(), psi.layout(), "expectation");
  return psi.amplitudes().dot(op.matrix() * psi.amplitudes());
}

cplx expectation(const Operator& op, const DensityMatrix& rho) {
  require_same_layout(op.layout(), rho.layout(), "expectation");
  return (op.matrix() * rho.matrix()).trace();
}

cplx expectation(const SparseOperator& op, const StateVector& psi) {
  require_same_layout(op.layout(), psi.layout(), "expectation");
  return psi.amplitudes().dot(op.matrix() * psi.amplitudes());
}

cplx expectation(const SparseOperator& op, const DensityMatrix& rho) {
  require_same_layout(op.layout(), rho.layout(), "expectation");
  const SparseMatrix& a = op.matrix();
  const Matrix& r = rho.matrix();
  // Tr(A rho) = sum_ij A_ij rho_ji
  cplx acc = 0.0;
  for (int i = 0; i < a.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) acc += it.value() * r(it.col(), i);
  }
  return acc;
}

double fidelity_pure(const DensityMatrix& rho, const StateVector& target) {
  require_same_layout(rho.layout(), target.layout(), "fidelity_pure");
  if (std::abs(target.norm() - 1.0) > 1e-9) {
    throw NumericalIntegrityError("fidelity_pure: target is not normalized");
  }
  const double f = target.amplitudes().dot(rho.matrix() * target.amplitudes()).real();
  if (f < -1e-8 || f > 1.0 + 1e-8) {
    std::ostringstream msg;
    msg << "fidelity " << f << " outside [0,1] beyond tolerance";
    throw NumericalIntegrityError(msg.str());
  }
  return std::clamp(f, 0.0, 1.0);
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  require_same_layout(a.layout(), b.layout(), "trace_distance");
  const Matrix diff = a.matrix() - b.matrix();
  const Matrix herm = 0.5 * (diff + diff.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(herm, Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

}  // namespace heraldsim
