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

#include <array>
#include <cmath>

#include "heraldsim/qcore.hpp"

using namespace heraldsim;

namespace {

// Independent dense reference: |<alpha|beta>|^2 = exp(-|alpha - beta|^2).
double coherent_overlap_sq(cplx a, cplx b) { return std::exp(-std::norm(a - b)); }

}  // namespace

TEST_CASE("layout digits round-trip through flat indices") {
  const HilbertLayout layout({{"a", 2}, {"b", 3}, {"c", 4}});
  CHECK(layout.total_dim() == 24);
  for (int flat = 0; flat < layout.total_dim(); ++flat) {
    const auto d = layout.digits(flat);
    CHECK(layout.flat_index(d) == flat);
  }
  // Last factor varies fastest.
  const std::array<int, 3> d{1, 0, 2};
  CHECK(layout.flat_index(d) == 1 * 12 + 0 * 4 + 2);
  CHECK_THROWS_AS(layout.position("z"), StructuralError);
}

TEST_CASE("ladder operators obey the truncated commutator") {
  const int n = 7;
  const Operator a = annihilation_op(n, "m");
  const Matrix comm = a.matrix() * a.matrix().adjoint() - a.matrix().adjoint() * a.matrix();
  for (int k = 0; k < n - 1; ++k) CHECK(std::abs(comm(k, k) - 1.0) < 1e-14);
  CHECK(std::abs(comm(n - 1, n - 1) - cplx(1.0 - n)) < 1e-12);
  const Operator num = number_op(n, "m");
  for (int k = 0; k < n; ++k) CHECK(num.matrix()(k, k).real() == doctest::Approx(k));
}

TEST_CASE("coherent states match the overlap formula") {
  const int n = 40;
  const cplx a{0.7, -0.4}, b{-0.3, 1.1};
  const auto sa = coherent_state(a, n, "m");
  const auto sb = coherent_state(b, n, "m");
  CHECK(std::abs(sa.state.norm() - 1.0) < 1e-12);
  CHECK(std::norm(sa.state.inner(sb.state)) == doctest::Approx(coherent_overlap_sq(a, b)).epsilon(1e-10));
  CHECK(expectation(number_op(n, "m"), sa.state).real() == doctest::Approx(std::norm(a)).epsilon(1e-10));
  CHECK_THROWS_AS(coherent_state(cplx(3.0, 0.0), 6, "m"), TruncationError);
}

TEST_CASE("partial trace of a product state returns the factor") {
  const auto x = coherent_state(cplx(0.5, 0.2), 12, "x").state;
  Vector v(2);
  v << 0.6, cplx(0.0, 0.8);
  const StateVector q(HilbertLayout::single("q", 2), v);
  const auto joint = tensor_product(q, x);
  const DensityMatrix rq = partial_trace(joint, {"q"});
  const Matrix expect = v * v.adjoint();
  CHECK((rq.matrix() - expect).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(rq.purity() == doctest::Approx(1.0));
}

TEST_CASE("embedding places an operator on the requested factor") {
  const HilbertLayout layout({{"a", 2}, {"b", 3}});
  const Operator nb = number_op(3, "b");
  const Operator e = embed(nb, "b", layout);
  // Oracle: I_2 (x) n_3 written out by hand.
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      const double expect = (i == j) ? static_cast<double>(i % 3) : 0.0;
      CHECK(std::abs(e.matrix()(i, j) - expect) < 1e-15);
    }
  }
  const SparseOperator es = embed_sparse(nb, "b", layout);
  CHECK((es.to_dense().matrix() - e.matrix()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fidelity and trace distance on diagonal states") {
  const HilbertLayout layout = HilbertLayout::single("q", 3);
  Matrix a = Matrix::Zero(3, 3), b = Matrix::Zero(3, 3);
  a.diagonal() << 0.5, 0.3, 0.2;
  b.diagonal() << 0.2, 0.3, 0.5;
  const DensityMatrix ra(layout, a), rb(layout, b);
  CHECK(trace_distance(ra, rb) == doctest::Approx(0.3));
  const std::array<int, 1> d{0};
  CHECK(fidelity_pure(ra, StateVector::basis(layout, d)) == doctest::Approx(0.5));
}

TEST_CASE("density-matrix validation rejects broken states") {
  const HilbertLayout layout = HilbertLayout::single("q", 2);
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.2;
  m(1, 1) = -0.2;
  CHECK_THROWS_AS(DensityMatrix(layout, m).validate(), NumericalIntegrityError);
  m(0, 0) = 0.5;
  m(1, 1) = 0.5;
  m(0, 1) = 0.1;
  CHECK_THROWS_AS(DensityMatrix(layout, m).validate(), NumericalIntegrityError);
  m(1, 0) = 0.1;
  CHECK_NOTHROW(DensityMatrix(layout, m).validate());
}
