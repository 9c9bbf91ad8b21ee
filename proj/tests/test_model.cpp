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

#include <cmath>

#include "heraldsim/model.hpp"

using namespace heraldsim;

TEST_CASE("Raman coupling from physical inputs") {
  const auto plus = model::lambda_from_physical(41.4, 90.0, 414.0);
  const auto minus = model::lambda_from_physical(46.0, 90.0, 460.0);
  CHECK(plus.ueV == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(minus.ueV == doctest::Approx(9.0).epsilon(1e-12));
  // hbar = 6.582119569e-16 eV s, so 9 ueV / hbar / 2 pi in GHz:
  const double ghz = 9e-6 / 6.582119569e-16 / (2.0 * 3.14159265358979323846) / 1e9;
  CHECK(plus.ghz_over_2pi() == doctest::Approx(ghz).epsilon(1e-10));
  CHECK(std::abs(ghz - 2.2) / 2.2 < 0.02);
}

TEST_CASE("sigma_y eigenstates") {
  const Operator sy = model::sigma_y_dot();
  for (int s : {+1, -1}) {
    const auto y = model::y_state(s);
    const Vector out = sy.matrix() * y.amplitudes();
    CHECK((out - static_cast<double>(s) * y.amplitudes()).norm() < 1e-14);
  }
  CHECK(std::abs(model::y_state(1).inner(model::y_state(-1))) < 1e-15);
}

TEST_CASE("effective Hamiltonian is Hermitian and couples each dot to its cavity") {
  model::ModelParams p;
  p.nodes[1].lambda = 1.7;
  const auto layout = model::two_node_layout(5);
  const auto h = model::build_effective_hamiltonian(p, layout);
  CHECK(h.hermiticity_defect() < 1e-14);
  // Oracle built from independent pieces.
  const Operator x1 = embed(annihilation_op(5, "cav1"), "cav1", layout);
  const Operator x2 = embed(annihilation_op(5, "cav2"), "cav2", layout);
  const Operator s1 = embed(model::sigma_y_dot("dot1"), "dot1", layout);
  const Operator s2 = embed(model::sigma_y_dot("dot2"), "dot2", layout);
  const Operator expect = s1 * (x1 + x1.adjoint()) * cplx(1.0) + s2 * (x2 + x2.adjoint()) * cplx(1.7);
  CHECK((h.to_dense().matrix() - expect.matrix()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("beamsplitter modes conserve the detected photon flux") {
  model::ModelParams p;
  p.nodes[0].kappa = 0.4;
  p.nodes[1].kappa = 1.9;
  const auto layout = model::two_node_layout(4);
  const auto modes = model::detector_jump_ops(p, layout);
  const Matrix lhs = (modes.c.adjoint() * modes.c + modes.d.adjoint() * modes.d).to_dense().matrix();
  const Matrix n1 = embed(number_op(4, "cav1"), "cav1", layout).matrix();
  const Matrix n2 = embed(number_op(4, "cav2"), "cav2", layout).matrix();
  CHECK((lhs - 0.4 * n1 - 1.9 * n2).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("collapse operators omit zero rates and label detectors") {
  model::ModelParams p;
  p.nodes[0].gamma = 0.2;
  const auto m = model::make_two_node_model(p, 4);
  int c = 0, d = 0, dots = 0;
  for (const auto& ch : m.channels) {
    c += ch.kind == model::ChannelKind::detector_c;
    d += ch.kind == model::ChannelKind::detector_d;
    dots += ch.kind == model::ChannelKind::dot;
  }
  CHECK(c == 1);
  CHECK(d == 1);
  CHECK(dots == 1);
  const auto off = model::make_two_node_model(p, 4, false);
  CHECK(off.hamiltonian.matrix().nonZeros() == 0);
}

TEST_CASE("branch amplitudes and the cutoff policy") {
  CHECK(std::abs(model::branch_amplitude_analytic(1.0, 0.0, 2.0, +1) - cplx(0.0, -2.0)) < 1e-15);
  const cplx a = model::branch_amplitude_analytic(1.0, 1.0, 3.0, -1);
  CHECK(a.imag() == doctest::Approx(2.0 * (1.0 - std::exp(-1.5))));
  CHECK(model::max_branch_amplitude(1.0, 0.0, 2.0) == doctest::Approx(2.0));
  CHECK(model::fock_cutoff(0.0) == 9);
  CHECK(model::fock_cutoff(2.0) == 25);
  CHECK(model::fock_cutoff(0.0) >= 4);
}

TEST_CASE("parameter invariants") {
  model::ModelParams p;
  p.nodes[0].kappa = -1.0;
  CHECK_THROWS_AS(model::check_params(p, model::ModelKind::effective), model::ParameterError);
  p.nodes[0].kappa = 1.0;
  p.nodes[1].gamma = -0.1;
  CHECK_THROWS_AS(model::check_params(p, model::ModelKind::effective), model::ParameterError);
}

TEST_CASE("physical reduction uses lambda_1 as the rate unit") {
  const auto p = model::reduce_physical(model::inas_physical_nodes(), model::kInasTrionDecayMhz);
  CHECK(p.nodes[0].lambda == doctest::Approx(1.0));
  const double unit = 9e-6 / 6.582119569e-16;
  CHECK(p.reference_rate_rad_s == doctest::Approx(unit).epsilon(1e-9));
  CHECK(p.gamma_trion == doctest::Approx(2.0 * 3.14159265358979323846 * 130e6 / unit).epsilon(1e-9));
  CHECK(p.nodes[0].delta_plus == doctest::Approx(414.0 / 9.0).epsilon(1e-12));
  const auto r = model::check_params(p, model::ModelKind::full);
  CHECK(r.branch_plus[0] == doctest::Approx(1.0).epsilon(1e-12));
}
