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
#include <map>

#include "heraldsim/protocol.hpp"

using namespace heraldsim;
using protocol::Port;
using dynamics::Exec;

namespace {

// Time-integrated detected photons of one driven node, from integrating
// kappa |alpha(s)|^2 by hand.
double photons_closed_form(double lambda, double kappa, double t) {
  const double e1 = 1.0 - std::exp(-0.5 * kappa * t);
  const double e2 = 1.0 - std::exp(-kappa * t);
  return 4.0 * lambda * lambda / kappa * (t - 4.0 / kappa * e1 + e2 / kappa);
}

// Branch amplitude of node i with sigma_y sign s at time t of a protocol
// with drive length T: grows during the drive and rings down afterwards.
cplx node_amplitude(const model::NodeParams& n, int s, double t, double drive) {
  const double tt = std::min(t, drive);
  cplx a = cplx(0.0, -s * 2.0 * n.lambda / n.kappa * (1.0 - std::exp(-0.5 * n.kappa * tt)));
  if (t > drive) a *= std::exp(-0.5 * n.kappa * (t - drive));
  return a;
}

// Dot state predicted from a click record when Gamma = 0: each branch
// (s1, s2) picks up the detector eigenvalue at every click; the no-click
// damping is branch independent because |alpha_+| = |alpha_-|.
Vector predicted_dots(const model::ModelParams& p, const dynamics::TrajectoryRecord& rec,
                      double drive) {
  Vector psi = Vector::Zero(4);
  const Vector yp = model::y_state(+1).amplitudes();
  const Vector ym = model::y_state(-1).amplitudes();
  const double k1 = std::sqrt(p.nodes[0].kappa), k2 = std::sqrt(p.nodes[1].kappa);
  for (int s1 : {+1, -1}) {
    for (int s2 : {+1, -1}) {
      cplx w = 0.5;
      for (const auto& c : rec.clicks) {
        const cplx a1 = node_amplitude(p.nodes[0], s1, c.t, drive);
        const cplx a2 = node_amplitude(p.nodes[1], s2, c.t, drive);
        const double sign = c.kind == model::ChannelKind::detector_c ? 1.0 : -1.0;
        w *= cplx(0.0, -1.0) * (k1 * a1 + sign * k2 * a2) / std::sqrt(2.0);
      }
      const Vector v1 = s1 > 0 ? yp : ym;
      const Vector v2 = s2 > 0 ? yp : ym;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) psi(2 * i + j) += w * v1(i) * v2(j);
    }
  }
  return psi / psi.norm();
}

double dot_overlap(const protocol::HeraldOutcome& o, const Vector& psi) {
  const DensityMatrix dots = partial_trace(o.record.final_state, {"dot1", "dot2"});
  return (psi.adjoint() * dots.matrix() * psi)(0, 0).real();
}

}  // namespace

TEST_CASE("detected photon number follows the closed form") {
  for (double kappa : {1.0, 0.1}) {
    model::ModelParams p;
    for (auto& n : p.nodes) n.kappa = kappa;
    const auto s = protocol::mean_detected_photons(p, 3.0);
    CHECK(s.column("N").back() ==
          doctest::Approx(photons_closed_form(1.0, kappa, 3.0)).epsilon(1e-5));
    CHECK(s.column("N_total").back() == doctest::Approx(2.0 * s.column("N").back()));
  }
  CHECK(photons_closed_form(1.0, 1.0, 3.0) == doctest::Approx(3.37).epsilon(0.01));
  CHECK(photons_closed_form(1.0, 0.1, 3.0) == doctest::Approx(0.81).epsilon(0.01));
}

TEST_CASE("Bell targets are orthonormal and parity flips the sign") {
  const auto c0 = protocol::bell_target(Port::c, 0);
  const auto c1 = protocol::bell_target(Port::c, 1);
  const auto d0 = protocol::bell_target(Port::d, 0);
  const auto d1 = protocol::bell_target(Port::d, 3);
  for (const auto* a : {&c0, &c1, &d0, &d1}) {
    CHECK(a->norm() == doctest::Approx(1.0));
    for (const auto* b : {&c0, &c1, &d0, &d1}) {
      if (a != b) CHECK(std::abs(a->inner(*b)) < 1e-14);
    }
  }
  // |y+y+> component is +1/sqrt 2 for port c.
  const Vector yy = tensor_product(model::y_state(1, "dot1"), model::y_state(1, "dot2")).amplitudes();
  CHECK(std::abs(yy.dot(c1.amplitudes()) - 1.0 / std::sqrt(2.0)) < 1e-14);
}

TEST_CASE("no-click state matches the product of displaced branches") {
  model::ModelParams p;
  p.nodes[1].lambda = 0.7;
  p.nodes[1].kappa = 1.4;
  const int nf = 10;
  const auto m = model::make_two_node_model(p, nf);
  const dynamics::TrajectoryModel tm(m);
  const std::array<int, 4> g{0, 0, 0, 0};
  dynamics::TrajectoryState st(StateVector::basis(m.layout, g), 1);
  st.threshold = -1.0;  // suppress jumps
  const double dt = 0.005;
  dynamics::evolve_segment(tm, st, dt, 200, 200);
  const auto psi = st.normalized_state(m.layout);
  const auto expect = protocol::analytic_joint_state(p, 1.0, nf);
  CHECK(std::norm(expect.inner(psi)) > 1.0 - 1e-8);
}

TEST_CASE("heralded Bell fidelity is perfect without dot decoherence") {
  model::ModelParams p;
  protocol::ProtocolSchedule s;
  s.t_drive = 1.0;
  const protocol::HeraldExperiment ex(p, s);
  std::vector<protocol::HeraldOutcome> out;
  const auto sum = protocol::herald_statistics(ex, s.t_drive, 40, 17, Exec::parallel, &out);
  CHECK(sum.success.mean > 0.5);
  for (const auto& o : out) {
    if (!o.success) continue;
    CHECK(std::abs(*o.fidelity - 1.0) < 1e-6);
  }
}

TEST_CASE("trajectory dot state matches the click-record oracle") {
  struct Case {
    double lambda2, kappa2;
  };
  for (const Case c : {Case{0.6, 1.0}, Case{1.0, 0.5}}) {
    CAPTURE(c.lambda2);
    CAPTURE(c.kappa2);
    model::ModelParams p;
    p.nodes[1].lambda = c.lambda2;
    p.nodes[1].kappa = c.kappa2;
    protocol::ProtocolSchedule s;
    s.t_drive = 1.2;
    const protocol::HeraldExperiment ex(p, s);
    const double drive = ex.dt() * ex.drive_steps();
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 24; ++seed) {
      const auto o = ex.run(dynamics::derive_seed(77, seed));
      if (!o.success) continue;
      ++checked;
      CHECK(dot_overlap(o, predicted_dots(p, o.record, drive)) > 1.0 - 1e-5);
    }
    CHECK(checked > 5);
  }
}

TEST_CASE("two-node master equation factorizes over nodes") {
  model::ModelParams p;
  p.nodes[0].gamma = 0.1;
  p.nodes[1].kappa = 0.6;
  p.nodes[1].lambda = 0.8;
  const int nf = 4;
  const auto two = model::make_two_node_model(p, nf);
  dynamics::IntegrationOptions o;
  o.t_max = 0.5;
  o.dt = dynamics::choose_dt(two.hamiltonian, o.t_max);
  o.record_stride = o.steps();
  const std::array<int, 4> g4{0, 0, 0, 0};
  const auto joint = dynamics::propagate_master(
      two, DensityMatrix(StateVector::basis(two.layout, g4)), o);
  const std::array<int, 2> g2{0, 0};
  for (int node = 0; node < 2; ++node) {
    const auto one = model::make_single_node_model(p, nf, node);
    const auto single = dynamics::propagate_master(
        one, DensityMatrix(StateVector::basis(one.layout, g2)), o);
    const std::string i = std::to_string(node + 1);
    const auto marginal = partial_trace(joint.final_state, {"dot" + i, "cav" + i});
    CHECK((marginal.matrix() - single.final_state.matrix()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("trion loss rate fit") {
  std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
  CHECK(protocol::linear_slope(x, y) == doctest::Approx(2.0));
}

TEST_CASE("analytic joint state requires zero dot decoherence") {
  model::ModelParams p;
  p.nodes[0].gamma = 0.1;
  CHECK_THROWS_AS(protocol::analytic_joint_state(p, 1.0, 8), model::ParameterError);
}
