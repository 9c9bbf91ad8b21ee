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

#include "heraldsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace heraldsim::model {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Operator projector(int dim, int row, int col, const std::string& label) {
  Matrix m = Matrix::Zero(dim, dim);
  m(row, col) = 1.0;
  return Operator(HilbertLayout::single(label, dim), std::move(m));
}

bool is_two_node(const HilbertLayout& layout) {
  return layout.size() == 4 && layout.contains("dot1") && layout.contains("dot2") &&
         layout.contains("cav1") && layout.contains("cav2") && layout.dim("dot1") == 2 &&
         layout.dim("dot2") == 2;
}

bool is_single_effective(const HilbertLayout& layout) {
  return layout.size() == 2 && layout.contains("dot") && layout.contains("cav") &&
         layout.dim("dot") == 2;
}

bool is_full_node(const HilbertLayout& layout) {
  return layout.size() == 2 && layout.contains("dot") && layout.contains("cav") &&
         layout.dim("dot") == 4;
}

void require_nonnegative(double v, const char* name, int node) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    std::ostringstream msg;
    msg << name << "_" << node + 1 << " must be a finite rate >= 0 (got " << v << ")";
    throw ParameterError(msg.str());
  }
}

Operator dot_decoherence_op(DotDecoherence kind, int dot_dim, const std::string& label) {
  if (kind == DotDecoherence::relaxation) {
    return projector(dot_dim, dot::x_minus, dot::x_plus, label);
  }
  return projector(dot_dim, dot::x_plus, dot::x_plus, label) -
         projector(dot_dim, dot::x_minus, dot::x_minus, label);
}

}  // namespace

double LambdaValue::ghz_over_2pi() const { return rad_per_s / kTwoPi / 1e9; }

double ueV_to_rad_per_s(double ueV) { return ueV * 1e-6 / kHbarEvS; }
double rad_per_s_to_ueV(double w) { return w * kHbarEvS * 1e6; }

LambdaValue lambda_from_physical(double omega_ueV, double g_ueV, double delta_ueV) {
  if (delta_ueV == 0.0) throw ParameterError("lambda_from_physical: detuning must be nonzero");
  const double ueV = omega_ueV * g_ueV / delta_ueV;
  return LambdaValue{ueV, ueV_to_rad_per_s(ueV)};
}

ModelParams reduce_physical(const std::array<PhysicalNode, 2>& nodes, double gamma_trion_mhz) {
  const auto& ref = nodes[0];
  const LambdaValue unit =
      lambda_from_physical(ref.omega_plus_ueV, ref.g_plus_ueV, ref.delta_plus_ueV);
  if (unit.ueV <= 0.0) throw ParameterError("reference lambda_1 must be positive");
  const auto energy = [&](double ueV) { return ueV / unit.ueV; };
  const auto rate = [&](double mhz) { return kTwoPi * mhz * 1e6 / unit.rad_per_s; };

  ModelParams p;
  p.unit_mode = UnitMode::physical_ueV;
  p.reference_rate_rad_s = unit.rad_per_s;
  p.gamma_trion = rate(gamma_trion_mhz);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& n = nodes[i];
    auto& out = p.nodes[i];
    out.omega_plus = energy(n.omega_plus_ueV);
    out.omega_minus = energy(n.omega_minus_ueV);
    out.g_plus = energy(n.g_plus_ueV);
    out.g_minus = energy(n.g_minus_ueV);
    out.delta_plus = energy(n.delta_plus_ueV);
    out.delta_minus = energy(n.delta_minus_ueV);
    out.lambda =
        n.delta_plus_ueV > 0.0 ? energy(n.omega_plus_ueV * n.g_plus_ueV / n.delta_plus_ueV) : 0.0;
    out.kappa = rate(n.kappa_mhz);
    out.gamma = rate(n.gamma_mhz);
  }
  return p;
}

std::array<PhysicalNode, 2> inas_physical_nodes() {
  PhysicalNode n;
  n.delta_minus_ueV = 460.0;
  n.delta_plus_ueV = 414.0;
  n.omega_plus_ueV = 41.4;
  n.omega_minus_ueV = 46.0;
  n.g_plus_ueV = 90.0;
  n.g_minus_ueV = 90.0;
  const LambdaValue lam = lambda_from_physical(n.omega_plus_ueV, n.g_plus_ueV, n.delta_plus_ueV);
  n.kappa_mhz = lam.rad_per_s / kTwoPi / 1e6;
  n.gamma_mhz = 0.0;
  return {n, n};
}

ParamReport check_params(const ModelParams& params, ModelKind kind) {
  ParamReport report;
  require_nonnegative(params.gamma_trion, "gamma_T", 0);
  if (params.n_fock != 0 && params.n_fock < 2) {
    throw ParameterError("n_fock must be >= 2 (or 0 for the cutoff policy)");
  }
  for (int i = 0; i < 2; ++i) {
    const auto& n = params.nodes[i];
    require_nonnegative(n.lambda, "lambda", i);
    require_nonnegative(n.kappa, "kappa", i);
    require_nonnegative(n.gamma, "gamma", i);
    require_nonnegative(n.omega_plus, "omega_plus", i);
    require_nonnegative(n.omega_minus, "omega_minus", i);
    require_nonnegative(n.g_plus, "g_plus", i);
    require_nonnegative(n.g_minus, "g_minus", i);
    if (kind == ModelKind::full) {
      if (!(n.delta_plus > 0.0) || !(n.delta_minus > 0.0)) {
        std::ostringstream msg;
        msg << "detunings delta_plus_" << i + 1 << " and delta_minus_" << i + 1
            << " must be > 0 for the full model";
        throw ParameterError(msg.str());
      }
    }
    if (n.delta_plus > 0.0 && n.delta_minus > 0.0) {
      const double coupling = std::max({n.omega_plus, n.omega_minus, n.g_plus, n.g_minus});
      report.validity_ratio[i] = coupling / std::min(n.delta_plus, n.delta_minus);
      report.branch_plus[i] = n.omega_plus * n.g_plus / n.delta_plus;
      report.branch_minus[i] = n.omega_minus * n.g_minus / n.delta_minus;
      if (kind == ModelKind::full && report.validity_ratio[i] > 0.25) {
        std::ostringstream msg;
        msg << "node " << i + 1 << ": coupling/detuning ratio " << report.validity_ratio[i]
            << " exceeds 0.25; adiabatic elimination is questionable";
        report.warnings.push_back(msg.str());
      }
      // Balance is judged in ueV when a physical scale is known.
      const double scale =
          params.reference_rate_rad_s > 0.0 ? rad_per_s_to_ueV(params.reference_rate_rad_s) : 1.0;
      const double mismatch = std::abs(report.branch_plus[i] - report.branch_minus[i]) * scale;
      if (mismatch > 1e-9) {
        std::ostringstream msg;
        msg.precision(12);
        msg << "node " << i + 1 << ": Raman branches unbalanced, Omega+g+/Delta+ = "
            << report.branch_plus[i] * scale << " vs Omega-g-/Delta- = "
            << report.branch_minus[i] * scale;
        report.warnings.push_back(msg.str());
      }
    }
  }
  return report;
}

Operator sigma_y_dot(const std::string& label) {
  return projector(2, dot::x_minus, dot::x_plus, label) +
         projector(2, dot::x_plus, dot::x_minus, label);
}

StateVector y_state(int sign, const std::string& label) {
  Vector v(2);
  v << 1.0, static_cast<double>(sign);
  v /= std::sqrt(2.0);
  return StateVector(HilbertLayout::single(label, 2), std::move(v));
}

HilbertLayout two_node_layout(int n_fock) {
  return HilbertLayout({{"dot1", 2}, {"dot2", 2}, {"cav1", n_fock}, {"cav2", n_fock}});
}

HilbertLayout single_node_layout(int n_fock) {
  return HilbertLayout({{"dot", 2}, {"cav", n_fock}});
}

HilbertLayout full_node_layout(int n_fock) {
  return HilbertLayout({{"dot", 4}, {"cav", n_fock}});
}

SparseOperator build_effective_hamiltonian(const ModelParams& params, const HilbertLayout& layout) {
  std::vector<std::pair<std::string, std::string>> nodes;
  if (is_two_node(layout)) {
    nodes = {{"dot1", "cav1"}, {"dot2", "cav2"}};
  } else if (is_single_effective(layout)) {
    nodes = {{"dot", "cav"}};
  } else {
    throw StructuralError("effective Hamiltonian needs (dot1,dot2,cav1,cav2) or (dot,cav) layout");
  }
  SparseOperator h = SparseOperator::zero(layout);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& [dot_label, cav_label] = nodes[i];
    const int nf = layout.dim(cav_label);
    const Operator a = annihilation_op(nf, cav_label);
    const SparseOperator sy = embed_sparse(sigma_y_dot(dot_label), dot_label, layout);
    const SparseOperator quad = embed_sparse(a + a.adjoint(), cav_label, layout);
    h = h + (sy * quad) * cplx(params.nodes[i].lambda);
  }
  return h;
}

SparseOperator build_full_hamiltonian(const ModelParams& params, const HilbertLayout& layout,
                                      int node) {
  if (!is_full_node(layout)) {
    throw StructuralError("full Hamiltonian needs a (dot:4, cav:N) layout");
  }
  const auto& n = params.nodes.at(node);
  if (!(n.delta_plus > 0.0) || !(n.delta_minus > 0.0)) {
    throw ParameterError("full Hamiltonian needs positive detunings");
  }
  const int nf = layout.dim("cav");
  const auto dotop = [&](int r, int c) { return embed_sparse(projector(4, r, c, "dot"), "dot", layout); };
  const SparseOperator adag = embed_sparse(annihilation_op(nf, "cav").adjoint(), "cav", layout);

  SparseOperator diag = dotop(dot::t_plus, dot::t_plus) * cplx(n.delta_plus) +
                        dotop(dot::t_minus, dot::t_minus) * cplx(n.delta_minus);
  SparseOperator coupling = dotop(dot::x_plus, dot::t_plus) * cplx(n.omega_plus) +
                            dotop(dot::x_minus, dot::t_minus) * cplx(n.omega_minus) +
                            dotop(dot::x_minus, dot::t_plus) * adag * cplx(n.g_plus) +
                            dotop(dot::x_plus, dot::t_minus) * adag * cplx(n.g_minus);
  return diag + coupling + coupling.adjoint();
}

const char* to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::detector_c: return "c";
    case ChannelKind::detector_d: return "d";
    case ChannelKind::cavity: return "cavity";
    case ChannelKind::dot: return "dot";
    case ChannelKind::trion: return "trion";
  }
  return "?";
}

std::vector<Channel> collapse_operators(const ModelParams& params, const HilbertLayout& layout,
                                        ModelKind kind) {
  std::vector<Channel> out;
  auto add = [&](std::string label, ChannelKind ck, double rate, const Operator& local,
                 const std::string& target) {
    if (rate <= 0.0) return;
    out.push_back(Channel{std::move(label), ck,
                          embed_sparse(local * cplx(std::sqrt(rate)), target, layout)});
  };

  if (kind == ModelKind::effective) {
    if (is_two_node(layout)) {
      for (int i = 0; i < 2; ++i) {
        const std::string cav = "cav" + std::to_string(i + 1);
        add(cav, ChannelKind::cavity, params.nodes[i].kappa, annihilation_op(layout.dim(cav), cav),
            cav);
      }
      for (int i = 0; i < 2; ++i) {
        const std::string dl = "dot" + std::to_string(i + 1);
        add(dl, ChannelKind::dot, params.nodes[i].gamma,
            dot_decoherence_op(params.dot_decoherence, 2, dl), dl);
      }
      return out;
    }
    if (is_single_effective(layout)) {
      add("cav", ChannelKind::cavity, params.nodes[0].kappa,
          annihilation_op(layout.dim("cav"), "cav"), "cav");
      add("dot", ChannelKind::dot, params.nodes[0].gamma,
          dot_decoherence_op(params.dot_decoherence, 2, "dot"), "dot");
      return out;
    }
    throw StructuralError("collapse_operators: layout does not match the effective model");
  }

  if (!is_full_node(layout)) {
    throw StructuralError("collapse_operators: layout does not match the full model");
  }
  add("cav", ChannelKind::cavity, params.nodes[0].kappa, annihilation_op(layout.dim("cav"), "cav"),
      "cav");
  add("dot", ChannelKind::dot, params.nodes[0].gamma,
      dot_decoherence_op(params.dot_decoherence, 4, "dot"), "dot");
  add("trion_plus", ChannelKind::trion, params.gamma_trion,
      projector(4, dot::x_plus, dot::t_plus, "dot"), "dot");
  add("trion_minus", ChannelKind::trion, params.gamma_trion,
      projector(4, dot::x_minus, dot::t_minus, "dot"), "dot");
  return out;
}

DetectorModes detector_jump_ops(const ModelParams& params, const HilbertLayout& layout) {
  if (!is_two_node(layout)) {
    throw StructuralError("detector_jump_ops needs the two-node layout");
  }
  const SparseOperator a1 = embed_sparse(annihilation_op(layout.dim("cav1"), "cav1"), "cav1", layout);
  const SparseOperator a2 = embed_sparse(annihilation_op(layout.dim("cav2"), "cav2"), "cav2", layout);
  const cplx pre = cplx(0.0, -1.0) / std::sqrt(2.0);
  const SparseOperator b1 = a1 * cplx(std::sqrt(params.nodes[0].kappa));
  const SparseOperator b2 = a2 * cplx(std::sqrt(params.nodes[1].kappa));
  return DetectorModes{(b1 + b2) * pre, (b1 - b2) * pre};
}

std::vector<std::string> LindbladModel::detected_labels() const {
  std::vector<std::string> out;
  for (const auto& ch : channels) {
    if (ch.detected()) out.push_back(ch.label);
  }
  return out;
}

const Channel& LindbladModel::channel(const std::string& label) const {
  for (const auto& ch : channels) {
    if (ch.label == label) return ch;
  }
  throw StructuralError("no channel labelled '" + label + "'");
}

LindbladModel make_two_node_model(const ModelParams& params, int n_fock, bool drive_on,
                                  Detection detection) {
  check_params(params, ModelKind::effective);
  LindbladModel m;
  m.layout = two_node_layout(n_fock);
  m.hamiltonian = drive_on ? build_effective_hamiltonian(params, m.layout)
                           : SparseOperator::zero(m.layout);
  auto channels = collapse_operators(params, m.layout, ModelKind::effective);
  if (detection == Detection::beamsplitter) {
    std::vector<Channel> routed;
    if (params.nodes[0].kappa > 0.0 || params.nodes[1].kappa > 0.0) {
      auto modes = detector_jump_ops(params, m.layout);
      routed.push_back(Channel{"c", ChannelKind::detector_c, std::move(modes.c)});
      routed.push_back(Channel{"d", ChannelKind::detector_d, std::move(modes.d)});
    }
    for (auto& ch : channels) {
      if (ch.kind != ChannelKind::cavity) routed.push_back(std::move(ch));
    }
    channels = std::move(routed);
  }
  m.channels = std::move(channels);
  return m;
}

LindbladModel make_single_node_model(const ModelParams& params, int n_fock, int node) {
  check_params(params, ModelKind::effective);
  ModelParams local = params;
  local.nodes[0] = params.nodes.at(node);
  LindbladModel m;
  m.layout = single_node_layout(n_fock);
  m.hamiltonian = build_effective_hamiltonian(local, m.layout);
  m.channels = collapse_operators(local, m.layout, ModelKind::effective);
  return m;
}

LindbladModel make_full_node_model(const ModelParams& params, int n_fock, int node) {
  check_params(params, ModelKind::full);
  ModelParams local = params;
  local.nodes[0] = params.nodes.at(node);
  LindbladModel m;
  m.layout = full_node_layout(n_fock);
  m.hamiltonian = build_full_hamiltonian(local, m.layout, 0);
  m.channels = collapse_operators(local, m.layout, ModelKind::full);
  return m;
}

cplx branch_amplitude_analytic(double lambda, double kappa, double t, int branch_sign) {
  const double s = branch_sign >= 0 ? 1.0 : -1.0;
  if (t <= 0.0) return 0.0;
  double magnitude = 0.0;
  if (kappa == 0.0) {
    magnitude = lambda * t;
  } else {
    magnitude = (2.0 * lambda / kappa) * -std::expm1(-0.5 * kappa * t);
  }
  return cplx(0.0, -s * magnitude);
}

double max_branch_amplitude(double lambda, double kappa, double t_max) {
  return std::abs(branch_amplitude_analytic(lambda, kappa, t_max, 1));
}

int fock_cutoff(double alpha_max) {
  const double n = std::ceil((alpha_max + 3.0) * (alpha_max + 3.0));
  return std::max(4, static_cast<int>(n));
}

}  // namespace heraldsim::model
