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

// Physics of two cavity-coupled quantum-dot spins: parameters, the
// four-level dot Hamiltonian, the adiabatically eliminated spin-boson
// Hamiltonian, and the dissipators / beamsplitter detector modes.
//
// Internal unit: every rate and energy is measured in a reference rate
// (lambda of node 1 by default); time is therefore in units of 1/lambda.

#pragma once

#include <array>
#include <string>
#include <vector>

#include "heraldsim/qcore.hpp"

namespace heraldsim::model {

inline constexpr double kHbarEvS = 6.582119569e-16;

class ParameterError : public Error {
 public:
  using Error::Error;
};

enum class UnitMode { reduced, physical_ueV };
enum class DotDecoherence { relaxation, dephasing };
enum class ModelKind { effective, full };

struct NodeParams {
  double lambda = 1.0;
  double kappa = 1.0;
  double gamma = 0.0;
  // Four-level data; only read by the full model.
  double omega_plus = 0.0;
  double omega_minus = 0.0;
  double g_plus = 0.0;
  double g_minus = 0.0;
  double delta_plus = 0.0;
  double delta_minus = 0.0;
};

struct ModelParams {
  std::array<NodeParams, 2> nodes{};
  double gamma_trion = 0.0;
  int n_fock = 0;  // 0: choose by cutoff policy
  UnitMode unit_mode = UnitMode::reduced;
  DotDecoherence dot_decoherence = DotDecoherence::relaxation;
  /// Angular frequency (rad/s) of one reduced rate unit; used for ns axes.
  double reference_rate_rad_s = 0.0;
};

/// Raman coupling Omega g / Delta of one branch.
struct LambdaValue {
  double ueV = 0.0;
  double rad_per_s = 0.0;
  double ghz_over_2pi() const;
};

LambdaValue lambda_from_physical(double omega_ueV, double g_ueV, double delta_ueV);

double ueV_to_rad_per_s(double ueV);
double rad_per_s_to_ueV(double w);

/// Physical four-level inputs, energies in micro-eV and rates as ordinary
/// frequencies in MHz (angular rate = 2 pi f).
struct PhysicalNode {
  double omega_plus_ueV = 0.0;
  double omega_minus_ueV = 0.0;
  double g_plus_ueV = 0.0;
  double g_minus_ueV = 0.0;
  double delta_plus_ueV = 0.0;
  double delta_minus_ueV = 0.0;
  double kappa_mhz = 0.0;
  double gamma_mhz = 0.0;
};

/// Converts physical inputs to reduced units with lambda_1 (plus branch of
/// node 1) as the rate unit.
ModelParams reduce_physical(const std::array<PhysicalNode, 2>& nodes, double gamma_trion_mhz);

/// InAs self-assembled dot values used for the trion validation:
/// Delta_- = 460, Delta_+ = 414, Omega_+ = 41.4, Omega_- = 46, g = 90 (ueV),
/// Gamma_T = 2 pi x 130 MHz. Cavity decay defaults to kappa = lambda.
std::array<PhysicalNode, 2> inas_physical_nodes();
inline constexpr double kInasTrionDecayMhz = 130.0;

struct ParamReport {
  std::array<double, 2> validity_ratio{};  // max(Omega, g) / min(Delta) per node
  std::array<double, 2> branch_plus{};     // Omega_+ g_+ / Delta_+
  std::array<double, 2> branch_minus{};
  std::vector<std::string> warnings;
};

/// Throws ParameterError on invariant violations; returns diagnostics and
/// warnings (adiabatic ratio > 0.25, unbalanced Raman branches).
ParamReport check_params(const ModelParams& params, ModelKind kind);

// Dot level indices.
namespace dot {
inline constexpr int x_minus = 0;
inline constexpr int x_plus = 1;
inline constexpr int t_minus = 2;
inline constexpr int t_plus = 3;
}  // namespace dot

Operator sigma_y_dot(const std::string& label = "dot");
/// (|X-> + s|X+>)/sqrt 2, the sigma_y eigenstate with eigenvalue s.
StateVector y_state(int sign, const std::string& label = "dot");

HilbertLayout two_node_layout(int n_fock);
HilbertLayout single_node_layout(int n_fock);  // effective: dot:2, cav:N
HilbertLayout full_node_layout(int n_fock);    // dot:4, cav:N

/// H_eff = sum_i lambda_i sigma_y^i (a_i + a_i^dag) on a two-node or
/// single-node effective layout.
SparseOperator build_effective_hamiltonian(const ModelParams& params, const HilbertLayout& layout);

/// Static-frame four-level Hamiltonian of node `node`:
///   Delta_+ |T+><T+| + Delta_- |T-><T-|
///   + [Omega_+ |X+><T+| + Omega_- |X-><T-| + g_+ |X-><T+| a^dag + g_- |X+><T-| a^dag + h.c.]
SparseOperator build_full_hamiltonian(const ModelParams& params, const HilbertLayout& layout,
                                      int node = 0);

enum class ChannelKind { detector_c, detector_d, cavity, dot, trion };
const char* to_string(ChannelKind kind);

struct Channel {
  std::string label;
  ChannelKind kind = ChannelKind::cavity;
  SparseOperator op;  // rate prefactor included

  bool detected() const {
    return kind == ChannelKind::detector_c || kind == ChannelKind::detector_d ||
           kind == ChannelKind::cavity;
  }
};

/// Lindblad operators. Zero-rate channels are omitted.
std::vector<Channel> collapse_operators(const ModelParams& params, const HilbertLayout& layout,
                                        ModelKind kind);

struct DetectorModes {
  SparseOperator c;
  SparseOperator d;
};

/// Beamsplitter output modes c = -i(sqrt k1 a1 + sqrt k2 a2)/sqrt 2,
/// d = -i(sqrt k1 a1 - sqrt k2 a2)/sqrt 2.
DetectorModes detector_jump_ops(const ModelParams& params, const HilbertLayout& layout);

struct LindbladModel {
  HilbertLayout layout;
  SparseOperator hamiltonian;
  std::vector<Channel> channels;

  std::vector<std::string> detected_labels() const;
  const Channel& channel(const std::string& label) const;
};

enum class Detection { per_cavity, beamsplitter };

/// Two-node effective model. With `drive_on == false` the Hamiltonian is
/// zero (lasers off) while every dissipator is kept.
LindbladModel make_two_node_model(const ModelParams& params, int n_fock, bool drive_on = true,
                                  Detection detection = Detection::beamsplitter);

/// Single-node effective model on (dot:2, cav:N) for node `node`.
LindbladModel make_single_node_model(const ModelParams& params, int n_fock, int node = 0);

/// Single-node four-level model on (dot:4, cav:N).
LindbladModel make_full_node_model(const ModelParams& params, int n_fock, int node = 0);

/// Coherent amplitude of the cavity on the sigma_y = `branch_sign` branch:
/// -i s lambda t for kappa = 0, -i s (2 lambda/kappa)(1 - e^{-kappa t/2}) otherwise.
cplx branch_amplitude_analytic(double lambda, double kappa, double t, int branch_sign);

/// Largest branch amplitude over [0, t_max] (the amplitude is monotone in t).
double max_branch_amplitude(double lambda, double kappa, double t_max);

/// Fock cutoff ceil((|alpha_max| + 3)^2), at least 4.
int fock_cutoff(double alpha_max);

}  // namespace heraldsim::model
