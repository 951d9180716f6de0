// Copyright 2026 The mixcollapse Authors
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

#include <optional>
#include <vector>

#include "mixcollapse/core.hpp"

namespace mixcollapse {

/// drho/dt = i[rho, H] - 1/2 sum (L^H L rho + rho L^H L - 2 L rho L^H)
///           - 1/2 {K, rho}.
struct MasterSpec {
  CMatrix hamiltonian;
  std::vector<CMatrix> lindblads;
  std::optional<CMatrix> anticommutator;
  Basis basis = Basis::Flavor;

  Eigen::Index dimension() const { return hamiltonian.rows(); }
  void validate() const;
};

CMatrix master_rhs(const MasterSpec& spec, const CMatrix& rho);

/// Family equation: H = M, L = sqrt(lambda_eff) A,
/// K = -lambda_eff (1 - 2 beta) A^2.
MasterSpec family_master_spec(const MesonParams& meson,
                              const CollapseParams& collapse,
                              Basis basis = Basis::Flavor);

/// Collapse plus phenomenological decay: H = M, L = sqrt(lambda_eff) A,
/// K = Gamma built from the meson's own widths.
MasterSpec decay_master_spec(const MesonParams& meson,
                             const CollapseParams& collapse,
                             Basis basis = Basis::Flavor);

/// Trace-preserving form on H_M (+) H_D with the decay channel L_D.
MasterSpec enlarged_master_spec(const MesonParams& meson,
                                const CollapseParams& collapse,
                                Basis basis = Basis::Flavor);

/// 1e-3 over the fastest rate in the generator. The Hamiltonian enters
/// traceless, since its trace only adds a global phase.
double default_dt_max(const MasterSpec& spec);

/// Fixed-step RK4 landing exactly on each grid point; rho is re-symmetrized
/// after every step. Throws StepTooLarge when a single step breaks
/// Hermiticity by more than 1e-8 (relative).
std::vector<DensityMatrix> integrate_master(const MasterSpec& spec,
                                            const DensityMatrix& rho0,
                                            const std::vector<double>& t_grid,
                                            std::optional<double> dt_max = {});

/// Upper-left (meson) block of an enlarged-space density matrix.
DensityMatrix project_enlarged_to_flavor(const DensityMatrix& rho);

// Position (x) flavor kernels. Each density-matrix element
// rho^{ij}(x, y) evolves by a constant multiplicative rate.

/// Spatial coordinate of dimension collapse.d.
using Position = Eigen::VectorXd;

/// (g*g)(r) = (4 pi r_C^2)^(-d/2) exp(-|r|^2 / (4 r_C^2)).
double smeared_overlap(const CollapseParams& collapse, const Position& r);

Complex kernel_rate(const MesonParams& meson, const CollapseParams& collapse,
                    Eigenstate i, Eigenstate j, const Position& x,
                    const Position& y);

/// rho_t^{ij}(x, y) / rho_0^{ij}(x, y) = exp(rate t).
Complex kernel_solution(const MesonParams& meson,
                        const CollapseParams& collapse, Eigenstate i,
                        Eigenstate j, const Position& x, const Position& y,
                        double t);

struct KernelElement {
  MesonParams meson;
  CollapseParams collapse;
  Eigenstate i = Eigenstate::L;
  Eigenstate j = Eigenstate::L;

  Complex operator()(const Position& x, const Position& y, double t) const {
    return kernel_solution(meson, collapse, i, j, x, y, t);
  }
};

/// |psi(x)|^2 = (pi alpha)^(-d/2) exp(-|x|^2 / alpha).
double gaussian_packet_density(double alpha, const Position& x);

/// Closed-form trace over position of kernel_solution against the Gaussian
/// packet, including the e^{-i(m_i - m_j)t} phase.
Complex gaussian_partial_trace(const MesonParams& meson,
                               const CollapseParams& collapse, Eigenstate i,
                               Eigenstate j, double t);

/// <out| rho_t |out> for rho_0 = |in><in|, both flavor-basis vectors,
/// assembled from the four partial-trace factors.
double probs_from_kernels(const MesonParams& meson,
                          const CollapseParams& collapse, const CVector& in,
                          const CVector& out, double t);

double probs_from_kernels(const MesonParams& meson,
                          const CollapseParams& collapse, FlavorState in,
                          FlavorState out, double t);

}  // namespace mixcollapse
