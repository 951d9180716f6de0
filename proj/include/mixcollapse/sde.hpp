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

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "mixcollapse/core.hpp"

namespace mixcollapse {

struct NoiseConfig {
  std::uint64_t seed = 0;
  double dt = 1e-3;
  double theta0 = 0.0;  // Heaviside value at zero; 0 Ito, 1/2 Stratonovich
  std::size_t n_channels = 1;

  void validate() const;
};

/// dW[step * n_channels + channel] ~ N(0, dt), keyed by
/// (seed, trajectory, channel, step).
std::vector<double> wiener_increments(const NoiseConfig& config,
                                      std::size_t n_steps,
                                      std::uint64_t trajectory_id);

enum class Equation {
  NonlinearReal,          // self-adjoint collapse, phase-transformable
  NonlinearGeneral,       // non-self-adjoint collapse operators, R terms
  EnlargedNonlinear,      // H_M (+) H_D with a decay channel
  FlavorDecay,            // nonlinear collapse plus the Gamma drift
  ImaginaryLinear,        // imaginary noise, -1/2 L^2 drift
  ImaginaryLinearFamily,  // imaginary noise, -beta L^2 drift
  StratonovichLinear,     // family equation written for theta(0) = 1/2
};

std::string_view to_string(Equation eq);

/// One stochastic state equation. Noise operators carry the rate already,
/// L_i = sqrt(lambda_eff) A_i, so no lambda appears below this point.
struct SdeSpec {
  Equation equation = Equation::ImaginaryLinearFamily;
  Basis basis = Basis::Flavor;  // coordinates of the meson block
  CMatrix hamiltonian;          // M, or the non-Hermitian H where stated
  std::vector<CMatrix> noise_ops;
  std::optional<CMatrix> decay;  // Gamma, FlavorDecay only
  double beta = 0.5;             // the two family equations
  double phi = 0.0;              // NonlinearReal only

  Eigen::Index dimension() const { return hamiltonian.rows(); }
  std::size_t n_channels() const { return noise_ops.size(); }
  bool is_linear() const;
  /// Heaviside value at zero under which the equation is written.
  double native_theta() const;
  void validate() const;
};

/// CollapseEq driven by the non-Hermitian H; mean dynamics follow the
/// collapse-plus-decay master equation.
SdeSpec collapse_sde_spec(const MesonParams& meson,
                          const CollapseParams& collapse,
                          Basis basis = Basis::Flavor);
SdeSpec general_sde_spec(const MesonParams& meson,
                         const CollapseParams& collapse,
                         Basis basis = Basis::Flavor);
/// Two channels: sqrt(lambda) A and the decay transition L_D.
SdeSpec enlarged_sde_spec(const MesonParams& meson,
                          const CollapseParams& collapse,
                          Basis basis = Basis::Flavor);
SdeSpec flavor_decay_sde_spec(const MesonParams& meson,
                              const CollapseParams& collapse,
                              Basis basis = Basis::Flavor);
SdeSpec imaginary_sde_spec(const MesonParams& meson,
                           const CollapseParams& collapse,
                           Basis basis = Basis::Flavor);
/// Uses collapse.beta.
SdeSpec family_sde_spec(const MesonParams& meson,
                        const CollapseParams& collapse,
                        Basis basis = Basis::Flavor);
SdeSpec stratonovich_family_sde_spec(const MesonParams& meson,
                                     const CollapseParams& collapse,
                                     Basis basis = Basis::Flavor);

/// dpsi = D psi dt + sum_i G_i psi dW_i as written in the equation's native
/// formalism, with expectation values frozen at `psi`.
struct Coefficients {
  CMatrix drift;
  std::vector<CMatrix> diffusion;
};

Coefficients coefficients(const SdeSpec& spec, const CVector& psi);

/// Drift to add when re-reading G psi dW under theta(0) = beta_prime instead
/// of beta: (beta - beta_prime) G^2.
CMatrix ito_stratonovich_drift(const CMatrix& diffusion, double beta,
                               double beta_prime);

/// Coefficients re-expressed for Heaviside value `theta`.
Coefficients coefficients_for_theta(const SdeSpec& spec, const CVector& psi,
                                    double theta);

/// Euler-Maruyama on the Ito form.
CVector step(const SdeSpec& spec, const CVector& psi,
             const std::vector<double>& dW, double dt);

enum class StratonovichMethod { Heun, ItoConversion };

/// Stratonovich product for the linear equations: Heun predictor-corrector
/// on the Stratonovich drift, or Euler-Maruyama after adding the conversion
/// drift. Throws UnsupportedEquation for nonlinear specs.
CVector stratonovich_step(const SdeSpec& spec, const CVector& psi,
                          const std::vector<double>& dW, double dt,
                          StratonovichMethod method = StratonovichMethod::Heun);

/// Predictor-corrector evaluating the noise at the theta point: Euler for
/// theta = 0, Heun for theta = 1/2. Linear specs only.
CVector theta_step(const SdeSpec& spec, const CVector& psi,
                   const std::vector<double>& dW, double dt, double theta);

/// psi <- exp((D_Ito - 1/2 sum G^2) dt + sum G dW) psi with coefficients
/// frozen at psi. Exact in distribution when all operators commute and do
/// not depend on the state.
CVector exponential_step(const SdeSpec& spec, const CVector& psi,
                         const std::vector<double>& dW, double dt);

/// exp of a matrix of dimension <= 4.
CMatrix small_expm(const CMatrix& a);

/// (1/eps) (1/(kappa + 1/kappa)) exp(-(|t|/eps) kappa^sign(t)).
double asymmetric_delta(double t, double kappa, double epsilon);

/// kappa^2 / (1 + kappa^2); +inf maps to 1.
double theta_from_kappa(double kappa);

/// phi-rotated member of the NonlinearReal family.
SdeSpec phase_transform_spec(const SdeSpec& spec, double phi);

enum class Scheme { Euler, Heun, Exponential };

std::string_view to_string(Scheme scheme);

struct EnsembleOptions {
  Scheme scheme = Scheme::Exponential;
  std::size_t threads = 1;  // affects wall time only
};

/// Order of EnsembleStats::observable_mean rows.
inline constexpr std::string_view kObservableNames[] = {
    "P_M0_M0", "P_M0_M0bar", "P_L_L", "P_H_H"};

/// Mean and standard error of |psi><psi| (raw, unnormalized) and of the
/// flavor and mass populations on `t_grid`. Trajectories run in fixed
/// blocks merged in block order, so results do not depend on `threads`.
EnsembleStats ensemble_evolve(const SdeSpec& spec, const NoiseConfig& config,
                              const QuantumState& initial,
                              const std::vector<double>& t_grid,
                              std::size_t n_trajectories,
                              const EnsembleOptions& options = {});

}  // namespace mixcollapse
