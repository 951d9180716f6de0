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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mixcollapse/errors.hpp"

namespace mixcollapse {

using Complex = std::complex<double>;

// Column-major, capped at 4x4 so that no heap allocation happens for the
// flavor (2) and enlarged (4) spaces.
using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                              Eigen::ColMajor, 4, 4>;
using CVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1, Eigen::ColMajor, 4, 1>;
using RMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                              Eigen::ColMajor, 4, 4>;

inline constexpr Complex kI{0.0, 1.0};

enum class Basis { Flavor, Mass, Enlarged };

// Mass eigenstates, index 0 = light, 1 = heavy everywhere.
enum class Eigenstate : int { L = 0, H = 1 };

enum class FlavorState { Particle, Antiparticle };  // M0, M0bar

enum class CollapseModel { QMUPL, CSL };

enum class MassRatioConvention { Normal, Inverted };

inline int index(Eigenstate e) { return static_cast<int>(e); }

/// Physical constants of a neutral-meson system in natural units.
///
/// The splitting is stored directly rather than recomputed from two large,
/// nearly equal masses; for real mesons m_H - m_L is within a few dozen ulps
/// of m_L and the subtraction would lose most of its digits.
struct MesonParams {
  double m_L = 0.0;
  double delta_m = 0.0;
  double gamma_L = 0.0;
  double gamma_H = 0.0;

  static MesonParams from_masses(double m_L, double m_H, double gamma_L,
                                 double gamma_H) {
    return {m_L, m_H - m_L, gamma_L, gamma_H};
  }

  double m_H() const { return m_L + delta_m; }
  double mass(Eigenstate e) const { return e == Eigenstate::L ? m_L : m_H(); }
  double width(Eigenstate e) const {
    return e == Eigenstate::L ? gamma_L : gamma_H;
  }
  double delta_gamma() const { return gamma_L - gamma_H; }
  double mean_gamma() const { return 0.5 * (gamma_L + gamma_H); }

  /// m_i - m_j without cancellation.
  double mass_gap(Eigenstate i, Eigenstate j) const {
    return (index(i) - index(j)) * delta_m;
  }
};

struct CollapseParams {
  CollapseModel model = CollapseModel::CSL;
  double rate = 0.0;  // lambda_Q (QMUPL) or gamma (CSL)
  double r_C = 1.0;
  double beta = 0.5;
  double m0 = 1.0;
  MassRatioConvention convention = MassRatioConvention::Normal;
  int d = 3;
  double alpha = 1.0;

  /// lambda_Q * alpha for QMUPL, gamma / (sqrt(4 pi) r_C)^d for CSL.
  double effective_rate() const;
};

void validate_meson(const MesonParams& meson);
void validate_collapse(const CollapseParams& collapse);

/// Returns the inputs unchanged if every invariant holds, otherwise throws
/// Error(InvalidParams) naming the first violation.
std::pair<MesonParams, CollapseParams> validate_params(
    const MesonParams& meson, const CollapseParams& collapse);

double mass_ratio(const MesonParams& meson, const CollapseParams& collapse,
                  Eigenstate i);

/// m~_H - m~_L, evaluated without subtracting the two ratios.
double mass_ratio_gap(const MesonParams& meson, const CollapseParams& collapse);

/// m~_H^2 - m~_L^2.
double mass_ratio_sq_gap(const MesonParams& meson,
                         const CollapseParams& collapse);

/// Maps mass-basis coordinates (L, H) to flavor-basis coordinates (M0, M0bar).
/// Real symmetric and involutive: the same matrix maps back.
CMatrix flavor_mass_basis_change();

CVector flavor_vector(FlavorState f);
CVector mass_vector(Eigenstate e);

struct QuantumState {
  CVector amplitudes;
  Basis basis = Basis::Flavor;

  QuantumState() = default;
  QuantumState(CVector amps, Basis b);

  double norm_squared() const { return amplitudes.squaredNorm(); }
};

QuantumState to_flavor(const QuantumState& s);
QuantumState to_mass(const QuantumState& s);

/// Changes the representation of a 2x2 operator between flavor and mass
/// coordinates.
CMatrix mass_to_flavor(const CMatrix& op);
CMatrix flavor_to_mass(const CMatrix& op);

struct DensityMatrix {
  CMatrix matrix;
  Basis basis = Basis::Flavor;

  DensityMatrix() = default;
  DensityMatrix(CMatrix m, Basis b);

  static DensityMatrix pure(const QuantumState& s);
  Complex trace() const { return matrix.trace(); }
};

struct DensityCheck {
  double hermiticity = 0.0;  // ||rho - rho^H||_F / ||rho||_F
  double min_eigenvalue = 0.0;
  double trace = 0.0;
  bool ok = true;
};

/// Checks the density-operator invariants: Hermitian to 1e-12 (relative),
/// eigenvalues >= -1e-10, trace <= 1 + 1e-10.
DensityCheck check_density_matrix(const CMatrix& rho);

double min_hermitian_eigenvalue(const CMatrix& rho);

struct TimeSeries {
  std::vector<double> times;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> columns;

  void add_column(std::string label, std::vector<double> values);
  void validate() const;
  const std::vector<double>& column(const std::string& label) const;
};

/// Ensemble averages over stochastic trajectories. The density matrices are
/// unnormalized means of |psi><psi|; standard errors are per real/imaginary
/// component. Observables are indexed [observable][time].
struct EnsembleStats {
  std::vector<double> times;
  std::vector<CMatrix> mean;
  std::vector<RMatrix> stderr_real;
  std::vector<RMatrix> stderr_imag;
  std::vector<std::vector<double>> observable_mean;
  std::vector<std::vector<double>> observable_stderr;
  std::size_t n_trajectories = 0;
  std::uint64_t seed = 0;
};

std::vector<double> linear_grid(double t_max, std::size_t n_points);

}  // namespace mixcollapse
