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

#include "mixcollapse/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mixcollapse {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::ZeroRate: return "ZeroRate";
    case ErrorKind::NegativeWidth: return "NegativeWidth";
    case ErrorKind::NegativeTime: return "NegativeTime";
    case ErrorKind::SingularTime: return "SingularTime";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::NoRealRoot: return "NoRealRoot";
    case ErrorKind::SymmetricNoise: return "SymmetricNoise";
    case ErrorKind::DegenerateWidths: return "DegenerateWidths";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::StepTooLarge: return "StepTooLarge";
    case ErrorKind::ZeroNorm: return "ZeroNorm";
    case ErrorKind::UnsupportedEquation: return "UnsupportedEquation";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::UnknownKey: return "UnknownKey";
    case ErrorKind::CatalogMiss: return "CatalogMiss";
  }
  return "Unknown";
}

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::InvalidParams, what);
}

}  // namespace

double CollapseParams::effective_rate() const {
  if (model == CollapseModel::QMUPL) return rate * alpha;
  const double smear = std::sqrt(4.0 * std::numbers::pi) * r_C;
  return rate / std::pow(smear, d);
}

void validate_meson(const MesonParams& meson) {
  if (!std::isfinite(meson.m_L) || !std::isfinite(meson.delta_m) ||
      !std::isfinite(meson.gamma_L) || !std::isfinite(meson.gamma_H))
    invalid("meson parameters must be finite");
  if (!(meson.delta_m > 0.0)) invalid("Δm must be positive");
  if (meson.m_L < 0.0) invalid("m_L must be non-negative");
  if (meson.gamma_L < 0.0) invalid("gamma_L must be non-negative");
  if (meson.gamma_H < 0.0) invalid("gamma_H must be non-negative");
}

void validate_collapse(const CollapseParams& c) {
  if (!std::isfinite(c.rate) || c.rate < 0.0) invalid("rate must be >= 0");
  if (c.model == CollapseModel::CSL && !(c.r_C > 0.0))
    invalid("r_C must be positive for CSL");
  if (!(c.beta >= 0.0 && c.beta <= 1.0)) invalid("beta out of [0,1]");
  if (!(c.m0 > 0.0) || !std::isfinite(c.m0)) invalid("m0 must be positive");
  if (c.d < 1 || c.d > 3) invalid("d must be 1, 2 or 3");
  if (!(c.alpha > 0.0) || !std::isfinite(c.alpha))
    invalid("alpha must be positive");
}

std::pair<MesonParams, CollapseParams> validate_params(
    const MesonParams& meson, const CollapseParams& collapse) {
  validate_meson(meson);
  validate_collapse(collapse);
  return {meson, collapse};
}

double mass_ratio(const MesonParams& meson, const CollapseParams& collapse,
                  Eigenstate i) {
  const double m = meson.mass(i);
  return collapse.convention == MassRatioConvention::Normal
             ? m / collapse.m0
             : collapse.m0 / m;
}

double mass_ratio_gap(const MesonParams& meson,
                      const CollapseParams& collapse) {
  if (collapse.convention == MassRatioConvention::Normal)
    return meson.delta_m / collapse.m0;
  // m0/m_H - m0/m_L = -m0 dm / (m_L m_H)
  return -collapse.m0 * meson.delta_m / (meson.m_L * meson.m_H());
}

double mass_ratio_sq_gap(const MesonParams& meson,
                         const CollapseParams& collapse) {
  const double sum = mass_ratio(meson, collapse, Eigenstate::L) +
                     mass_ratio(meson, collapse, Eigenstate::H);
  return mass_ratio_gap(meson, collapse) * sum;
}

CMatrix flavor_mass_basis_change() {
  const double s = std::numbers::sqrt2 / 2.0;
  CMatrix u(2, 2);
  u << s, s,
       s, -s;
  return u;
}

CVector flavor_vector(FlavorState f) {
  CVector v = CVector::Zero(2);
  v(f == FlavorState::Particle ? 0 : 1) = 1.0;
  return v;
}

CVector mass_vector(Eigenstate e) {
  CVector v = CVector::Zero(2);
  v(index(e)) = 1.0;
  return v;
}

QuantumState::QuantumState(CVector amps, Basis b)
    : amplitudes(std::move(amps)), basis(b) {
  const Eigen::Index want = b == Basis::Enlarged ? 4 : 2;
  if (amplitudes.size() != want)
    throw Error(ErrorKind::DimensionMismatch,
                "state length does not match its basis tag");
}

QuantumState to_flavor(const QuantumState& s) {
  if (s.basis == Basis::Flavor) return s;
  if (s.basis != Basis::Mass)
    throw Error(ErrorKind::DimensionMismatch,
                "only mass-basis states convert to flavor");
  return {flavor_mass_basis_change() * s.amplitudes, Basis::Flavor};
}

QuantumState to_mass(const QuantumState& s) {
  if (s.basis == Basis::Mass) return s;
  if (s.basis != Basis::Flavor)
    throw Error(ErrorKind::DimensionMismatch,
                "only flavor-basis states convert to mass");
  return {flavor_mass_basis_change().adjoint() * s.amplitudes, Basis::Mass};
}

CMatrix mass_to_flavor(const CMatrix& op) {
  const CMatrix u = flavor_mass_basis_change();
  return u * op * u.adjoint();
}

CMatrix flavor_to_mass(const CMatrix& op) {
  const CMatrix u = flavor_mass_basis_change();
  return u.adjoint() * op * u;
}

DensityMatrix::DensityMatrix(CMatrix m, Basis b) : matrix(std::move(m)), basis(b) {
  const Eigen::Index want = b == Basis::Enlarged ? 4 : 2;
  if (matrix.rows() != want || matrix.cols() != want)
    throw Error(ErrorKind::DimensionMismatch,
                "density matrix size does not match its basis tag");
}

DensityMatrix DensityMatrix::pure(const QuantumState& s) {
  return {s.amplitudes * s.amplitudes.adjoint(), s.basis};
}

double min_hermitian_eigenvalue(const CMatrix& rho) {
  const CMatrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

DensityCheck check_density_matrix(const CMatrix& rho) {
  DensityCheck c;
  const double scale = std::max(rho.norm(), 1e-300);
  c.hermiticity = (rho - rho.adjoint()).norm() / scale;
  c.min_eigenvalue = min_hermitian_eigenvalue(rho);
  c.trace = rho.trace().real();
  c.ok = c.hermiticity <= 1e-12 && c.min_eigenvalue >= -1e-10 &&
         c.trace <= 1.0 + 1e-10;
  return c;
}

void TimeSeries::add_column(std::string label, std::vector<double> values) {
  labels.push_back(std::move(label));
  columns.push_back(std::move(values));
}

void TimeSeries::validate() const {
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1]))
      invalid("time grid must be strictly increasing");
  if (labels.size() != columns.size()) invalid("label/column count mismatch");
  for (const auto& c : columns)
    if (c.size() != times.size()) invalid("column length differs from grid");
}

const std::vector<double>& TimeSeries::column(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) invalid("no column named " + label);
  return columns[static_cast<std::size_t>(it - labels.begin())];
}

std::vector<double> linear_grid(double t_max, std::size_t n_points) {
  if (n_points < 2) invalid("n_points must be >= 2");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) invalid("t_max must be positive");
  std::vector<double> grid(n_points);
  const double step = t_max / static_cast<double>(n_points - 1);
  for (std::size_t k = 0; k < n_points; ++k)
    grid[k] = step * static_cast<double>(k);
  grid.back() = t_max;
  return grid;
}

}  // namespace mixcollapse
