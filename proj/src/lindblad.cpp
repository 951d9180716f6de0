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

#include "mixcollapse/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mixcollapse/operators.hpp"

namespace mixcollapse {

namespace {

void require_square(const CMatrix& m, Eigen::Index n, const char* what) {
  if (m.rows() != n || m.cols() != n)
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + " does not match the generator dimension");
}

// Precomputed pieces of the generator. The dissipator is folded into an
// effective non-Hermitian G = i H + 1/2 (sum L^H L + K) so that
// rhs = -G rho - rho G^H + sum L rho L^H.
struct Generator {
  CMatrix g;
  std::vector<CMatrix> jumps;

  explicit Generator(const MasterSpec& spec) {
    const Eigen::Index n = spec.dimension();
    CMatrix h = spec.hamiltonian;
    h -= (h.trace() / static_cast<double>(n)) * CMatrix::Identity(n, n);
    CMatrix loss = CMatrix::Zero(n, n);
    for (const CMatrix& l : spec.lindblads) loss += l.adjoint() * l;
    if (spec.anticommutator) loss += *spec.anticommutator;
    g = kI * h + 0.5 * loss;
    jumps = spec.lindblads;
  }

  CMatrix operator()(const CMatrix& rho) const {
    CMatrix out = -g * rho;
    out -= rho * g.adjoint();
    for (const CMatrix& l : jumps) out += l * rho * l.adjoint();
    return out;
  }
};

}  // namespace

void MasterSpec::validate() const {
  const Eigen::Index n = dimension();
  if (n != 2 && n != 4)
    throw Error(ErrorKind::DimensionMismatch, "master spec must be 2 or 4 dim");
  require_square(hamiltonian, n, "hamiltonian");
  for (const CMatrix& l : lindblads) require_square(l, n, "lindblad operator");
  if (anticommutator) require_square(*anticommutator, n, "anticommutator term");
  if ((basis == Basis::Enlarged) != (n == 4))
    throw Error(ErrorKind::DimensionMismatch,
                "basis tag does not match the generator dimension");
}

CMatrix master_rhs(const MasterSpec& spec, const CMatrix& rho) {
  spec.validate();
  require_square(rho, spec.dimension(), "density matrix");
  const CMatrix& h = spec.hamiltonian;
  CMatrix out = kI * (rho * h - h * rho);
  for (const CMatrix& l : spec.lindblads) {
    const CMatrix ll = l.adjoint() * l;
    out -= 0.5 * (ll * rho + rho * ll);
    out += l * rho * l.adjoint();
  }
  if (spec.anticommutator) {
    const CMatrix& k = *spec.anticommutator;
    out -= 0.5 * (k * rho + rho * k);
  }
  return out;
}

MasterSpec family_master_spec(const MesonParams& meson,
                              const CollapseParams& collapse, Basis basis) {
  const double lambda = collapse.effective_rate();
  const CMatrix a = collapse_operator_A(meson, collapse, basis);
  MasterSpec spec;
  spec.hamiltonian = mass_operator(meson, basis);
  spec.lindblads.push_back(std::sqrt(lambda) * a);
  spec.anticommutator = -lambda * (1.0 - 2.0 * collapse.beta) * (a * a);
  spec.basis = basis;
  return spec;
}

MasterSpec decay_master_spec(const MesonParams& meson,
                             const CollapseParams& collapse, Basis basis) {
  const double lambda = collapse.effective_rate();
  MasterSpec spec;
  spec.hamiltonian = mass_operator(meson, basis);
  spec.lindblads.push_back(std::sqrt(lambda) *
                           collapse_operator_A(meson, collapse, basis));
  spec.anticommutator = decay_operator(meson, basis);
  spec.basis = basis;
  return spec;
}

MasterSpec enlarged_master_spec(const MesonParams& meson,
                                const CollapseParams& collapse, Basis basis) {
  const double lambda = collapse.effective_rate();
  MasterSpec spec;
  spec.hamiltonian = embed_meson_block(mass_operator(meson, basis));
  spec.lindblads.push_back(
      std::sqrt(lambda) *
      embed_meson_block(collapse_operator_A(meson, collapse, basis)));
  spec.lindblads.push_back(
      embed_transition_block(lindblad_decay_operator(meson, basis)));
  spec.basis = Basis::Enlarged;
  return spec;
}

double default_dt_max(const MasterSpec& spec) {
  const Eigen::Index n = spec.dimension();
  CMatrix h = spec.hamiltonian;
  h -= (h.trace() / static_cast<double>(n)) * CMatrix::Identity(n, n);
  double fastest = h.norm();
  double jump = 0.0;
  for (const CMatrix& l : spec.lindblads) jump += l.squaredNorm();
  fastest = std::max(fastest, jump);
  if (spec.anticommutator)
    fastest = std::max(fastest, spec.anticommutator->norm());
  return fastest > 0.0 ? 1e-3 / fastest
                       : std::numeric_limits<double>::infinity();
}

std::vector<DensityMatrix> integrate_master(const MasterSpec& spec,
                                            const DensityMatrix& rho0,
                                            const std::vector<double>& t_grid,
                                            std::optional<double> dt_max) {
  spec.validate();
  require_square(rho0.matrix, spec.dimension(), "initial density matrix");
  if (t_grid.empty() || t_grid.front() != 0.0)
    throw Error(ErrorKind::InvalidParams, "time grid must start at 0");
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (!(t_grid[k] > t_grid[k - 1]))
      throw Error(ErrorKind::InvalidParams, "time grid must be increasing");
  const double h_max = dt_max.value_or(default_dt_max(spec));
  if (!(h_max > 0.0))
    throw Error(ErrorKind::InvalidParams, "dt_max must be positive");

  const Generator f(spec);
  std::vector<DensityMatrix> out;
  out.reserve(t_grid.size());
  CMatrix rho = rho0.matrix;
  out.emplace_back(rho, spec.basis);
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    const double span = t_grid[k] - t_grid[k - 1];
    const double steps = std::isfinite(h_max) ? std::ceil(span / h_max) : 1.0;
    const auto n_sub = static_cast<std::size_t>(std::max(1.0, steps));
    const double h = span / static_cast<double>(n_sub);
    for (std::size_t s = 0; s < n_sub; ++s) {
      const CMatrix k1 = f(rho);
      const CMatrix k2 = f(rho + (0.5 * h) * k1);
      const CMatrix k3 = f(rho + (0.5 * h) * k2);
      const CMatrix k4 = f(rho + h * k3);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const double scale = std::max(rho.norm(), 1e-300);
      const double drift = (rho - rho.adjoint()).norm() / scale;
      if (!(drift <= 1e-8))
        throw Error(ErrorKind::StepTooLarge,
                    "Hermiticity drift exceeded 1e-8 in one step");
      rho = 0.5 * (rho + rho.adjoint()).eval();
    }
    out.emplace_back(rho, spec.basis);
  }
  return out;
}

DensityMatrix project_enlarged_to_flavor(const DensityMatrix& rho) {
  if (rho.matrix.rows() != 4 || rho.matrix.cols() != 4)
    throw Error(ErrorKind::DimensionMismatch, "expected a 4x4 density matrix");
  return {rho.matrix.topLeftCorner(2, 2), Basis::Flavor};
}

double smeared_overlap(const CollapseParams& collapse, const Position& r) {
  const double rc2 = collapse.r_C * collapse.r_C;
  return std::pow(4.0 * std::numbers::pi * rc2, -0.5 * collapse.d) *
         std::exp(-r.squaredNorm() / (4.0 * rc2));
}

Complex kernel_rate(const MesonParams& meson, const CollapseParams& collapse,
                    Eigenstate i, Eigenstate j, const Position& x,
                    const Position& y) {
  if (x.size() != collapse.d || y.size() != collapse.d)
    throw Error(ErrorKind::DimensionMismatch,
                "positions must have collapse.d components");
  const double mi = mass_ratio(meson, collapse, i);
  const double mj = mass_ratio(meson, collapse, j);
  const Complex phase = -kI * meson.mass_gap(i, j);
  const double asym = 1.0 - 2.0 * collapse.beta;
  if (collapse.model == CollapseModel::QMUPL) {
    const double spread = (mi * x - mj * y).squaredNorm() -
                          asym * (mi * mi * x.squaredNorm() +
                                  mj * mj * y.squaredNorm());
    return phase - 0.5 * collapse.rate * spread;
  }
  const Position origin = Position::Zero(collapse.d);
  const double self = collapse.beta * (mi * mi + mj * mj) *
                      smeared_overlap(collapse, origin);
  const double cross = mi * mj * smeared_overlap(collapse, x - y);
  return phase - collapse.rate * (self - cross);
}

Complex kernel_solution(const MesonParams& meson,
                        const CollapseParams& collapse, Eigenstate i,
                        Eigenstate j, const Position& x, const Position& y,
                        double t) {
  return std::exp(kernel_rate(meson, collapse, i, j, x, y) * t);
}

double gaussian_packet_density(double alpha, const Position& x) {
  const auto d = static_cast<double>(x.size());
  return std::pow(std::numbers::pi * alpha, -0.5 * d) *
         std::exp(-x.squaredNorm() / alpha);
}

Complex gaussian_partial_trace(const MesonParams& meson,
                               const CollapseParams& collapse, Eigenstate i,
                               Eigenstate j, double t) {
  if (!(t >= 0.0))
    throw Error(ErrorKind::NegativeTime, "time must be non-negative");
  const double mi = mass_ratio(meson, collapse, i);
  const double mj = mass_ratio(meson, collapse, j);
  const double gap = (index(i) - index(j)) * mass_ratio_gap(meson, collapse);
  const double spread =
      gap * gap - (1.0 - 2.0 * collapse.beta) * (mi * mi + mj * mj);
  const Complex phase = std::exp(-kI * (meson.mass_gap(i, j) * t));
  const double lambda = collapse.effective_rate();
  if (collapse.model == CollapseModel::CSL)
    return phase * std::exp(-0.5 * lambda * spread * t);
  const double base = 1.0 + 0.5 * lambda * spread * t;
  if (!(base > 0.0))
    throw Error(ErrorKind::SingularTime,
                "QMUPL base (1 - ... t) is non-positive at this time");
  return phase * std::pow(base, -0.5 * collapse.d);
}

double probs_from_kernels(const MesonParams& meson,
                          const CollapseParams& collapse, const CVector& in,
                          const CVector& out, double t) {
  if (in.size() != 2 || out.size() != 2)
    throw Error(ErrorKind::DimensionMismatch, "flavor states have 2 entries");
  const CMatrix u = flavor_mass_basis_change();
  const CVector in_mass = u.adjoint() * in;
  const CVector out_mass = u.adjoint() * out;
  Complex amp = 0.0;
  constexpr Eigenstate kStates[] = {Eigenstate::L, Eigenstate::H};
  for (Eigenstate i : kStates) {
    for (Eigenstate j : kStates) {
      const Complex rho0 = in_mass(index(i)) * std::conj(in_mass(index(j)));
      amp += std::conj(out_mass(index(i))) * rho0 *
             gaussian_partial_trace(meson, collapse, i, j, t) *
             out_mass(index(j));
    }
  }
  return amp.real();
}

double probs_from_kernels(const MesonParams& meson,
                          const CollapseParams& collapse, FlavorState in,
                          FlavorState out, double t) {
  return probs_from_kernels(meson, collapse, flavor_vector(in),
                            flavor_vector(out), t);
}

}  // namespace mixcollapse
