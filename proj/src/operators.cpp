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

#include "mixcollapse/operators.hpp"

#include <cmath>

namespace mixcollapse {

namespace {

CMatrix diagonal(double l, double h) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = l;
  m(1, 1) = h;
  return m;
}

CMatrix in_basis(const CMatrix& mass_form, Basis basis) {
  switch (basis) {
    case Basis::Mass: return mass_form;
    case Basis::Flavor: return mass_to_flavor(mass_form);
    case Basis::Enlarged: break;
  }
  throw Error(ErrorKind::DimensionMismatch,
              "meson operators are defined on the flavor or mass basis");
}

// Right-multiplying by U^H re-expresses the input side in flavor coordinates
// while leaving the decay-product output side alone.
CMatrix transition_in_basis(const CMatrix& mass_form, Basis basis) {
  switch (basis) {
    case Basis::Mass: return mass_form;
    case Basis::Flavor: return mass_form * flavor_mass_basis_change().adjoint();
    case Basis::Enlarged: break;
  }
  throw Error(ErrorKind::DimensionMismatch,
              "meson operators are defined on the flavor or mass basis");
}

}  // namespace

CMatrix mass_operator(const MesonParams& meson, Basis basis) {
  return in_basis(diagonal(meson.m_L, meson.m_H()), basis);
}

CMatrix decay_operator(const MesonParams& meson, Basis basis) {
  return in_basis(diagonal(meson.gamma_L, meson.gamma_H), basis);
}

CMatrix effective_hamiltonian(const MesonParams& meson, Basis basis) {
  return mass_operator(meson, basis) - 0.5 * kI * decay_operator(meson, basis);
}

CMatrix collapse_operator_A(const MesonParams& meson,
                            const CollapseParams& collapse, Basis basis) {
  return in_basis(diagonal(mass_ratio(meson, collapse, Eigenstate::L),
                           mass_ratio(meson, collapse, Eigenstate::H)),
                  basis);
}

CMatrix collapse_operator_B(const MesonParams& meson,
                            const CollapseParams& collapse, Basis basis) {
  const double lambda = collapse.effective_rate();
  if (!(lambda > 0.0)) {
    if (meson.gamma_L > 0.0 || meson.gamma_H > 0.0)
      throw Error(ErrorKind::ZeroRate,
                  "collapse operator B needs a positive effective rate");
    return CMatrix::Zero(2, 2);
  }
  return transition_in_basis(diagonal(std::sqrt(meson.gamma_L / lambda),
                                      std::sqrt(meson.gamma_H / lambda)),
                             basis);
}

CMatrix lindblad_decay_operator(const MesonParams& meson, Basis basis) {
  return transition_in_basis(
      diagonal(std::sqrt(meson.gamma_L), std::sqrt(meson.gamma_H)), basis);
}

CMatrix embed_meson_block(const CMatrix& op) {
  CMatrix out = CMatrix::Zero(4, 4);
  out.topLeftCorner(2, 2) = op;
  return out;
}

CMatrix embed_transition_block(const CMatrix& op) {
  CMatrix out = CMatrix::Zero(4, 4);
  out.bottomLeftCorner(2, 2) = op;
  return out;
}

EnlargedOperators enlarged_operators(const MesonParams& meson,
                                     const CollapseParams& collapse,
                                     Basis basis) {
  EnlargedOperators ops;
  ops.hamiltonian = embed_meson_block(mass_operator(meson, basis));
  ops.collapse_a = embed_meson_block(collapse_operator_A(meson, collapse, basis));
  ops.collapse_b =
      embed_transition_block(collapse_operator_B(meson, collapse, basis));
  ops.decay_lindblad =
      embed_transition_block(lindblad_decay_operator(meson, basis));
  return ops;
}

DecayWidths induced_decay_widths(const MesonParams& meson,
                                 const CollapseParams& collapse) {
  if (collapse.beta < 0.5)
    throw Error(ErrorKind::NegativeWidth,
                "beta < 1/2 induces negative decay widths");
  const double scale = -collapse.effective_rate() * (1.0 - 2.0 * collapse.beta);
  const double l = mass_ratio(meson, collapse, Eigenstate::L);
  const double h = mass_ratio(meson, collapse, Eigenstate::H);
  return {scale * l * l, scale * h * h};
}

MesonParams with_induced_widths(const MesonParams& meson,
                                const CollapseParams& collapse) {
  const DecayWidths w = induced_decay_widths(meson, collapse);
  MesonParams out = meson;
  out.gamma_L = w.gamma_L;
  out.gamma_H = w.gamma_H;
  return out;
}

}  // namespace mixcollapse
