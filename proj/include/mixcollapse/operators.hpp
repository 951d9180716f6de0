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

#include "mixcollapse/core.hpp"

namespace mixcollapse {

// Every operator on the meson space is returned either in flavor coordinates
// (M0, M0bar) or in mass coordinates (L, H); `basis` selects which. Operators
// into the decay subspace always use {f_L, f_H} on the output side.

CMatrix mass_operator(const MesonParams& meson, Basis basis = Basis::Flavor);

CMatrix decay_operator(const MesonParams& meson, Basis basis = Basis::Flavor);

/// M - (i/2) Gamma.
CMatrix effective_hamiltonian(const MesonParams& meson,
                              Basis basis = Basis::Flavor);

/// Self-adjoint collapse operator sum_i m~_i |M_i><M_i|.
CMatrix collapse_operator_A(const MesonParams& meson,
                            const CollapseParams& collapse,
                            Basis basis = Basis::Flavor);

/// sum_i sqrt(Gamma_i / lambda_eff) |f_i><M_i|. Throws ZeroRate when the
/// effective rate vanishes while a width does not.
CMatrix collapse_operator_B(const MesonParams& meson,
                            const CollapseParams& collapse,
                            Basis basis = Basis::Flavor);

/// L_D = sum_i sqrt(Gamma_i) |f_i><M_i|, so that L_D^H L_D = Gamma.
CMatrix lindblad_decay_operator(const MesonParams& meson,
                                Basis basis = Basis::Flavor);

/// Block operators on H_M (+) H_D. Rows/columns 0-1 are the meson block in the
/// requested basis, 2-3 are the decay products (f_L, f_H).
struct EnlargedOperators {
  CMatrix hamiltonian;      // [[M, 0], [0, 0]]
  CMatrix collapse_a;       // [[A, 0], [0, 0]]
  CMatrix collapse_b;       // [[0, 0], [B, 0]]
  CMatrix decay_lindblad;   // [[0, 0], [L_D, 0]]
};

EnlargedOperators enlarged_operators(const MesonParams& meson,
                                     const CollapseParams& collapse,
                                     Basis basis = Basis::Flavor);

/// Embeds a 2x2 operator in the meson block of the enlarged space.
CMatrix embed_meson_block(const CMatrix& op);

/// Embeds a 2x2 map H_M -> H_D in the lower-left block.
CMatrix embed_transition_block(const CMatrix& op);

struct DecayWidths {
  double gamma_L = 0.0;
  double gamma_H = 0.0;
};

/// Gamma_i = -lambda_eff (1 - 2 beta) m~_i^2. Throws NegativeWidth for
/// beta < 1/2.
DecayWidths induced_decay_widths(const MesonParams& meson,
                                 const CollapseParams& collapse);

/// Copy of `meson` whose widths are the collapse-induced ones.
MesonParams with_induced_widths(const MesonParams& meson,
                                const CollapseParams& collapse);

}  // namespace mixcollapse
