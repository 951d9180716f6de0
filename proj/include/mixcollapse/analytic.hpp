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

// Closed-form transition probabilities. All functions throw NegativeTime for
// t < 0; the QMUPL family additionally throws SingularTime once an algebraic
// base (1 - ... t) reaches zero.

double prob_lifetime_qm(const MesonParams& meson, Eigenstate i, Eigenstate j,
                        double t);
double prob_flavor_qm(const MesonParams& meson, FlavorState target, double t);

double prob_lifetime_qmupl(const MesonParams& meson,
                           const CollapseParams& collapse, Eigenstate i,
                           Eigenstate j, double t);
double prob_flavor_qmupl(const MesonParams& meson,
                         const CollapseParams& collapse, FlavorState target,
                         double t);

double prob_lifetime_csl(const MesonParams& meson,
                         const CollapseParams& collapse, Eigenstate i,
                         Eigenstate j, double t);
double prob_flavor_csl(const MesonParams& meson, const CollapseParams& collapse,
                       FlavorState target, double t);

/// First time at which a QMUPL base vanishes, or +inf if none does.
double qmupl_singular_time(const MesonParams& meson,
                           const CollapseParams& collapse);

enum class AsymmetryModel { QM, QMUPL, CSL };

struct AsymmetrySpec {
  AsymmetryModel model = AsymmetryModel::QM;
  MesonParams meson;
  std::optional<CollapseParams> collapse;  // present iff model != QM

  void validate() const;
};

/// Flavor transition probability for whichever model is selected.
double prob_flavor(const AsymmetrySpec& spec, FlavorState target, double t);
double prob_lifetime(const AsymmetrySpec& spec, Eigenstate i, Eigenstate j,
                     double t);

/// (P_same - P_flip) / (P_same + P_flip), computed from the probabilities.
double asymmetry(const AsymmetrySpec& spec, double t);

/// The factored closed forms: cos/cosh for QM and CSL, the bracketed
/// d/2-power expression for QMUPL.
double asymmetry_closed_form(const AsymmetrySpec& spec, double t);

struct MassRoot {
  double m_L = 0.0;
  double m_H = 0.0;
};

struct MassSolution {
  bool linear = false;
  std::vector<MassRoot> roots;           // ascending in m_L
  std::vector<MassRoot> positive_roots;  // subset with m_L > 0
};

/// Real roots of (2 dG / (dG +- 2 Gbar)) m_L^2 + 2 dm m_L + dm^2 = 0; upper
/// sign for the normal mass ratio.
MassSolution solve_absolute_masses(double delta_gamma, double mean_gamma,
                                   double delta_m,
                                   MassRatioConvention convention);

/// Gamma_i / ((2 beta - 1) m~_i^2).
double collapse_rate_estimate(double gamma_i, double beta, double mass_ratio_i);

/// Lower bound on the CSL rate reached at beta = 1. Scales as m0^2 for the
/// normal ratio and m0^-2 for the inverted one.
double collapse_rate_lower_bound(const MesonParams& meson, double m0,
                                 MassRatioConvention convention);

struct BoundCurve {
  std::vector<double> m0;
  std::vector<double> bound;
};

/// Log-spaced samples of collapse_rate_lower_bound over [m0_min, m0_max].
BoundCurve bound_curve(const MesonParams& meson, double m0_min, double m0_max,
                       MassRatioConvention convention, std::size_t n_points);

}  // namespace mixcollapse
