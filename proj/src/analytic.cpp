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

#include "mixcollapse/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mixcollapse {

namespace {

void require_time(double t) {
  if (!(t >= 0.0))
    throw Error(ErrorKind::NegativeTime, "time must be non-negative");
}

double sign_of(FlavorState target) {
  return target == FlavorState::Particle ? 1.0 : -1.0;
}

double delta(Eigenstate i, Eigenstate j) { return i == j ? 1.0 : 0.0; }

// Value of an algebraic QMUPL base raised to -d/2.
double inverse_power(double base, int d) {
  if (!(base > 0.0))
    throw Error(ErrorKind::SingularTime,
                "QMUPL base (1 - ... t) is non-positive at this time");
  return std::pow(base, -0.5 * d);
}

struct QmuplBases {
  double light = 1.0;
  double heavy = 1.0;
  double interference = 1.0;
};

QmuplBases qmupl_bases(const MesonParams& meson, const CollapseParams& c,
                       double t) {
  const double la = c.effective_rate();
  const double asym = 1.0 - 2.0 * c.beta;
  const double l = mass_ratio(meson, c, Eigenstate::L);
  const double h = mass_ratio(meson, c, Eigenstate::H);
  const double gap = mass_ratio_gap(meson, c);
  return {1.0 - la * asym * l * l * t, 1.0 - la * asym * h * h * t,
          1.0 - 0.5 * la * (asym * (l * l + h * h) - gap * gap) * t};
}

}  // namespace

double prob_lifetime_qm(const MesonParams& meson, Eigenstate i, Eigenstate j,
                        double t) {
  require_time(t);
  return std::exp(-meson.width(i) * t) * delta(i, j);
}

double prob_flavor_qm(const MesonParams& meson, FlavorState target, double t) {
  require_time(t);
  const double decays =
      std::exp(-meson.gamma_L * t) + std::exp(-meson.gamma_H * t);
  const double interference =
      2.0 * std::exp(-meson.mean_gamma() * t) * std::cos(t * meson.delta_m);
  return 0.25 * (decays + sign_of(target) * interference);
}

double prob_lifetime_qmupl(const MesonParams& meson,
                           const CollapseParams& collapse, Eigenstate i,
                           Eigenstate j, double t) {
  require_time(t);
  const QmuplBases b = qmupl_bases(meson, collapse, t);
  const double base = i == Eigenstate::L ? b.light : b.heavy;
  return inverse_power(base, collapse.d) * delta(i, j);
}

double prob_flavor_qmupl(const MesonParams& meson,
                         const CollapseParams& collapse, FlavorState target,
                         double t) {
  require_time(t);
  const QmuplBases b = qmupl_bases(meson, collapse, t);
  const int d = collapse.d;
  const double decays = inverse_power(b.light, d) + inverse_power(b.heavy, d);
  const double interference =
      2.0 * std::cos(t * meson.delta_m) * inverse_power(b.interference, d);
  return 0.25 * (decays + sign_of(target) * interference);
}

double prob_lifetime_csl(const MesonParams& meson,
                         const CollapseParams& collapse, Eigenstate i,
                         Eigenstate j, double t) {
  require_time(t);
  const double lambda = collapse.effective_rate();
  const double m = mass_ratio(meson, collapse, i);
  return std::exp(-lambda * (2.0 * collapse.beta - 1.0) * m * m * t) *
         delta(i, j);
}

double prob_flavor_csl(const MesonParams& meson, const CollapseParams& collapse,
                       FlavorState target, double t) {
  require_time(t);
  const double lambda = collapse.effective_rate();
  const double asym = 2.0 * collapse.beta - 1.0;
  const double l = mass_ratio(meson, collapse, Eigenstate::L);
  const double h = mass_ratio(meson, collapse, Eigenstate::H);
  const double gap = mass_ratio_gap(meson, collapse);
  const double decays = std::exp(-lambda * asym * l * l * t) +
                        std::exp(-lambda * asym * h * h * t);
  const double damping =
      std::exp(-0.5 * lambda * (asym * (l * l + h * h) + gap * gap) * t);
  const double interference = 2.0 * damping * std::cos(t * meson.delta_m);
  return 0.25 * (decays + sign_of(target) * interference);
}

double qmupl_singular_time(const MesonParams& meson,
                           const CollapseParams& collapse) {
  // Each base is 1 - s t; the first root is 1 / max positive slope.
  const QmuplBases at_one = qmupl_bases(meson, collapse, 1.0);
  const double slope = std::max({1.0 - at_one.light, 1.0 - at_one.heavy,
                                 1.0 - at_one.interference});
  return slope > 0.0 ? 1.0 / slope : std::numeric_limits<double>::infinity();
}

void AsymmetrySpec::validate() const {
  if ((model == AsymmetryModel::QM) == collapse.has_value())
    throw Error(ErrorKind::InvalidParams,
                "collapse parameters must be present iff the model is not QM");
  validate_meson(meson);
  if (collapse) {
    validate_collapse(*collapse);
    const CollapseModel want = model == AsymmetryModel::QMUPL
                                   ? CollapseModel::QMUPL
                                   : CollapseModel::CSL;
    if (collapse->model != want)
      throw Error(ErrorKind::InvalidParams,
                  "collapse model does not match the asymmetry model");
  }
}

double prob_flavor(const AsymmetrySpec& spec, FlavorState target, double t) {
  switch (spec.model) {
    case AsymmetryModel::QM: return prob_flavor_qm(spec.meson, target, t);
    case AsymmetryModel::QMUPL:
      return prob_flavor_qmupl(spec.meson, *spec.collapse, target, t);
    case AsymmetryModel::CSL:
      return prob_flavor_csl(spec.meson, *spec.collapse, target, t);
  }
  return 0.0;
}

double prob_lifetime(const AsymmetrySpec& spec, Eigenstate i, Eigenstate j,
                     double t) {
  switch (spec.model) {
    case AsymmetryModel::QM: return prob_lifetime_qm(spec.meson, i, j, t);
    case AsymmetryModel::QMUPL:
      return prob_lifetime_qmupl(spec.meson, *spec.collapse, i, j, t);
    case AsymmetryModel::CSL:
      return prob_lifetime_csl(spec.meson, *spec.collapse, i, j, t);
  }
  return 0.0;
}

double asymmetry(const AsymmetrySpec& spec, double t) {
  const double same = prob_flavor(spec, FlavorState::Particle, t);
  const double flip = prob_flavor(spec, FlavorState::Antiparticle, t);
  const double sum = same + flip;
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw Error(ErrorKind::DegenerateDenominator,
                "flavor probabilities sum to zero");
  return (same - flip) / sum;
}

double asymmetry_closed_form(const AsymmetrySpec& spec, double t) {
  require_time(t);
  const MesonParams& meson = spec.meson;
  const double oscillation = std::cos(t * meson.delta_m);
  if (spec.model == AsymmetryModel::QM)
    return oscillation / std::cosh(0.5 * meson.delta_gamma() * t);

  const CollapseParams& c = *spec.collapse;
  const double lambda = c.effective_rate();
  const double gap = mass_ratio_gap(meson, c);
  const double sq_gap = mass_ratio_sq_gap(meson, c);
  if (spec.model == AsymmetryModel::CSL) {
    return oscillation * std::exp(-0.5 * lambda * gap * gap * t) /
           std::cosh(lambda * (c.beta - 0.5) * sq_gap * t);
  }

  const QmuplBases b = qmupl_bases(meson, c, t);
  if (!(b.light > 0.0) || !(b.heavy > 0.0) || !(b.interference > 0.0))
    throw Error(ErrorKind::SingularTime,
                "QMUPL base (1 - ... t) is non-positive at this time");
  const double asym = 1.0 - 2.0 * c.beta;
  const double half_d = 0.5 * c.d;
  const double light_term =
      std::pow(1.0 - 0.5 * lambda * (asym * sq_gap - gap * gap) * t / b.light,
               half_d);
  const double heavy_term =
      std::pow(1.0 + 0.5 * lambda * (asym * sq_gap + gap * gap) * t / b.heavy,
               half_d);
  return 2.0 * oscillation / (light_term + heavy_term);
}

MassSolution solve_absolute_masses(double delta_gamma, double mean_gamma,
                                   double delta_m,
                                   MassRatioConvention convention) {
  if (!(delta_m > 0.0))
    throw Error(ErrorKind::InvalidParams, "Δm must be positive");
  const double denom = convention == MassRatioConvention::Normal
                           ? delta_gamma + 2.0 * mean_gamma
                           : delta_gamma - 2.0 * mean_gamma;
  if (denom == 0.0)
    throw Error(ErrorKind::DegenerateDenominator,
                "dGamma +- 2 Gamma vanishes for this convention");
  const double a = 2.0 * delta_gamma / denom;

  MassSolution out;
  if (a == 0.0) {
    out.linear = true;
    out.roots.push_back({-0.5 * delta_m, 0.5 * delta_m});
  } else {
    // discriminant 4 dm^2 (1 - a); roots dm (-1 -+ sqrt(1 - a)) / a, written
    // so that neither branch subtracts nearly equal numbers
    const double q = 1.0 - a;
    if (q < 0.0)
      throw Error(ErrorKind::NoRealRoot, "mass equation has no real root");
    const double s = 1.0 + std::sqrt(q);
    const double r1 = -delta_m * s / a;
    const double r2 = -delta_m / s;
    out.roots.push_back({r1, r1 + delta_m});
    if (q > 0.0) out.roots.push_back({r2, r2 + delta_m});
    std::sort(out.roots.begin(), out.roots.end(),
              [](const MassRoot& x, const MassRoot& y) { return x.m_L < y.m_L; });
  }
  for (const MassRoot& r : out.roots)
    if (r.m_L > 0.0) out.positive_roots.push_back(r);
  return out;
}

double collapse_rate_estimate(double gamma_i, double beta,
                              double mass_ratio_i) {
  if (beta == 0.5)
    throw Error(ErrorKind::SymmetricNoise,
                "beta = 1/2 induces no decay; the rate cannot be estimated");
  if (!(beta > 0.5) || beta > 1.0)
    throw Error(ErrorKind::InvalidParams, "beta must lie in (1/2, 1]");
  if (!(mass_ratio_i > 0.0))
    throw Error(ErrorKind::InvalidParams, "mass ratio must be positive");
  if (gamma_i < 0.0)
    throw Error(ErrorKind::InvalidParams, "decay width must be non-negative");
  return gamma_i / ((2.0 * beta - 1.0) * mass_ratio_i * mass_ratio_i);
}

double collapse_rate_lower_bound(const MesonParams& meson, double m0,
                                 MassRatioConvention convention) {
  if (!(meson.delta_m > 0.0))
    throw Error(ErrorKind::InvalidParams, "Δm must be positive");
  if (!(m0 > 0.0)) throw Error(ErrorKind::InvalidParams, "m0 must be positive");
  const double gl = meson.gamma_L;
  const double gh = meson.gamma_H;
  if (gl == gh)
    throw Error(ErrorKind::DegenerateWidths,
                "equal widths give no collapse-rate bound");
  if (gl < 0.0 || gh < 0.0)
    throw Error(ErrorKind::InvalidParams, "decay widths must be non-negative");
  const double root_sum = std::sqrt(gl) + std::sqrt(gh);
  if (convention == MassRatioConvention::Normal) {
    // sqrt(G_L) - sqrt(G_H) = (G_L - G_H) / (sqrt(G_L) + sqrt(G_H))
    const double x = (gl - gh) / root_sum;
    const double r = m0 * x / meson.delta_m;
    return r * r;
  }
  if (!(gl > 0.0) || !(gh > 0.0))
    throw Error(ErrorKind::InvalidParams,
                "the inverted bound needs strictly positive widths");
  // 1/sqrt(G_L) - 1/sqrt(G_H) = (G_H - G_L) / (sqrt(G_L G_H) root_sum)
  const double x = (gh - gl) / (std::sqrt(gl * gh) * root_sum);
  const double r = meson.delta_m / (m0 * x);
  return r * r;
}

BoundCurve bound_curve(const MesonParams& meson, double m0_min, double m0_max,
                       MassRatioConvention convention, std::size_t n_points) {
  if (n_points < 2)
    throw Error(ErrorKind::InvalidParams, "bound curve needs >= 2 points");
  if (!(m0_min > 0.0) || !(m0_max > m0_min))
    throw Error(ErrorKind::InvalidParams,
                "m0 range must satisfy 0 < m0_min < m0_max");
  BoundCurve curve;
  curve.m0.resize(n_points);
  curve.bound.resize(n_points);
  const double lo = std::log(m0_min);
  const double span = std::log(m0_max) - lo;
  for (std::size_t k = 0; k < n_points; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(n_points - 1);
    curve.m0[k] = std::exp(lo + frac * span);
  }
  curve.m0.front() = m0_min;
  curve.m0.back() = m0_max;
  for (std::size_t k = 0; k < n_points; ++k)
    curve.bound[k] = collapse_rate_lower_bound(meson, curve.m0[k], convention);
  return curve;
}

}  // namespace mixcollapse
