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

#include "mixcollapse/sde.hpp"

#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

#include "mixcollapse/operators.hpp"
#include "mixcollapse/rng.hpp"

namespace mixcollapse {

void NoiseConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw Error(ErrorKind::InvalidParams, "dt must be positive");
  if (!(theta0 >= 0.0 && theta0 <= 1.0))
    throw Error(ErrorKind::InvalidParams, "theta0 out of [0,1]");
  if (n_channels == 0)
    throw Error(ErrorKind::InvalidParams, "at least one noise channel");
}

std::vector<double> wiener_increments(const NoiseConfig& config,
                                      std::size_t n_steps,
                                      std::uint64_t trajectory_id) {
  config.validate();
  if (n_steps == 0)
    throw Error(ErrorKind::InvalidParams, "n_steps must be >= 1");
  const double scale = std::sqrt(config.dt);
  std::vector<double> out(n_steps * config.n_channels);
  for (std::size_t c = 0; c < config.n_channels; ++c) {
    NormalStream stream(config.seed, trajectory_id,
                        static_cast<std::uint32_t>(c));
    for (std::size_t s = 0; s < n_steps; ++s)
      out[s * config.n_channels + c] = scale * stream.at(s);
  }
  return out;
}

std::string_view to_string(Equation eq) {
  switch (eq) {
    case Equation::NonlinearReal: return "NonlinearReal";
    case Equation::NonlinearGeneral: return "NonlinearGeneral";
    case Equation::EnlargedNonlinear: return "EnlargedNonlinear";
    case Equation::FlavorDecay: return "FlavorDecay";
    case Equation::ImaginaryLinear: return "ImaginaryLinear";
    case Equation::ImaginaryLinearFamily: return "ImaginaryLinearFamily";
    case Equation::StratonovichLinear: return "StratonovichLinear";
  }
  return "Unknown";
}

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Euler: return "euler";
    case Scheme::Heun: return "heun";
    case Scheme::Exponential: return "exponential";
  }
  return "unknown";
}

bool SdeSpec::is_linear() const {
  return equation == Equation::ImaginaryLinear ||
         equation == Equation::ImaginaryLinearFamily ||
         equation == Equation::StratonovichLinear;
}

double SdeSpec::native_theta() const {
  return equation == Equation::StratonovichLinear ? 0.5 : 0.0;
}

void SdeSpec::validate() const {
  const Eigen::Index n = dimension();
  const Eigen::Index want = equation == Equation::EnlargedNonlinear ? 4 : 2;
  if (n != want || hamiltonian.cols() != n)
    throw Error(ErrorKind::DimensionMismatch,
                "hamiltonian size does not match the equation's space");
  if (basis == Basis::Enlarged)
    throw Error(ErrorKind::DimensionMismatch,
                "basis names the meson-block coordinates (Flavor or Mass)");
  if (noise_ops.empty())
    throw Error(ErrorKind::InvalidParams, "at least one noise operator");
  for (const CMatrix& l : noise_ops)
    if (l.rows() != n || l.cols() != n)
      throw Error(ErrorKind::DimensionMismatch, "noise operator size");
  if (equation == Equation::FlavorDecay &&
      (!decay || decay->rows() != n || decay->cols() != n))
    throw Error(ErrorKind::DimensionMismatch,
                "FlavorDecay needs a decay operator of matching size");
  if (!(beta >= 0.0 && beta <= 1.0))
    throw Error(ErrorKind::InvalidParams, "beta out of [0,1]");
}

namespace {

SdeSpec base_spec(Equation eq, const MesonParams& meson,
                  const CollapseParams& collapse, Basis basis) {
  SdeSpec spec;
  spec.equation = eq;
  spec.basis = basis;
  spec.hamiltonian = mass_operator(meson, basis);
  spec.noise_ops.push_back(std::sqrt(collapse.effective_rate()) *
                           collapse_operator_A(meson, collapse, basis));
  spec.beta = collapse.beta;
  return spec;
}

// Real part of the trace only: a global phase. The imaginary part of a
// non-Hermitian H is physical decay and stays.
CMatrix traceless_hamiltonian(const CMatrix& h) {
  const Eigen::Index n = h.rows();
  const double shift = h.trace().real() / static_cast<double>(n);
  CMatrix out = h;
  out.diagonal().array() -= shift;
  return out;
}

double normalized_real_expectation(const CVector& psi, const CMatrix& op,
                                   double norm2) {
  return psi.dot(op * psi).real() / norm2;
}

double checked_norm2(const CVector& psi) {
  const double n2 = psi.squaredNorm();
  if (!(std::sqrt(n2) >= 1e-300))
    throw Error(ErrorKind::ZeroNorm, "state norm below 1e-300");
  return n2;
}

void require_linear(const SdeSpec& spec) {
  if (!spec.is_linear())
    throw Error(ErrorKind::UnsupportedEquation,
                std::string(to_string(spec.equation)) +
                    " has state-dependent coefficients");
}

bool is_diagonal(const CMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != Complex(0.0)) return false;
  return true;
}

CVector apply_increment(const Coefficients& c, const CVector& psi,
                        const std::vector<double>& dW, double dt) {
  CVector out = c.drift * psi * dt;
  for (std::size_t i = 0; i < c.diffusion.size(); ++i)
    out += c.diffusion[i] * psi * dW[i];
  return out;
}

void require_channels(const SdeSpec& spec, const CVector& psi,
                      const std::vector<double>& dW) {
  if (dW.size() != spec.n_channels())
    throw Error(ErrorKind::DimensionMismatch, "dW length != n_channels");
  if (psi.size() != spec.dimension())
    throw Error(ErrorKind::DimensionMismatch, "state dimension mismatch");
}

}  // namespace

SdeSpec collapse_sde_spec(const MesonParams& meson,
                          const CollapseParams& collapse, Basis basis) {
  SdeSpec spec = base_spec(Equation::NonlinearReal, meson, collapse, basis);
  spec.hamiltonian = effective_hamiltonian(meson, basis);
  return spec;
}

SdeSpec general_sde_spec(const MesonParams& meson,
                         const CollapseParams& collapse, Basis basis) {
  SdeSpec spec = base_spec(Equation::NonlinearGeneral, meson, collapse, basis);
  spec.hamiltonian = effective_hamiltonian(meson, basis);
  return spec;
}

SdeSpec enlarged_sde_spec(const MesonParams& meson,
                          const CollapseParams& collapse, Basis basis) {
  SdeSpec spec = base_spec(Equation::EnlargedNonlinear, meson, collapse, basis);
  spec.hamiltonian = embed_meson_block(spec.hamiltonian);
  spec.noise_ops[0] = embed_meson_block(spec.noise_ops[0]);
  // sqrt(lambda) B = L_D, formed directly so that lambda = 0 stays finite
  spec.noise_ops.push_back(
      embed_transition_block(lindblad_decay_operator(meson, basis)));
  return spec;
}

SdeSpec flavor_decay_sde_spec(const MesonParams& meson,
                              const CollapseParams& collapse, Basis basis) {
  SdeSpec spec = base_spec(Equation::FlavorDecay, meson, collapse, basis);
  spec.decay = decay_operator(meson, basis);
  return spec;
}

SdeSpec imaginary_sde_spec(const MesonParams& meson,
                           const CollapseParams& collapse, Basis basis) {
  SdeSpec spec = base_spec(Equation::ImaginaryLinear, meson, collapse, basis);
  spec.hamiltonian = effective_hamiltonian(meson, basis);
  return spec;
}

SdeSpec family_sde_spec(const MesonParams& meson,
                        const CollapseParams& collapse, Basis basis) {
  return base_spec(Equation::ImaginaryLinearFamily, meson, collapse, basis);
}

SdeSpec stratonovich_family_sde_spec(const MesonParams& meson,
                                     const CollapseParams& collapse,
                                     Basis basis) {
  return base_spec(Equation::StratonovichLinear, meson, collapse, basis);
}

Coefficients coefficients(const SdeSpec& spec, const CVector& psi) {
  const Eigen::Index n = spec.dimension();
  const CMatrix id = CMatrix::Identity(n, n);
  Coefficients c;
  c.drift = -kI * traceless_hamiltonian(spec.hamiltonian);
  c.diffusion.reserve(spec.noise_ops.size());

  switch (spec.equation) {
    case Equation::NonlinearReal: {
      const double norm2 = checked_norm2(psi);
      const Complex rot = std::polar(1.0, spec.phi);
      const double cphi = std::cos(spec.phi);
      for (const CMatrix& l : spec.noise_ops) {
        const double ell = normalized_real_expectation(psi, l, norm2);
        c.drift -= 0.5 * (l * l - (2.0 * rot * cphi * ell) * l +
                          (cphi * cphi * ell * ell) * id);
        c.diffusion.push_back(rot * l - (cphi * ell) * id);
      }
      break;
    }
    case Equation::NonlinearGeneral:
    case Equation::EnlargedNonlinear: {
      const double norm2 = checked_norm2(psi);
      for (const CMatrix& l : spec.noise_ops) {
        const CMatrix sym = 0.5 * (l + l.adjoint());
        const double r = normalized_real_expectation(psi, sym, norm2);
        c.drift -= 0.5 * (l.adjoint() * l - (2.0 * r) * l + (r * r) * id);
        c.diffusion.push_back(l - r * id);
      }
      break;
    }
    case Equation::FlavorDecay: {
      const double norm2 = checked_norm2(psi);
      for (const CMatrix& l : spec.noise_ops) {
        const double ell = normalized_real_expectation(psi, l, norm2);
        const CMatrix centered = l - ell * id;
        c.drift -= 0.5 * (centered * centered);
        c.diffusion.push_back(centered);
      }
      c.drift -= 0.5 * *spec.decay;
      break;
    }
    case Equation::ImaginaryLinear:
    case Equation::ImaginaryLinearFamily:
    case Equation::StratonovichLinear: {
      const double weight = spec.equation == Equation::ImaginaryLinear ? -0.5
                            : spec.equation == Equation::ImaginaryLinearFamily
                                ? -spec.beta
                                : 0.5 * (1.0 - 2.0 * spec.beta);
      for (const CMatrix& l : spec.noise_ops) {
        c.drift += weight * (l * l);
        c.diffusion.push_back(kI * l);
      }
      break;
    }
  }
  return c;
}

CMatrix ito_stratonovich_drift(const CMatrix& diffusion, double beta,
                               double beta_prime) {
  return (beta - beta_prime) * (diffusion * diffusion);
}

Coefficients coefficients_for_theta(const SdeSpec& spec, const CVector& psi,
                                    double theta) {
  Coefficients c = coefficients(spec, psi);
  const double native = spec.native_theta();
  if (theta != native)
    for (const CMatrix& g : c.diffusion)
      c.drift += ito_stratonovich_drift(g, native, theta);
  return c;
}

CVector step(const SdeSpec& spec, const CVector& psi,
             const std::vector<double>& dW, double dt) {
  require_channels(spec, psi, dW);
  const Coefficients c = coefficients_for_theta(spec, psi, 0.0);
  return psi + apply_increment(c, psi, dW, dt);
}

CVector theta_step(const SdeSpec& spec, const CVector& psi,
                   const std::vector<double>& dW, double dt, double theta) {
  require_linear(spec);
  require_channels(spec, psi, dW);
  if (!(theta >= 0.0 && theta <= 1.0))
    throw Error(ErrorKind::InvalidParams, "theta out of [0,1]");
  const Coefficients c = coefficients_for_theta(spec, psi, theta);
  const CVector first = apply_increment(c, psi, dW, dt);
  if (theta == 0.0) return psi + first;
  const CVector second = apply_increment(c, psi + first, dW, dt);
  return psi + (1.0 - theta) * first + theta * second;
}

CVector stratonovich_step(const SdeSpec& spec, const CVector& psi,
                          const std::vector<double>& dW, double dt,
                          StratonovichMethod method) {
  require_linear(spec);
  if (method == StratonovichMethod::Heun)
    return theta_step(spec, psi, dW, dt, 0.5);
  require_channels(spec, psi, dW);
  const Coefficients c = coefficients_for_theta(spec, psi, 0.0);
  return psi + apply_increment(c, psi, dW, dt);
}

CMatrix small_expm(const CMatrix& a) {
  const Eigen::Index n = a.rows();
  if (is_diagonal(a)) {
    CMatrix out = CMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) out(i, i) = std::exp(a(i, i));
    return out;
  }
  if (n == 2) {
    // a = mu I + N with N traceless, N^2 = s^2 I
    const Complex mu = 0.5 * (a(0, 0) + a(1, 1));
    CMatrix nil = a;
    nil(0, 0) -= mu;
    nil(1, 1) -= mu;
    const Complex s2 = nil(0, 0) * nil(0, 0) + nil(0, 1) * nil(1, 0);
    const Complex s = std::sqrt(s2);
    Complex ch;
    Complex sh_over_s;
    if (std::abs(s) < 1e-4) {
      ch = 1.0 + s2 / 2.0 + s2 * s2 / 24.0;
      sh_over_s = 1.0 + s2 / 6.0 + s2 * s2 / 120.0;
    } else {
      ch = std::cosh(s);
      sh_over_s = std::sinh(s) / s;
    }
    CMatrix out = sh_over_s * nil;
    out(0, 0) += ch;
    out(1, 1) += ch;
    return std::exp(mu) * out;
  }
  const Eigen::MatrixXcd dense = a;
  return dense.exp();
}

CVector exponential_step(const SdeSpec& spec, const CVector& psi,
                         const std::vector<double>& dW, double dt) {
  require_channels(spec, psi, dW);
  const Coefficients c = coefficients_for_theta(spec, psi, 0.0);
  CMatrix exponent = c.drift * dt;
  for (std::size_t i = 0; i < c.diffusion.size(); ++i) {
    const CMatrix& g = c.diffusion[i];
    exponent += g * dW[i] - (0.5 * dt) * (g * g);
  }
  return small_expm(exponent) * psi;
}

double asymmetric_delta(double t, double kappa, double epsilon) {
  if (!(epsilon > 0.0) || !(kappa > 0.0))
    throw Error(ErrorKind::InvalidParams, "kappa and epsilon must be > 0");
  const double rate = t >= 0.0 ? kappa : 1.0 / kappa;
  return std::exp(-std::abs(t) / epsilon * rate) /
         (epsilon * (kappa + 1.0 / kappa));
}

double theta_from_kappa(double kappa) {
  if (!(kappa >= 0.0))
    throw Error(ErrorKind::InvalidParams, "kappa must be >= 0");
  if (std::isinf(kappa)) return 1.0;
  const double k2 = kappa * kappa;
  if (std::isinf(k2)) return 1.0;
  return k2 / (1.0 + k2);
}

SdeSpec phase_transform_spec(const SdeSpec& spec, double phi) {
  if (spec.equation != Equation::NonlinearReal)
    throw Error(ErrorKind::UnsupportedEquation,
                "the phase family is built from NonlinearReal");
  SdeSpec out = spec;
  out.phi = phi;
  return out;
}

}  // namespace mixcollapse
