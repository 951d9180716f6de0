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

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "mixcollapse/operators.hpp"
#include "test_util.hpp"

namespace mixcollapse {
namespace {

using testing::csl;
using testing::diag2;
using testing::toy_meson;

Eigen::Vector2d sorted_real_eigenvalues(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es{Eigen::Matrix2cd(m)};
  return es.eigenvalues();
}

TEST(MassOperator, DiagonalInMassBasis) {
  const MesonParams m = toy_meson();
  EXPECT_MATRIX_NEAR(mass_operator(m, Basis::Mass), diag2(3.0, 4.0), 0.0);
}

TEST(MassOperator, FlavorEigenvaluesAreMasses) {
  const Eigen::Vector2d ev = sorted_real_eigenvalues(mass_operator(toy_meson()));
  EXPECT_NEAR(ev(0), 3.0, 1e-14);
  EXPECT_NEAR(ev(1), 4.0, 1e-14);
}

TEST(MassOperator, DegenerateIsScalar) {
  MesonParams m;
  m.m_L = 2.5;
  m.delta_m = 0.0;  // bypasses validation on purpose
  EXPECT_MATRIX_NEAR(mass_operator(m), 2.5 * CMatrix::Identity(2, 2), 1e-15);
  EXPECT_MATRIX_NEAR(mass_operator(m, Basis::Mass),
                     2.5 * CMatrix::Identity(2, 2), 0.0);
}

TEST(DecayOperator, SpectralForm) {
  const MesonParams m = toy_meson(0.3, 0.1);
  EXPECT_MATRIX_NEAR(decay_operator(m, Basis::Mass), diag2(0.3, 0.1), 0.0);
  const MesonParams same = toy_meson(0.2, 0.2);
  EXPECT_MATRIX_NEAR(decay_operator(same), 0.2 * CMatrix::Identity(2, 2),
                     1e-15);
}

TEST(DecayOperator, FactorsThroughLindbladOperator) {
  const MesonParams m = toy_meson(0.37, 0.011);
  for (Basis b : {Basis::Flavor, Basis::Mass}) {
    const CMatrix ld = lindblad_decay_operator(m, b);
    EXPECT_MATRIX_NEAR(ld.adjoint() * ld, decay_operator(m, b), 1e-14);
  }
}

TEST(EffectiveHamiltonian, EigenvaluesAndAntiHermitianPart) {
  const MesonParams m = toy_meson(0.4, 0.2);
  const CMatrix h = effective_hamiltonian(m);
  Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es{Eigen::Matrix2cd(h)};
  std::vector<Complex> ev = {es.eigenvalues()(0), es.eigenvalues()(1)};
  std::sort(ev.begin(), ev.end(),
            [](Complex a, Complex b) { return a.real() < b.real(); });
  EXPECT_NEAR(std::abs(ev[0] - Complex(3.0, -0.2)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(ev[1] - Complex(4.0, -0.1)), 0.0, 1e-14);
  EXPECT_MATRIX_NEAR(h - h.adjoint(), -kI * decay_operator(m), 1e-15);
  const CMatrix h0 = effective_hamiltonian(toy_meson());
  EXPECT_MATRIX_NEAR(h0, h0.adjoint(), 0.0);
}

TEST(EffectiveHamiltonian, NormDecayLaw) {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int k = 0; k < 10000; ++k) {
    const MesonParams m = toy_meson(u(gen), u(gen));
    CVector psi(2);
    psi << Complex(n(gen), n(gen)), Complex(n(gen), n(gen));
    psi.normalize();
    const CMatrix h = effective_hamiltonian(m);
    const double rate =
        (psi.adjoint() * (-kI * (h - h.adjoint())) * psi)(0, 0).real();
    const CVector mass = flavor_mass_basis_change().adjoint() * psi;
    const double expected = -(m.gamma_L * std::norm(mass(0)) +
                              m.gamma_H * std::norm(mass(1)));
    EXPECT_NEAR(rate, expected, 1e-12);
  }
}

TEST(CollapseA, NormalWithReferenceAtLightMass) {
  const MesonParams m = toy_meson();
  CollapseParams c;
  c.m0 = m.m_L;
  EXPECT_MATRIX_NEAR(collapse_operator_A(m, c, Basis::Mass),
                     diag2(1.0, 4.0 / 3.0), 1e-15);
}

TEST(CollapseA, InvertedReciprocals) {
  const MesonParams m = MesonParams::from_masses(2.0, 4.0, 0.0, 0.0);
  CollapseParams c;
  c.convention = MassRatioConvention::Inverted;
  EXPECT_MATRIX_NEAR(collapse_operator_A(m, c, Basis::Mass),
                     diag2(0.5, 0.25), 0.0);
}

TEST(CollapseA, CommutesWithMassAndDecay) {
  const MesonParams m = toy_meson(0.7, 0.2);
  const CMatrix a = collapse_operator_A(m, csl(0.3, 0.9, 1.7));
  const CMatrix mm = mass_operator(m);
  const CMatrix g = decay_operator(m);
  EXPECT_MATRIX_NEAR(a * mm, mm * a, 1e-13);
  EXPECT_MATRIX_NEAR(a * g, g * a, 1e-14);
}

TEST(CollapseB, DefiningIdentity) {
  const MesonParams m = toy_meson(0.35, 0.8);
  const CollapseParams c = csl(0.21, 1.0);
  for (Basis b : {Basis::Flavor, Basis::Mass}) {
    const CMatrix bb = collapse_operator_B(m, c, b);
    EXPECT_MATRIX_NEAR(c.effective_rate() * bb.adjoint() * bb,
                       decay_operator(m, b), 1e-14);
  }
}

TEST(CollapseB, ZeroWidthsGiveZero) {
  EXPECT_MATRIX_NEAR(collapse_operator_B(toy_meson(), csl(0.1, 1.0), Basis::Mass),
                     CMatrix::Zero(2, 2), 0.0);
}

TEST(CollapseB, ArithmeticOracle) {
  // sqrt(0.9 / 0.1) = 3, sqrt(1.6 / 0.1) = 4
  const CMatrix b =
      collapse_operator_B(toy_meson(0.9, 1.6), csl(0.1, 1.0), Basis::Mass);
  EXPECT_MATRIX_NEAR(b, diag2(3.0, 4.0), 1e-14);
}

TEST(CollapseB, ZeroRateWithWidths) {
  try {
    collapse_operator_B(toy_meson(0.1, 0.0), csl(0.0, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroRate);
  }
}

TEST(Enlarged, BlockIdentities) {
  const MesonParams m = toy_meson(0.9, 1.6);
  const EnlargedOperators ops = enlarged_operators(m, csl(0.1, 1.0));
  CMatrix lifted = CMatrix::Zero(4, 4);
  lifted.topLeftCorner(2, 2) = decay_operator(m);
  EXPECT_MATRIX_NEAR(ops.decay_lindblad.adjoint() * ops.decay_lindblad, lifted,
                     1e-14);
  EXPECT_MATRIX_NEAR(ops.collapse_b * ops.collapse_b, CMatrix::Zero(4, 4), 0.0);
  EXPECT_MATRIX_NEAR(ops.hamiltonian, ops.hamiltonian.adjoint(), 0.0);
  EXPECT_MATRIX_NEAR(ops.hamiltonian.bottomRightCorner(2, 2),
                     CMatrix::Zero(2, 2), 0.0);
  EXPECT_MATRIX_NEAR(ops.collapse_a.topLeftCorner(2, 2),
                     collapse_operator_A(m, csl(0.1, 1.0)), 0.0);
  EXPECT_MATRIX_NEAR(std::sqrt(0.1) * ops.collapse_b, ops.decay_lindblad,
                     1e-14);
}

TEST(InducedWidths, SymmetricNoiseGivesNone) {
  const DecayWidths w = induced_decay_widths(toy_meson(), csl(0.3, 0.5));
  EXPECT_EQ(w.gamma_L, 0.0);
  EXPECT_EQ(w.gamma_H, 0.0);
}

TEST(InducedWidths, ArithmeticOracle) {
  // lambda (2 beta - 1) m~^2 with m~ = (3, 4)
  const DecayWidths w = induced_decay_widths(toy_meson(), csl(0.1, 1.0));
  EXPECT_NEAR(w.gamma_L, 0.1 * 1.0 * 9.0, 1e-15);
  EXPECT_NEAR(w.gamma_H, 0.1 * 1.0 * 16.0, 1e-15);
}

TEST(InducedWidths, NegativeBelowHalf) {
  try {
    induced_decay_widths(toy_meson(), csl(0.1, 0.25));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NegativeWidth);
  }
}

TEST(InducedWidths, QmuplUsesRateTimesAlpha) {
  CollapseParams c;
  c.model = CollapseModel::QMUPL;
  c.rate = 0.05;
  c.alpha = 2.0;
  c.beta = 1.0;
  const DecayWidths w = induced_decay_widths(toy_meson(), c);
  EXPECT_NEAR(w.gamma_L, 0.1 * 9.0, 1e-15);
}

TEST(InducedWidths, ConsistencyLoop) {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  std::uniform_real_distribution<double> b(0.5, 1.0);
  for (int k = 0; k < 10000; ++k) {
    const MesonParams m = MesonParams::from_masses(u(gen), 0.0, 0.0, 0.0);
    MesonParams mm = m;
    mm.delta_m = u(gen);
    const CollapseParams c = csl(u(gen), b(gen), u(gen));
    const MesonParams induced = with_induced_widths(mm, c);
    const CMatrix a = collapse_operator_A(mm, c);
    const CMatrix lhs =
        c.effective_rate() * (2.0 * c.beta - 1.0) * a * a;
    const CMatrix g = decay_operator(induced);
    EXPECT_LE(testing::max_abs_diff(lhs, g), 1e-14 * (1.0 + g.norm()));
  }
}

}  // namespace
}  // namespace mixcollapse
