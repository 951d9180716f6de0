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

#include <gtest/gtest.h>

#include "mixcollapse/core.hpp"

namespace mixcollapse::testing {

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline CMatrix diag2(Complex a, Complex b) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

inline MesonParams toy_meson(double gamma_L = 0.0, double gamma_H = 0.0) {
  return MesonParams::from_masses(3.0, 4.0, gamma_L, gamma_H);
}

inline CollapseParams csl(double lambda_eff, double beta, double m0 = 1.0) {
  CollapseParams c;
  c.model = CollapseModel::CSL;
  c.d = 1;
  c.r_C = 1.0 / std::sqrt(4.0 * 3.14159265358979323846);
  c.rate = lambda_eff;  // (sqrt(4 pi) r_C)^1 = 1
  c.beta = beta;
  c.m0 = m0;
  return c;
}

}  // namespace mixcollapse::testing

#define EXPECT_MATRIX_NEAR(a, b, tol) \
  EXPECT_LE(::mixcollapse::testing::max_abs_diff((a), (b)), (tol))
