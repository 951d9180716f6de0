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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mixcollapse/analytic.hpp"
#include "mixcollapse/cli.hpp"
#include "mixcollapse/lindblad.hpp"
#include "mixcollapse/operators.hpp"
#include "mixcollapse/sde.hpp"

namespace mc = mixcollapse;
using mc::Basis;
using mc::CMatrix;
using mc::CollapseParams;
using mc::Complex;
using mc::Eigenstate;
using mc::FlavorState;
using mc::MassRatioConvention;
using mc::MesonParams;

namespace {

constexpr double kFloor = 1e-9;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (!pass) detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

CollapseParams csl(double lambda_eff, double beta, double m0, int d,
                   MassRatioConvention conv) {
  CollapseParams c;
  c.model = mc::CollapseModel::CSL;
  c.d = d;
  c.r_C = 0.3;
  c.rate = lambda_eff * std::pow(std::sqrt(4.0 * std::numbers::pi) * c.r_C, d);
  c.beta = beta;
  c.m0 = m0;
  c.convention = conv;
  return c;
}

mc::DensityMatrix m0_density(Basis basis) {
  const mc::QuantumState f(mc::flavor_vector(FlavorState::Particle), Basis::Flavor);
  const mc::QuantumState s = basis == Basis::Mass ? mc::to_mass(f) : f;
  return mc::DensityMatrix::pure(s);
}

mc::QuantumState m0_vector(Basis basis) {
  const mc::QuantumState f(mc::flavor_vector(FlavorState::Particle), Basis::Flavor);
  return basis == Basis::Mass ? mc::to_mass(f) : f;
}

mc::NoiseConfig noise_for(const mc::SdeSpec& s, double dt, std::uint64_t seed) {
  mc::NoiseConfig cfg;
  cfg.seed = seed;
  cfg.dt = dt;
  cfg.theta0 = s.native_theta();
  cfg.n_channels = s.n_channels();
  return cfg;
}

// Worst |difference| / standard error over every real and imaginary matrix
// component, ignoring differences below the absolute floor.
double worst_ratio(const mc::EnsembleStats& st, const std::vector<CMatrix>& ref) {
  double worst = 0.0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const CMatrix diff = st.mean[k] - ref[k];
    for (Eigen::Index i = 0; i < diff.rows(); ++i)
      for (Eigen::Index j = 0; j < diff.cols(); ++j)
        for (const auto& [r, se] :
             {std::pair{diff(i, j).real(), st.stderr_real[k](i, j)},
              std::pair{diff(i, j).imag(), st.stderr_imag[k](i, j)}}) {
          const double excess = std::abs(r) - kFloor;
          if (excess > 0.0)
            worst = std::max(worst, se > 0.0 ? excess / se : INFINITY);
        }
  }
  return worst;
}

// Criterion 1.
void triple_route(Outcome& out) {
  std::mt19937_64 gen(1001);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    MesonParams m;
    m.m_L = 1.0 + 4.0 * u(gen);
    m.delta_m = 0.2 + 1.8 * u(gen);
    const auto conv = k % 2 ? MassRatioConvention::Inverted : MassRatioConvention::Normal;
    const double beta = k == 0 ? 0.5 : k == 1 ? 1.0 : 0.5 + 0.5 * u(gen);
    const double m0 = 0.5 + 2.0 * u(gen);
    CollapseParams c = csl(1.0, beta, m0, 1 + k % 3, conv);
    // Size lambda_eff so the induced gap rate is a fraction of delta_m.
    const double gap = mc::mass_ratio_gap(m, c);
    const double lambda = (0.02 + 0.3 * u(gen)) * m.delta_m / std::max(gap * gap, 1e-3);
    c = csl(lambda, beta, m0, 1 + k % 3, conv);
    const double gbar = mc::with_induced_widths(m, c).mean_gamma();
    const double t_max = std::min(gbar > 0.0 ? 8.0 / gbar : INFINITY, 60.0 / m.delta_m);
    const auto grid = mc::linear_grid(t_max, 400);
    const auto flavor = mc::integrate_master(mc::family_master_spec(m, c),
                                             m0_density(Basis::Flavor), grid);
    const auto mass = mc::integrate_master(mc::family_master_spec(m, c, Basis::Mass),
                                           m0_density(Basis::Mass), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double t = grid[i];
      const std::array<double, 6> diffs = {
          flavor[i].matrix(0, 0).real() -
              mc::prob_flavor_csl(m, c, FlavorState::Particle, t),
          flavor[i].matrix(1, 1).real() -
              mc::prob_flavor_csl(m, c, FlavorState::Antiparticle, t),
          2.0 * mass[i].matrix(0, 0).real() -
              mc::prob_lifetime_csl(m, c, Eigenstate::L, Eigenstate::L, t),
          2.0 * mass[i].matrix(1, 1).real() -
              mc::prob_lifetime_csl(m, c, Eigenstate::H, Eigenstate::H, t),
          mass[i].matrix(0, 0).real() - 0.5 * mc::prob_lifetime_csl(
                                                   m, c, Eigenstate::L, Eigenstate::L, t),
          mass[i].matrix(1, 1).real() - 0.5 * mc::prob_lifetime_csl(
                                                   m, c, Eigenstate::H, Eigenstate::H, t)};
      for (double d : diffs) worst = std::max(worst, std::abs(d));
    }
  }
  out.detail << "max residual " << fmt(worst) << " over 20 sets x 400 points";
  out.require(worst < 1e-8, "residual >= 1e-8");
}

// Criterion 2.
void monte_carlo_closure(Outcome& out) {
  std::mt19937_64 gen(2002);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    MesonParams m;
    m.m_L = 1.0 + 3.0 * u(gen);
    m.delta_m = 0.5 + u(gen);
    const auto conv = k % 2 ? MassRatioConvention::Inverted : MassRatioConvention::Normal;
    const CollapseParams c = csl(0.02 + 0.08 * u(gen), 0.5 + 0.5 * u(gen),
                                 1.0 + u(gen), 1 + k % 3, conv);
    const double gbar = mc::with_induced_widths(m, c).mean_gamma();
    const double t_max = std::min(gbar > 0.0 ? 5.0 / gbar : INFINITY, 20.0 / m.delta_m);
    const auto grid = mc::linear_grid(t_max, 20);
    const mc::SdeSpec s = mc::family_sde_spec(m, c, Basis::Mass);
    const mc::EnsembleStats st = mc::ensemble_evolve(
        s, noise_for(s, t_max / 1e4, 50 + k), m0_vector(Basis::Mass), grid, 10000);
    std::vector<CMatrix> ref;
    for (const auto& rho : mc::integrate_master(mc::family_master_spec(m, c, Basis::Mass),
                                                m0_density(Basis::Mass), grid))
      ref.push_back(rho.matrix);
    worst = std::max(worst, worst_ratio(st, ref));
  }
  out.detail << "max |mean - master| / se " << fmt(worst) << " over 5 sets";
  out.require(worst < 4.0, "outside 4 standard errors");
}

Complex quadrature_trace(const MesonParams& m, const CollapseParams& c,
                         Eigenstate i, Eigenstate j, double t) {
  using boost::math::quadrature::gauss_kronrod;
  const double edge = 10.0 * std::sqrt(c.alpha);
  auto part = [&](bool imag) {
    auto f = [&](double s) {
      mc::Position x(1);
      x << s;
      const Complex v = mc::gaussian_packet_density(c.alpha, x) *
                        mc::kernel_solution(m, c, i, j, x, x, t);
      return imag ? v.imag() : v.real();
    };
    return gauss_kronrod<double, 61>::integrate(f, -edge, edge, 20, 1e-12);
  };
  return {part(false), part(true)};
}

// Criterion 3.
void quadrature_oracle(Outcome& out) {
  const MesonParams m = MesonParams::from_masses(3.0, 4.0, 0.0, 0.0);
  CollapseParams q;
  q.model = mc::CollapseModel::QMUPL;
  q.rate = 0.04;
  q.alpha = 0.7;
  q.beta = 0.85;
  q.d = 1;
  CollapseParams c = csl(0.0, 0.85, 1.0, 1, MassRatioConvention::Normal);
  c.r_C = 0.5;
  c.rate = 0.08;
  c.alpha = 0.7;
  const std::array<std::tuple<Eigenstate, Eigenstate, double>, 5> points{{
      {Eigenstate::L, Eigenstate::L, 0.5},
      {Eigenstate::H, Eigenstate::H, 2.0},
      {Eigenstate::L, Eigenstate::H, 0.7},
      {Eigenstate::H, Eigenstate::L, 1.9},
      {Eigenstate::L, Eigenstate::H, 4.0},
  }};
  double worst = 0.0;
  for (const CollapseParams& cp : {q, c})
    for (const auto& [i, j, t] : points)
      worst = std::max(worst, std::abs(mc::gaussian_partial_trace(m, cp, i, j, t) -
                                       quadrature_trace(m, cp, i, j, t)));
  out.detail << "max |closed form - quadrature| " << fmt(worst) << " at 10 points";
  out.require(worst < 1e-8, "above 1e-8");
}

// Criterion 4.
void formalism_equivalence(Outcome& out) {
  const MesonParams m = MesonParams::from_masses(3.0, 4.0, 0.0, 0.0);
  const auto grid = mc::linear_grid(4.0, 21);
  const double dt = 4.0 / 1e4;
  double worst = 0.0;
  std::uint64_t seed = 400;
  for (double beta : {0.5, 0.75, 1.0}) {
    const CollapseParams c = csl(0.05, beta, 1.0, 1, MassRatioConvention::Normal);
    const mc::SdeSpec ito = mc::family_sde_spec(m, c, Basis::Mass);
    const mc::SdeSpec strat = mc::stratonovich_family_sde_spec(m, c, Basis::Mass);
    mc::EnsembleOptions euler;
    euler.scheme = mc::Scheme::Euler;
    mc::EnsembleOptions heun;
    heun.scheme = mc::Scheme::Heun;
    const auto a = mc::ensemble_evolve(ito, noise_for(ito, dt, seed++),
                                       m0_vector(Basis::Mass), grid, 10000, euler);
    const auto b = mc::ensemble_evolve(strat, noise_for(strat, dt, seed++),
                                       m0_vector(Basis::Mass), grid, 10000, heun);
    for (std::size_t k = 0; k < grid.size(); ++k)
      for (std::size_t o = 0; o < a.observable_mean.size(); ++o) {
        const double se = std::hypot(a.observable_stderr[o][k], b.observable_stderr[o][k]);
        const double excess =
            std::abs(a.observable_mean[o][k] - b.observable_mean[o][k]) - kFloor;
        if (excess > 0.0) worst = std::max(worst, se > 0.0 ? excess / se : INFINITY);
      }
  }
  out.detail << "Ito (Euler) vs Stratonovich (Heun) max ratio " << fmt(worst);
  out.require(worst < 4.0, "outside 4 combined standard errors");
}

// Criterion 5.
void enlarged_consistency(Outcome& out) {
  std::mt19937_64 gen(5005);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double min_eig = INFINITY;
  double trace_err = 0.0;
  double proj_err = 0.0;
  for (int k = 0; k < 5; ++k) {
    MesonParams m;
    m.m_L = 1.0 + 3.0 * u(gen);
    m.delta_m = 0.2 + u(gen);
    m.gamma_L = 0.05 + 0.5 * u(gen);
    m.gamma_H = 0.05 + 0.5 * u(gen);
    const CollapseParams c = csl(0.1 * u(gen), 0.5 + 0.5 * u(gen), 1.0 + u(gen), 1,
                                 k % 2 ? MassRatioConvention::Inverted
                                       : MassRatioConvention::Normal);
    const auto grid = mc::linear_grid(10.0 / m.mean_gamma(), 80);
    CMatrix big = CMatrix::Zero(4, 4);
    big.topLeftCorner(2, 2) = m0_density(Basis::Flavor).matrix;
    const auto enlarged = mc::integrate_master(
        mc::enlarged_master_spec(m, c), mc::DensityMatrix(big, Basis::Enlarged), grid);
    const auto direct =
        mc::integrate_master(mc::decay_master_spec(m, c), m0_density(Basis::Flavor), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      min_eig = std::min(min_eig, mc::min_hermitian_eigenvalue(enlarged[i].matrix));
      trace_err = std::max(trace_err, std::abs(enlarged[i].trace().real() - 1.0));
      proj_err = std::max(proj_err,
                          (mc::project_enlarged_to_flavor(enlarged[i]).matrix -
                           direct[i].matrix).cwiseAbs().maxCoeff());
    }
  }
  out.detail << "min eigenvalue " << fmt(min_eig) << ", trace error " << fmt(trace_err)
             << ", projection error " << fmt(proj_err);
  out.require(min_eig >= -1e-9, "negative eigenvalue");
  out.require(trace_err <= 1e-9, "trace drift");
  out.require(proj_err <= 1e-9, "projection mismatch");
}

// Criterion 6.
void inverse_round_trips(Outcome& out) {
  std::mt19937_64 gen(6006);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double mass_err = 0.0;
  double lambda_err = 0.0;
  for (MassRatioConvention conv :
       {MassRatioConvention::Normal, MassRatioConvention::Inverted}) {
    for (int k = 0; k < 100; ++k) {
      MesonParams m;
      m.m_L = 0.5 + 10.0 * u(gen);
      m.delta_m = 0.05 + 2.0 * u(gen);
      const double lambda = 0.01 + u(gen);
      const double m0 = 0.5 + 2.0 * u(gen);
      const CollapseParams c = csl(lambda, 1.0, m0, 1 + k % 3, conv);
      const MesonParams w = mc::with_induced_widths(m, c);
      const mc::MassSolution s =
          mc::solve_absolute_masses(w.delta_gamma(), w.mean_gamma(), m.delta_m, conv);
      double best = INFINITY;
      for (const mc::MassRoot& r : s.positive_roots)
        best = std::min(best, std::abs(r.m_L - m.m_L) / m.m_L);
      mass_err = std::max(mass_err, best);
      const double bound = mc::collapse_rate_lower_bound(w, m0, conv);
      lambda_err = std::max(lambda_err, std::abs(bound - lambda) / lambda);
    }
  }
  out.detail << "max relative error m_L " << fmt(mass_err) << ", lambda_eff "
             << fmt(lambda_err);
  out.require(mass_err <= 1e-9, "mass round trip");
  out.require(lambda_err <= 1e-9, "lambda round trip");
}

// Criterion 7.
void degenerations(Outcome& out) {
  std::mt19937_64 gen(7007);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double trace_err = 0.0;
  double width = 0.0;
  double cos_err = 0.0;
  double subst_err = 0.0;
  for (int k = 0; k < 10; ++k) {
    MesonParams m;
    m.m_L = 0.5 + 4.0 * u(gen);
    m.delta_m = 0.1 + 2.0 * u(gen);
    const auto conv = k % 2 ? MassRatioConvention::Inverted : MassRatioConvention::Normal;
    const int d = 1 + k % 3;

    const CollapseParams half = csl(0.2 * u(gen), 0.5, 0.5 + u(gen), d, conv);
    const mc::DecayWidths w = mc::induced_decay_widths(m, half);
    width = std::max({width, std::abs(w.gamma_L), std::abs(w.gamma_H)});
    for (const auto& rho : mc::integrate_master(mc::family_master_spec(m, half),
                                                m0_density(Basis::Flavor),
                                                mc::linear_grid(30.0 / m.delta_m, 50)))
      trace_err = std::max(trace_err, std::abs(rho.trace().real() - 1.0));

    const CollapseParams off = csl(0.0, 0.5 + 0.5 * u(gen), 0.5 + u(gen), d, conv);
    const CollapseParams c = csl(0.2 * u(gen), 0.5 + 0.5 * u(gen), 0.5 + u(gen), d, conv);
    const MesonParams q = mc::with_induced_widths(m, c);
    for (double t : mc::linear_grid(30.0 / m.delta_m, 60)) {
      const double expected = std::pow(std::cos(0.5 * m.delta_m * t), 2);
      cos_err = std::max(
          cos_err, std::abs(mc::prob_flavor_csl(m, off, FlavorState::Particle, t) - expected));
      for (Eigenstate i : {Eigenstate::L, Eigenstate::H})
        for (Eigenstate j : {Eigenstate::L, Eigenstate::H})
          subst_err = std::max(subst_err, std::abs(mc::prob_lifetime_qm(q, i, j, t) -
                                                   mc::prob_lifetime_csl(m, c, i, j, t)));
    }
  }
  out.detail << "beta=1/2 trace error " << fmt(trace_err) << ", widths " << fmt(width)
             << "; lambda=0 cos^2 error " << fmt(cos_err) << "; substitution error "
             << fmt(subst_err);
  out.require(trace_err <= 1e-10, "trace not conserved");
  out.require(width == 0.0, "induced widths nonzero");
  out.require(cos_err <= 1e-12, "no cos^2 limit");
  out.require(subst_err <= 1e-12, "substitution mismatch");
}

// Criterion 8.
void bound_curves(Outcome& out) {
  const std::string catalog = MIXCOLLAPSE_DATA_DIR "/meson_catalog.json";
  const mc::cli::RunSpec spec =
      mc::cli::load_config(MIXCOLLAPSE_DATA_DIR "/configs/fig_bounds.json", catalog);
  const mc::cli::Table t = mc::cli::cmd_bounds(spec).table;
  struct Curve {
    std::string label;
    std::string conv;
    std::vector<double> x, y;
  };
  std::vector<Curve> curves;
  std::vector<std::pair<std::string, double>> refs;
  for (const auto& row : t.rows) {
    const std::string label = std::get<std::string>(row[0]);
    const std::string conv = std::get<std::string>(row[1]);
    const double m0 = std::get<double>(row[2]);
    const double lam = std::get<double>(row[3]);
    if (conv == "reference") {
      refs.emplace_back(label, lam);
      continue;
    }
    if (curves.empty() || curves.back().label != label || curves.back().conv != conv)
      curves.push_back({label, conv, {}, {}});
    curves.back().x.push_back(std::log(m0));
    curves.back().y.push_back(std::log(lam));
  }
  double worst = 0.0;
  for (const Curve& c : curves) {
    const double expected = c.conv == "normal" ? 2.0 : -2.0;
    // Least-squares slope over the whole grid, plus every local slope.
    const std::size_t n = c.x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += c.x[i] / n;
      my += c.y[i] / n;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sxy += (c.x[i] - mx) * (c.y[i] - my);
      sxx += (c.x[i] - mx) * (c.x[i] - mx);
    }
    worst = std::max(worst, std::abs(sxy / sxx - expected));
    for (std::size_t i = 1; i < n; ++i)
      worst = std::max(worst, std::abs((c.y[i] - c.y[i - 1]) / (c.x[i] - c.x[i - 1]) -
                                       expected));
  }
  const auto has_ref = [&](double v) {
    std::size_t hits = 0;
    for (const auto& [label, lam] : refs)
      if (lam == v) ++hits;
    return hits == 2;
  };
  out.detail << curves.size() << " curves, max slope error " << fmt(worst) << ", "
             << refs.size() << " reference rows";
  out.require(curves.size() == 2 * spec.mesons.size(), "missing curve blocks");
  out.require(worst <= 1e-6, "slope off by more than 1e-6");
  for (double v : {1e-16, 1e-10, 1e-8, 1e-6})
    out.require(has_ref(v), "reference line " + fmt(v) + " missing");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Criterion 9.
void cli_determinism(Outcome& out) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "mixcollapse_acceptance";
  fs::create_directories(dir);
  const fs::path cfg = dir / "ensemble.json";
  std::ofstream(cfg) << R"({"command":"ensemble","m_L":3,"delta_m":1,"gamma_L":0.2,)"
                        R"("gamma_H":0.1,"rate":0.1,"beta":0.8,"t_max":5,"n_points":26,)"
                        R"("n_trajectories":200,"seed":2024,"dt":0.005})";
  std::vector<std::string> outputs;
  bool ran = true;
  for (const char* threads : {"1", "1", "4", "16"}) {
    const fs::path file = dir / (std::string("out_") + threads + ".csv");
    const std::string cmd = std::string("\"") + MIXCOLLAPSE_CLI_PATH + "\" \"" +
                            cfg.string() + "\" --threads " + threads + " -o \"" +
                            file.string() + "\" 2>/dev/null";
    ran = ran && std::system(cmd.c_str()) == 0;
    outputs.push_back(slurp(file));
  }
  fs::remove_all(dir);
  bool same = !outputs[0].empty();
  for (const std::string& o : outputs) same = same && o == outputs[0];
  out.detail << "2 runs at --threads 1, then 4 and 16: "
             << (same ? "identical bytes" : "outputs differ");
  out.require(ran, "CLI exited nonzero");
  out.require(same, "bytes differ");
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
    double max_seconds;
  };
  const std::vector<Entry> entries = {
      {1, "triple-route agreement", triple_route, 10.0},
      {2, "Monte Carlo closure", monte_carlo_closure, 120.0},
      {3, "partial-trace quadrature oracle", quadrature_oracle, 5.0},
      {4, "formalism equivalence", formalism_equivalence, 60.0},
      {5, "enlarged-space consistency", enlarged_consistency, 5.0},
      {6, "inverse round trips", inverse_round_trips, 1.0},
      {7, "degeneration limits", degenerations, INFINITY},
      {8, "bound curve structure", bound_curves, INFINITY},
      {9, "ensemble output determinism", cli_determinism, INFINITY},
  };
  int failures = 0;
  for (const Entry& e : entries) {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      e.run(out);
    } catch (const std::exception& ex) {
      out.require(false, std::string("exception: ") + ex.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > e.max_seconds) out.require(false, "runtime over " + fmt(e.max_seconds) + " s");
    if (!out.pass) ++failures;
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", out.pass ? "PASS" : "FAIL", e.id,
                e.name, out.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
