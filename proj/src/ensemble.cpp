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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "mixcollapse/rng.hpp"
#include "mixcollapse/sde.hpp"

namespace mixcollapse {

namespace {

constexpr std::size_t kBlockSize = 64;
constexpr std::size_t kObservables = std::size(kObservableNames);

// Running (count, mean, M2) over a flattened [time][value] table.
struct Moments {
  std::size_t count = 0;
  std::vector<double> mean;
  std::vector<double> m2;

  explicit Moments(std::size_t width = 0) : mean(width, 0.0), m2(width, 0.0) {}

  void add(const std::vector<double>& x) {
    ++count;
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double delta = x[k] - mean[k];
      mean[k] += delta * inv;
      m2[k] += delta * (x[k] - mean[k]);
    }
  }
};

// Chan et al. pairwise update.
Moments merge(Moments a, const Moments& b) {
  if (a.count == 0) return b;
  if (b.count == 0) return a;
  const double na = static_cast<double>(a.count);
  const double nb = static_cast<double>(b.count);
  const double n = na + nb;
  for (std::size_t k = 0; k < a.mean.size(); ++k) {
    const double delta = b.mean[k] - a.mean[k];
    a.mean[k] += delta * (nb / n);
    a.m2[k] += b.m2[k] + delta * delta * (na * nb / n);
  }
  a.count += b.count;
  return a;
}

// Binary-counter tree: equal-height partial sums merge as soon as they meet,
// so the reduction tree depends only on the number of blocks.
class PairwiseReducer {
 public:
  void push(Moments m) {
    std::size_t level = 0;
    while (!stack_.empty() && stack_.back().first == level) {
      m = merge(std::move(stack_.back().second), m);
      stack_.pop_back();
      ++level;
    }
    stack_.emplace_back(level, std::move(m));
  }

  Moments finish() {
    Moments total;
    while (!stack_.empty()) {
      total = merge(std::move(stack_.back().second), total);
      stack_.pop_back();
    }
    return total;
  }

 private:
  std::vector<std::pair<std::size_t, Moments>> stack_;
};

struct Interval {
  std::size_t n_steps;
  double h;
};

std::vector<Interval> plan_steps(const std::vector<double>& grid, double dt) {
  std::vector<Interval> plan;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double span = grid[k] - grid[k - 1];
    const double ratio = span / dt;
    const double nearest = std::round(ratio);
    const double steps = std::abs(ratio - nearest) <= 1e-9 * nearest
                             ? nearest
                             : std::ceil(ratio);
    const auto n = static_cast<std::size_t>(std::max(1.0, steps));
    plan.push_back({n, span / static_cast<double>(n)});
  }
  return plan;
}

class TrajectoryRunner {
 public:
  TrajectoryRunner(const SdeSpec& spec, const NoiseConfig& config,
                   const QuantumState& initial,
                   const std::vector<double>& grid, Scheme scheme)
      : spec_(spec),
        config_(config),
        psi0_(initial.amplitudes),
        plan_(plan_steps(grid, config.dt)),
        scheme_(scheme),
        n_(spec.dimension()),
        channels_(spec.n_channels()) {
    if (spec.is_linear()) {
      itoh_ = coefficients_for_theta(spec, psi0_, 0.0);
      if (scheme == Scheme::Heun)
        heun_ = coefficients_for_theta(spec, psi0_, 0.5);
      CMatrix exponent = itoh_->drift;
      for (const CMatrix& g : itoh_->diffusion) exponent -= 0.5 * (g * g);
      bool diagonal = exponent.isDiagonal(0.0);
      for (const CMatrix& g : itoh_->diffusion)
        diagonal = diagonal && g.isDiagonal(0.0);
      if (scheme == Scheme::Exponential && diagonal) {
        rate_ = exponent.diagonal();
        for (const CMatrix& g : itoh_->diffusion)
          noise_diag_.push_back(g.diagonal());
        fast_ = true;
      }
    } else if (scheme == Scheme::Heun) {
      throw Error(ErrorKind::UnsupportedEquation,
                  "Heun stepping needs a linear equation");
    }
    const Eigen::Index meson = 2;
    const CMatrix u = flavor_mass_basis_change();
    to_flavor_ = spec.basis == Basis::Mass ? u : CMatrix::Identity(meson, meson);
    to_mass_ = spec.basis == Basis::Mass ? CMatrix::Identity(meson, meson)
                                         : CMatrix(u.adjoint());
  }

  std::size_t width_per_time() const {
    return static_cast<std::size_t>(2 * n_ * n_) + kObservables;
  }

  void run(std::uint64_t trajectory, std::vector<double>& out) {
    std::vector<NormalStream> streams;
    streams.reserve(channels_);
    for (std::size_t c = 0; c < channels_; ++c)
      streams.emplace_back(config_.seed, trajectory,
                           static_cast<std::uint32_t>(c));
    std::vector<double> dW(channels_);
    CVector psi = psi0_;
    CVector exponent = CVector::Zero(n_);
    std::uint64_t global_step = 0;
    record(psi, 0, out);
    for (std::size_t k = 0; k < plan_.size(); ++k) {
      const Interval& iv = plan_[k];
      const double root_h = std::sqrt(iv.h);
      for (std::size_t s = 0; s < iv.n_steps; ++s, ++global_step) {
        for (std::size_t c = 0; c < channels_; ++c)
          dW[c] = root_h * streams[c].at(global_step);
        if (fast_) {
          exponent += rate_ * iv.h;
          for (std::size_t c = 0; c < channels_; ++c)
            exponent += noise_diag_[c] * dW[c];
        } else {
          psi = advance(psi, dW, iv.h);
        }
      }
      if (fast_) psi = psi0_.cwiseProduct(exponent.array().exp().matrix());
      record(psi, k + 1, out);
    }
  }

 private:
  CVector advance(const CVector& psi, const std::vector<double>& dW,
                  double h) const {
    if (!spec_.is_linear()) {
      return scheme_ == Scheme::Euler ? step(spec_, psi, dW, h)
                                      : exponential_step(spec_, psi, dW, h);
    }
    const Coefficients& c = scheme_ == Scheme::Heun ? *heun_ : *itoh_;
    auto increment = [&](const CVector& x) {
      CVector out = c.drift * x * h;
      for (std::size_t i = 0; i < channels_; ++i)
        out += c.diffusion[i] * x * dW[i];
      return out;
    };
    switch (scheme_) {
      case Scheme::Euler: return psi + increment(psi);
      case Scheme::Heun: {
        const CVector first = increment(psi);
        return psi + 0.5 * (first + increment(psi + first));
      }
      case Scheme::Exponential: {
        CMatrix exponent = c.drift * h;
        for (std::size_t i = 0; i < channels_; ++i)
          exponent += c.diffusion[i] * dW[i] -
                      (0.5 * h) * (c.diffusion[i] * c.diffusion[i]);
        return small_expm(exponent) * psi;
      }
    }
    return psi;
  }

  void record(const CVector& psi, std::size_t time_index,
              std::vector<double>& out) const {
    double* row = out.data() + time_index * width_per_time();
    std::size_t k = 0;
    for (Eigen::Index c = 0; c < n_; ++c) {
      for (Eigen::Index r = 0; r < n_; ++r) {
        const Complex v = psi(r) * std::conj(psi(c));
        row[k++] = v.real();
        row[k++] = v.imag();
      }
    }
    const CVector meson = psi.head(2);
    const CVector flavor = to_flavor_ * meson;
    const CVector mass = to_mass_ * meson;
    row[k++] = std::norm(flavor(0));
    row[k++] = std::norm(flavor(1));
    row[k++] = std::norm(mass(0));
    row[k++] = std::norm(mass(1));
  }

  const SdeSpec& spec_;
  NoiseConfig config_;
  CVector psi0_;
  std::vector<Interval> plan_;
  Scheme scheme_;
  Eigen::Index n_;
  std::size_t channels_;
  std::optional<Coefficients> itoh_;
  std::optional<Coefficients> heun_;
  bool fast_ = false;
  CVector rate_;
  std::vector<CVector> noise_diag_;
  CMatrix to_flavor_;
  CMatrix to_mass_;
};

}  // namespace

EnsembleStats ensemble_evolve(const SdeSpec& spec, const NoiseConfig& config,
                              const QuantumState& initial,
                              const std::vector<double>& t_grid,
                              std::size_t n_trajectories,
                              const EnsembleOptions& options) {
  spec.validate();
  config.validate();
  if (config.n_channels != spec.n_channels())
    throw Error(ErrorKind::DimensionMismatch,
                "noise config channels != spec noise operators");
  if (initial.amplitudes.size() != spec.dimension())
    throw Error(ErrorKind::DimensionMismatch, "initial state dimension");
  if ((initial.basis == Basis::Enlarged) != (spec.dimension() == 4) ||
      (spec.dimension() == 2 && initial.basis != spec.basis))
    throw Error(ErrorKind::DimensionMismatch,
                "initial state basis differs from the equation basis");
  if (n_trajectories < 2)
    throw Error(ErrorKind::InvalidParams, "need at least 2 trajectories");
  if (t_grid.size() < 2 || t_grid.front() != 0.0)
    throw Error(ErrorKind::InvalidParams, "time grid must start at 0");
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (!(t_grid[k] > t_grid[k - 1]))
      throw Error(ErrorKind::InvalidParams, "time grid must be increasing");

  const TrajectoryRunner prototype(spec, config, initial, t_grid,
                                   options.scheme);
  const std::size_t per_time = prototype.width_per_time();
  const std::size_t width = per_time * t_grid.size();
  const std::size_t n_blocks = (n_trajectories + kBlockSize - 1) / kBlockSize;

  std::atomic<std::size_t> next_block{0};
  std::atomic<bool> failed{false};
  std::mutex mutex;
  std::map<std::size_t, Moments> pending;
  std::size_t next_to_merge = 0;
  PairwiseReducer reducer;
  std::exception_ptr error;

  auto worker = [&] {
    try {
      TrajectoryRunner runner = prototype;
      std::vector<double> sample(width);
      while (!failed.load()) {
        const std::size_t b = next_block.fetch_add(1);
        if (b >= n_blocks) break;
        Moments block(width);
        const std::size_t first = b * kBlockSize;
        const std::size_t last = std::min(first + kBlockSize, n_trajectories);
        for (std::size_t t = first; t < last; ++t) {
          runner.run(t, sample);
          block.add(sample);
        }
        const std::lock_guard<std::mutex> lock(mutex);
        pending.emplace(b, std::move(block));
        for (auto it = pending.find(next_to_merge); it != pending.end();
             it = pending.find(next_to_merge)) {
          reducer.push(std::move(it->second));
          pending.erase(it);
          ++next_to_merge;
        }
      }
    } catch (...) {
      const std::lock_guard<std::mutex> lock(mutex);
      if (!error) error = std::current_exception();
      failed.store(true);
    }
  };

  const std::size_t n_threads =
      std::clamp<std::size_t>(options.threads, 1, n_blocks);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  const Moments total = reducer.finish();
  const double n = static_cast<double>(total.count);
  auto stderr_at = [&](std::size_t k) {
    return std::sqrt(total.m2[k] / (n - 1.0) / n);
  };

  EnsembleStats stats;
  stats.times = t_grid;
  stats.n_trajectories = total.count;
  stats.seed = config.seed;
  stats.observable_mean.assign(kObservables, std::vector<double>(t_grid.size()));
  stats.observable_stderr = stats.observable_mean;
  const Eigen::Index dim = spec.dimension();
  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    const std::size_t base = ti * per_time;
    CMatrix mean(dim, dim);
    RMatrix se_re(dim, dim);
    RMatrix se_im(dim, dim);
    std::size_t k = base;
    for (Eigen::Index c = 0; c < dim; ++c) {
      for (Eigen::Index r = 0; r < dim; ++r) {
        mean(r, c) = Complex(total.mean[k], total.mean[k + 1]);
        se_re(r, c) = stderr_at(k);
        se_im(r, c) = stderr_at(k + 1);
        k += 2;
      }
    }
    stats.mean.push_back(mean);
    stats.stderr_real.push_back(se_re);
    stats.stderr_imag.push_back(se_im);
    for (std::size_t o = 0; o < kObservables; ++o, ++k) {
      stats.observable_mean[o][ti] = total.mean[k];
      stats.observable_stderr[o][ti] = stderr_at(k);
    }
  }
  return stats;
}

}  // namespace mixcollapse
