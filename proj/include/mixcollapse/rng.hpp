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

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace mixcollapse {

/// Philox4x32-10 (Salmon et al., SC'11). A pure function of key and counter,
/// so any draw can be reproduced without replaying the ones before it.
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)} {}

  Block operator()(Block ctr) const {
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
             static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  std::array<std::uint32_t, 2> key_;
};

/// Standard normals for one (trajectory, channel) pair, indexed by step.
/// Each Philox block yields two uniforms and, through Box-Muller, the
/// normals for steps 2k and 2k+1.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t trajectory,
               std::uint32_t channel)
      : gen_(seed),
        traj_lo_(static_cast<std::uint32_t>(trajectory)),
        traj_hi_(static_cast<std::uint32_t>(trajectory >> 32)),
        channel_(channel) {}

  /// Normal number `step` of this stream; sequential calls reuse the cached
  /// partner of each pair.
  double at(std::uint64_t step) {
    const std::uint64_t pair = step >> 1;
    if (pair != cached_pair_) fill(pair);
    return cache_[step & 1u];
  }

 private:
  void fill(std::uint64_t pair) {
    const Philox4x32::Block r =
        gen_({static_cast<std::uint32_t>(pair), traj_lo_, traj_hi_,
              channel_ ^ (static_cast<std::uint32_t>(pair >> 32) << 16)});
    const double u1 = to_unit(r[0], r[1]);
    const double u2 = to_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cache_ = {radius * std::cos(angle), radius * std::sin(angle)};
    cached_pair_ = pair;
  }

  // 53 random bits mapped into the open interval (0, 1).
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits =
        ((std::uint64_t{hi} << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  Philox4x32 gen_;
  std::uint32_t traj_lo_;
  std::uint32_t traj_hi_;
  std::uint32_t channel_;
  std::uint64_t cached_pair_ = ~std::uint64_t{0};
  std::array<double, 2> cache_{};
};

}  // namespace mixcollapse
