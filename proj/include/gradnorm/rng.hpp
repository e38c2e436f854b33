// Copyright 2026 The gradnorm-ood Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace gradnorm {

// xoshiro256** seeded by expanding a 64-bit seed with splitmix64. Every
// derived draw below is defined by a fixed formula so the stream can be
// reproduced in any language:
//   uniform()  = (next() >> 11) * 2^-53                      in [0, 1)
//   normal()   = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)          (Box-Muller, one
//                                                             output per pair)
//   below(n)   = floor(uniform() * n)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next() noexcept;

  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() noexcept;
  std::size_t below(std::size_t n) noexcept;

 private:
  std::array<std::uint64_t, 4> state_{};
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

}  // namespace gradnorm
