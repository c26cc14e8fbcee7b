// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "fassim/common.hpp"

namespace fassim {

/// Purposes for named substreams. Values are part of the reproducibility
/// contract: changing one changes every campaign output.
enum class Stream : std::uint64_t {
  Fading = 1,
  FlatChannel = 2,
  Payload = 3,
  Noise = 4,
  Scrambler = 5,
  Test = 99,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Mixes a seed and a path of integers into one 64-bit key. Distinct paths
/// give statistically independent substreams.
std::uint64_t substream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

class Rng {
 public:
  explicit Rng(std::uint64_t key) : engine_(splitmix64(key)) {}
  Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
      : engine_(substream_key(seed, path)) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return normal_(engine_); }
  std::uint64_t next() { return engine_(); }

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  cdouble cnormal(double variance = 1.0) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
  }

  Bits bits(std::size_t n) {
    Bits out(n);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i % 64 == 0) word = engine_();
      out[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace fassim
