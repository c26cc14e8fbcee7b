// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#pragma once

#include <span>
#include <vector>

#include "fassim/channel.hpp"
#include "fassim/common.hpp"
#include "fassim/numerology.hpp"

namespace fassim {

class Rng;

/// Symbols stored symbol-major: index = n * F + f.
struct ResourceGrid {
  int subcarriers = 0;
  int symbols = 0;
  std::vector<cdouble> values;
  std::vector<std::uint8_t> data_mask;

  cdouble& at(int f, int n) { return values[static_cast<std::size_t>(n) * subcarriers + f]; }
  const cdouble& at(int f, int n) const { return values[static_cast<std::size_t>(n) * subcarriers + f]; }
  bool is_data(int f, int n) const { return data_mask[static_cast<std::size_t>(n) * subcarriers + f] != 0; }
  int data_count() const;
};

/// Empty grid with the reference-signal reservation pattern applied.
ResourceGrid make_resource_grid(const Numerology& num);

/// Frequency-first fill of the data REs; reserved REs stay zero.
ResourceGrid map_to_grid(std::span<const cdouble> symbols, const Numerology& num);
std::vector<cdouble> extract_data(const ResourceGrid& grid);

/// y = h_port * x + CN(0, noise_var) on every RE.
ResourceGrid apply_channel_freq(const ResourceGrid& grid, const ChannelGrid& chan, int port, Rng& rng);

/// Unitary IDFT per symbol with normal CP.
std::vector<cdouble> ofdm_modulate(const ResourceGrid& grid, const Numerology& num);
ResourceGrid ofdm_demodulate(std::span<const cdouble> stream, const Numerology& num);

/// Time-domain channel: each tap is applied at its delay rounded to the
/// sample grid, with the gains of the OFDM symbol that owns the output
/// sample. Adds CN(0, noise_var) per sample when rng is given.
std::vector<cdouble> apply_channel_time(std::span<const cdouble> stream, const TapGains& taps, int port,
                                        const TdlProfile& profile, const Numerology& num, double noise_var,
                                        Rng* rng);

}  // namespace fassim
