// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fassim/common.hpp"
#include "fassim/numerology.hpp"
#include "fassim/spatial.hpp"

namespace fassim {

class Rng;

struct TdlTap {
  double delay_s = 0.0;
  double power = 0.0;  // linear, taps sum to one
};

struct TdlProfile {
  std::string name;
  double delay_spread_s = 0.0;
  std::vector<TdlTap> taps;

  double max_delay_s() const { return taps.empty() ? 0.0 : taps.back().delay_s; }
};

/// Parses a profile table: `profile <name>`, `taps <n>`, then rows of
/// `<normalized delay> <power dB>`. Delays are scaled by delay_spread_s,
/// sorted, and powers normalised to unit sum.
TdlProfile parse_tdl_profile(std::string_view text, double delay_spread_s);

/// Loads data/tdl/<name>.txt.
TdlProfile load_tdl_profile(const std::string& name, double delay_spread_s);

/// Same taps with every delay rounded to a multiple of 1/sample_rate_hz.
TdlProfile quantize_delays(const TdlProfile& profile, double sample_rate_hz);

struct FadingProcessConfig {
  double max_doppler_hz = 0.0;
  int num_oscillators = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-port, per-tap, per-symbol complex gains (K x P x N).
class TapGains {
 public:
  TapGains() = default;
  TapGains(int ports, int taps, int symbols)
      : ports_(ports), taps_(taps), symbols_(symbols),
        values_(static_cast<std::size_t>(ports) * taps * symbols) {}

  int ports() const { return ports_; }
  int taps() const { return taps_; }
  int symbols() const { return symbols_; }
  cdouble& at(int k, int p, int n) { return values_[(static_cast<std::size_t>(k) * taps_ + p) * symbols_ + n]; }
  const cdouble& at(int k, int p, int n) const {
    return values_[(static_cast<std::size_t>(k) * taps_ + p) * symbols_ + n];
  }

 private:
  int ports_ = 0;
  int taps_ = 0;
  int symbols_ = 0;
  std::vector<cdouble> values_;
};

/// Tap gains for one subframe. Each (eigen-mode, tap) pair gets an
/// independent unit-power sum-of-sinusoids Clarke process; the modes are
/// mixed into ports through the eigen-basis. The substream is keyed by
/// (cfg.seed, subframe).
TapGains gen_tap_processes(const TdlProfile& profile, const FadingProcessConfig& cfg, const EigenBasis& basis,
                           int symbols, double symbol_period_s, std::uint64_t subframe, double sigma_h = 1.0);

/// Frequency-domain channel of every port, K x F x N.
class ChannelGrid {
 public:
  ChannelGrid() = default;
  ChannelGrid(int ports, int subcarriers, int symbols)
      : ports_(ports), subcarriers_(subcarriers), symbols_(symbols),
        values_(static_cast<std::size_t>(ports) * subcarriers * symbols) {}

  int ports() const { return ports_; }
  int subcarriers() const { return subcarriers_; }
  int symbols() const { return symbols_; }

  cdouble& at(int k, int f, int n) { return values_[index(k, f, n)]; }
  const cdouble& at(int k, int f, int n) const { return values_[index(k, f, n)]; }
  /// Contiguous F values of port k at symbol n.
  const cdouble* row(int k, int n) const { return values_.data() + index(k, 0, n); }
  cdouble* row(int k, int n) { return values_.data() + index(k, 0, n); }

  /// Sets Theta = E_x / noise variance with E_x = 1.
  void set_snr_db(double snr_db);
  double theta() const { return theta_; }
  double noise_var() const { return noise_var_; }

  /// Set when the longest tap outlasts the cyclic prefix.
  bool cp_violation = false;

 private:
  std::size_t index(int k, int f, int n) const {
    return (static_cast<std::size_t>(k) * symbols_ + n) * subcarriers_ + f;
  }

  int ports_ = 0;
  int subcarriers_ = 0;
  int symbols_ = 0;
  std::vector<cdouble> values_;
  double theta_ = 1.0;
  double noise_var_ = 1.0;
};

/// h_k[f,n] = sum_p g_{k,p}[n] exp(-j 2 pi f_f tau_p).
ChannelGrid freq_response(const TapGains& taps, const TdlProfile& profile, const Numerology& num);

/// One correlated draw replicated over every (f, n).
ChannelGrid flat_channel(const EigenBasis& basis, const Numerology& num, Rng& rng, double sigma_h = 1.0);

/// AWGN reference: a single port with h = 1 everywhere.
ChannelGrid unit_channel(const Numerology& num);

struct ChannelDumpHeader {
  int ports = 0;
  int subcarriers = 0;
  int symbols = 0;
  double delta_f_hz = 0.0;
  double delay_spread_s = 0.0;
  double max_doppler_hz = 0.0;
  std::uint64_t seed = 0;
  double sigma_h2 = 1.0;
};

/// Binary dump: one ASCII header line with the eight header fields, then
/// little-endian complex64 values in (k, f, n) order.
void write_channel_dump(const std::string& path, const ChannelGrid& grid, const ChannelDumpHeader& header);
ChannelGrid read_channel_dump(const std::string& path, ChannelDumpHeader* header = nullptr);

}  // namespace fassim
