// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#pragma once

namespace fassim {

/// Data resource elements per PRB per subframe; the remaining 12 of the
/// 168 REs are reserved for reference signals.
inline constexpr int kDataRePerPrb = 156;

struct Numerology {
  double delta_f_hz = 15000.0;
  int n_prb = 25;
  int n_sc_rb = 12;
  int n_symb = 14;
  int n_fft = 512;
  double bandwidth_hz = 5e6;

  int subcarriers() const { return n_prb * n_sc_rb; }
  int data_res() const { return kDataRePerPrb * n_prb; }
  double sample_rate_hz() const { return n_fft * delta_f_hz; }
  /// Normal CP length in samples; symbols 0 and 7 get the long prefix.
  int cp_length(int symbol) const;
  /// Samples of one subframe including every cyclic prefix.
  int subframe_samples() const;
  /// Total CP duration in a subframe.
  double cp_duration_s() const;
  /// Average OFDM symbol period including CP (1 ms / 14).
  double symbol_period_s() const { return 1e-3 / n_symb; }
  /// Baseband frequency of subcarrier f on a grid centred on DC.
  double subcarrier_hz(int f) const { return (f - subcarriers() / 2) * delta_f_hz; }
};

/// Looks up the bundled (bandwidth, N_PRB, N_fft) table.
Numerology numerology_for_bandwidth(double bandwidth_mhz);
Numerology numerology_for_prb(int n_prb);

}  // namespace fassim
