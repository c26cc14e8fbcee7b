// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fassim/capacity.hpp"
#include "fassim/numerology.hpp"
#include "fassim/rxchain.hpp"
#include "fassim/txchain.hpp"

namespace fassim {

struct CqiEntry {
  int index = 0;
  std::optional<Modulation> modulation;  // empty for index 0
  int rate_x1024 = 0;
  double threshold_db = 0.0;  // BLER-0.1 SNR on AWGN
  double alpha = 1.0;

  double rate() const { return rate_x1024 / 1024.0; }
};

struct McsEntry {
  int index = 0;
  Modulation modulation = Modulation::Qpsk;
  int rate_x1024 = 0;

  int qm() const { return bits_per_symbol(modulation); }
  double rate() const { return rate_x1024 / 1024.0; }
};

std::vector<CqiEntry> load_cqi_table();
std::vector<McsEntry> load_mcs_table();
const McsEntry& mcs_entry(int index);

/// One (SNR, blocks, errors) tally on a waterfall curve.
struct CurvePoint {
  double snr_db = 0.0;
  long blocks = 0;
  long errors = 0;

  double bler() const { return blocks > 0 ? static_cast<double>(errors) / blocks : 0.0; }
};

/// CQI table with calibrated thresholds, alphas and the AWGN curves the
/// thresholds were fitted on.
struct AmcLut {
  std::vector<CqiEntry> cqi;                    // indices 0..15
  std::vector<std::vector<CurvePoint>> curves;  // per index, may be empty
  long blocks_per_point = 0;
  std::uint64_t seed = 0;
  int n_prb = 0;
  std::string created;

  std::string serialize() const;
  static AmcLut parse(const std::string& text);
  static AmcLut load(const std::string& path);
  void write(const std::string& path) const;
  /// AWGN SNR (dB) at which CQI `index` reaches `bler`, interpolated on its
  /// stored curve in log10(BLER), extrapolated from the end segments.
  double awgn_snr_for_bler(int index, double bler) const;
};

enum class CqiRule { LargestNotExceeding, Nearest };

/// CQI for a scalar effective SNR (dB): the largest index whose threshold
/// does not exceed it (0 below CQI 1), or the nearest threshold with
/// CqiRule::Nearest.
int report_cqi(double gamma_eff_db, const AmcLut& lut, CqiRule rule = CqiRule::LargestNotExceeding);

/// CQI for an equalised grid: each index j is tested with its own
/// Gamma_eff,j = alpha_j * I_j^-1(I_j(H)) against its threshold.
int report_cqi(const EqualizedGrid& eq, const AmcLut& lut, CqiRule rule = CqiRule::LargestNotExceeding);

/// Nearest-rate MCS with the CQI's modulation, ties to the lower rate;
/// empty for CQI 0 (no transmission).
std::optional<McsEntry> select_mcs(int cqi, const std::vector<CqiEntry>& cqi_table,
                                   const std::vector<McsEntry>& mcs_table);

/// Transport block size for one layer.
int compute_tbs(const McsEntry& mcs, int n_prb, int n_re_per_prb = kDataRePerPrb);
int compute_tbs(double rate, int qm, int n_re);

struct LinkBudget {
  int tbs = 0;
  int n_re = 0;
  int qm = 0;
  double code_rate = 0.0;
  double e_bicm = 0.0;
  double throughput_bps = 0.0;
  double spectral_efficiency = 0.0;
  double eps_rs = 0.0;
  double eps_cp = 0.0;
  double eps_gb = 0.0;
  double t_subframe_s = 1e-3;
  double t_cp_s = 0.0;
  double abw_hz = 0.0;
};

LinkBudget link_budget(int tbs, const Numerology& num, int n_re, int qm);

struct CalibrationSample {
  double raw_snr = 0.0;     // I^-1(I(H_i)), linear
  double target_snr = 0.0;  // AWGN-equivalent SNR, linear
};

/// Closed-form minimiser of sum |log10(alpha raw_i) - log10 target_i|^2.
double calibrate_alpha(std::span<const CalibrationSample> samples);

/// SNR where the curve crosses `target` BLER: linear interpolation in
/// log10(BLER) between the bracketing points with at least one error.
/// Returns NaN when no bracket exists. Raises a calibration error when the
/// curve rises by more than three standard errors between SNR steps.
double fit_threshold(std::span<const CurvePoint> curve, double target = 0.1);

/// Simulates `blocks` AWGN blocks of a CQI at one SNR; returns the errors.
using AwgnSimulator = std::function<long(int cqi, double snr_db, long blocks)>;

struct LutBuildConfig {
  long blocks_per_point = 2000;
  int points = 6;
  double spacing_db = 0.4;
  long probe_blocks = 200;
  double target_bler = 0.1;
};

/// Adaptive sweep per CQI: a coarse probe search locates the waterfall,
/// then `points` SNRs spaced `spacing_db` around it are simulated with
/// `blocks_per_point` blocks and fitted.
std::vector<CurvePoint> sweep_awgn_curve(int cqi, const CqiEntry& entry, const LutBuildConfig& cfg,
                                         const AwgnSimulator& sim);

}  // namespace fassim
