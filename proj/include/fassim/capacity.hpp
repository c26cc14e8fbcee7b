// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#pragma once

#include <span>
#include <string>
#include <vector>

#include "fassim/rxchain.hpp"
#include "fassim/txchain.hpp"

namespace fassim {

/// Gauss-Hermite nodes and weights for the weight exp(-x^2), from the
/// Golub-Welsch eigenproblem.
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussHermite& gauss_hermite(int order);

/// BICM capacity of one RE, y = x + n with n ~ CN(0, 1/snr).
double bicm_capacity_point(double snr_linear, Modulation m, int order = 16);
/// ln(Qm - capacity), evaluated without forming the difference so that it
/// stays finite and strictly decreasing at high SNR.
double bicm_ln_deficit_point(double snr_linear, Modulation m, int order = 16);

double shannon_capacity(double gamma_bar);

/// Sampled capacity curve on a uniform dB grid. Interpolation is linear in
/// ln(deficit) versus dB, which is strictly monotone, and extrapolates
/// linearly past either end.
class CapacityTable {
 public:
  static constexpr double kMinDb = -20.0;
  static constexpr double kMaxDb = 30.0;
  static constexpr double kStepDb = 0.25;

  CapacityTable() = default;
  /// Computes the table by quadrature.
  static CapacityTable build(Modulation m, int order = 16);
  /// Process-wide table, loaded from the on-disk cache when the cache key
  /// matches, else built (and written back when the cache is writable).
  static const CapacityTable& get(Modulation m);

  Modulation modulation() const { return modulation_; }
  int order() const { return order_; }
  int qm() const { return bits_per_symbol(modulation_); }
  const std::vector<double>& snr_db() const { return snr_db_; }
  const std::vector<double>& capacity() const { return capacity_; }
  const std::vector<double>& ln_deficit() const { return ln_deficit_; }

  double ln_deficit_at(double snr_linear) const;
  double capacity_at(double snr_linear) const;
  /// Linear SNR whose ln deficit equals the argument.
  double invert_ln_deficit(double ln_deficit) const;
  /// Linear SNR with the given capacity. Values outside (0, Qm) saturate
  /// to the table ends and set *saturated.
  double invert(double bits, bool* saturated = nullptr) const;

  std::string key() const;
  std::string serialize() const;
  static CapacityTable parse(const std::string& text);
  void write(const std::string& path) const;

 private:
  Modulation modulation_ = Modulation::Qpsk;
  int order_ = 16;
  std::vector<double> snr_db_;
  std::vector<double> capacity_;
  std::vector<double> ln_deficit_;
};

/// Post-equalisation SNR of data RE i used by the grid capacity:
/// |beta w h|^2 / sigma~^2 with the grid-global sigma~^2.
double per_re_snr(const EqualizedGrid& eq, std::size_t i);

struct GridCapacity {
  double bits = 0.0;        // I(H)
  double ln_deficit = 0.0;  // ln(Qm - I(H))
};

/// Mean BICM capacity over the data REs of an equalised grid.
GridCapacity bicm_capacity_grid(const EqualizedGrid& eq, const CapacityTable& table);
/// Same average for an explicit list of per-RE SNRs.
GridCapacity bicm_capacity_mean(std::span<const double> snr_linear, const CapacityTable& table);

/// Gamma_eff = alpha * I^-1(I(H)), through the ln-deficit inverse.
double effective_snr(const GridCapacity& cap, double alpha, const CapacityTable& table);
double effective_snr(double bits, double alpha, const CapacityTable& table, bool* saturated = nullptr);

}  // namespace fassim
