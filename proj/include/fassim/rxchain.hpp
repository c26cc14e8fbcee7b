// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fassim/channel.hpp"
#include "fassim/common.hpp"
#include "fassim/phy_frame.hpp"
#include "fassim/txchain.hpp"

namespace fassim {

enum class MetricKind { AverageSnr, Exponential, MutualInformation };

MetricKind metric_kind_from_string(const std::string& name);
std::string to_string(MetricKind kind);

/// Compressed-SNR port metric beta * Psi^-1(mean Psi(Gamma / beta)).
struct PortSelectionMetric {
  MetricKind kind = MetricKind::AverageSnr;
  double beta = 1.0;
  Modulation modulation = Modulation::Qpsk;  // constellation behind Psi for the MI kind

  void validate() const;
};

/// One value per port from the full K x F x N grid with
/// Gamma_k[f,n] = Theta |h_k[f,n]|^2. The exponential kind is evaluated as a
/// log-sum-exp and the MI kind in the log capacity-deficit domain so that
/// neither saturates at high SNR.
std::vector<double> port_metric(const ChannelGrid& chan, const PortSelectionMetric& metric);

/// Argmax with ties going to the lowest index.
int select_port(std::span<const double> metrics);

/// Narrowband rule for flat grids: argmax_k |h_k| at (f, n) = (0, 0).
int select_port_narrowband(const ChannelGrid& chan);

/// MMSE-equalised data REs of one port, in grid data order.
struct EqualizedGrid {
  std::vector<cdouble> y_tilde;
  std::vector<cdouble> w;
  std::vector<double> gain;  // beta * w * h, real for MMSE weights
  std::vector<double> w_abs2;
  double beta = 0.0;
  double sigma_tilde2 = 0.0;
  double gamma_bar = 0.0;
  double noise_var = 0.0;
};

/// w = h* / (|h|^2 + sigma^2), beta = sqrt(NF / sum |w h|^2),
/// sigma~^2 = beta^2 sigma^2 / NF * sum |w|^2, Gamma = NF Theta / (beta^2 sum |w|^2),
/// with the sums over data REs.
EqualizedGrid mmse_equalize(const ResourceGrid& received, const ChannelGrid& chan, int port);

inline constexpr float kLlrClip = 64.0F;

/// Max-log LLRs against the unit-gain constellation with noise variance
/// sigma2; positive values favour bit 0. Clipped to +-64.
std::vector<float> demap_maxlog(std::span<const cdouble> y, double sigma2, const Constellation& c);

struct DecodeResult {
  Bits payload;
  bool crc_ok = false;
  int iterations = 0;  // largest over the code blocks
};

/// Descrambling, rate recovery, min-sum decoding of every code block and
/// CRC checks.
DecodeResult decode_transport(std::span<const float> llr, const SegmentPlan& plan, std::uint32_t c_init,
                              int max_iters = 20);

}  // namespace fassim
