// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fassim/amc.hpp"
#include "fassim/channel.hpp"
#include "fassim/numerology.hpp"
#include "fassim/phy_frame.hpp"
#include "fassim/rxchain.hpp"
#include "fassim/spatial.hpp"
#include "fassim/txchain.hpp"

namespace fassim {

inline constexpr int kSchemaVersion = 1;

enum class Scenario { Bler, AwgnLut, CalibrateAmc, Throughput };
enum class ChannelKind { Tdl, Flat, Awgn };
enum class ChannelPath { Frequency, Time };
/// Static MCS, fixed CQI format (as used for the AWGN curves), or per-block
/// link adaptation.
enum class LinkMode { Mcs, Cqi, Amc };

Scenario scenario_from_string(const std::string& name);
std::string to_string(Scenario s);
ChannelKind channel_kind_from_string(const std::string& name);
std::string to_string(ChannelKind k);

struct StoppingRule {
  long min_blocks = 100;
  long min_block_errors = 100;
  long max_blocks = 10000;

  void validate() const;
  bool done(long blocks, long errors) const {
    return blocks >= min_blocks && (errors >= min_block_errors || blocks >= max_blocks);
  }
};

struct SnrSweep {
  double start_db = 0.0;
  double stop_db = 10.0;
  double step_db = 1.0;
  /// A sweep ends after the first point whose BLER falls below this value;
  /// zero keeps every point.
  double stop_bler = 0.0;

  void validate() const;
  std::vector<double> points() const;
};

/// adaptive: each block reports a CQI from its effective SNR and the MCS
/// follows it. bler_target: one fixed-CQI curve per CQI, each contributing
/// the point (SNR at BLER 0.1, 0.9 x TBS / 1 ms).
enum class ThroughputMethod { Adaptive, BlerTarget };

ThroughputMethod throughput_method_from_string(const std::string& name);
std::string to_string(ThroughputMethod m);

struct CampaignConfig {
  std::string name;
  Scenario scenario = Scenario::Bler;
  std::uint64_t seed = 1;
  std::string output;
  int workers = 1;

  FasGeometry geometry{1, 1, 1.0, 1.0};
  double bandwidth_mhz = 5.0;

  ChannelKind channel = ChannelKind::Tdl;
  std::string profile = "TDL-C";
  double delay_spread_ns = 30.0;
  double doppler_hz = 30.0;
  int oscillators = 32;
  ChannelPath path = ChannelPath::Frequency;

  LinkMode mode = LinkMode::Mcs;
  int mcs = 7;
  int cqi = 1;
  MetricKind metric = MetricKind::AverageSnr;
  double metric_beta = 1.0;
  std::optional<Modulation> metric_modulation;  // empty: the transmitted one
  int fixed_port = -1;                          // -1 selects per subframe
  int max_iterations = 20;
  std::string lut;  // LUT read by throughput and calibration
  CqiRule cqi_rule = CqiRule::LargestNotExceeding;
  ThroughputMethod throughput_method = ThroughputMethod::Adaptive;

  SnrSweep sweep;
  StoppingRule stopping;

  std::vector<int> lut_cqis;  // awgn-lut; empty means 1..15
  LutBuildConfig lut_build;

  std::vector<int> calibration_cqis;  // calibrate-amc; empty means 1..15
  int realizations = 500;
  long blocks_per_realization = 50;

  void validate() const;
  /// "mcs7", "cqi4" or "amc".
  std::string mode_label() const;
};

/// INI text: top-level keys plus [geometry], [numerology], [channel], [link],
/// [sweep], [stopping], [lut] and [calibration] sections. Unknown keys are
/// configuration errors.
CampaignConfig parse_config(const std::string& text);
CampaignConfig load_config(const std::string& path);
std::string serialize_config(const CampaignConfig& cfg);

struct BlerPoint {
  double snr_db = 0.0;
  long blocks = 0;
  long block_errors = 0;
  double bler = 0.0;
  double throughput_bps = 0.0;
  double mean_selected_port_metric = 0.0;  // linear
  int cqi = -1;  // set on bler_target throughput rows
};

/// Modulation, rate and transport-block plan of one transmission format.
struct LinkFormat {
  Modulation modulation = Modulation::Qpsk;
  int rate_x1024 = 0;
  int tbs = 0;
  SegmentPlan plan;
};

struct BlockResult {
  bool transmitted = false;
  bool error = false;
  int tbs = 0;
  int port = 0;
  double port_metric = 0.0;
  int cqi = -1;
  int mcs = -1;
};

/// One subframe of the link: channel synthesis, port selection, transmit
/// chain, channel application, receiver. Thread-safe once constructed.
class LinkSimulator {
 public:
  explicit LinkSimulator(const CampaignConfig& cfg, const AmcLut* lut = nullptr);

  const Numerology& numerology() const { return num_; }
  const CampaignConfig& config() const { return cfg_; }
  int ports() const { return cfg_.channel == ChannelKind::Awgn ? 1 : cfg_.geometry.ports(); }

  /// Channel grid of subframe `subframe` at SNR theta; taps are filled on
  /// the time path.
  ChannelGrid channel(std::uint64_t subframe, double snr_db, TapGains* taps = nullptr) const;
  /// Selected port and its metric under the configured metric kind.
  int select(const ChannelGrid& chan, Modulation transmitted, double* metric = nullptr) const;
  /// Post-equaliser statistics of a port before any data is sent.
  EqualizedGrid equalizer(const ChannelGrid& chan, int port) const;

  const LinkFormat& mcs_format(int mcs) const;
  const LinkFormat& cqi_format(int cqi) const;

  /// Sends one random transport block of `format` on `port`. `noise` drives
  /// the receiver noise, `payload_key` the payload and `subframe` the
  /// scrambler seed. Returns true on a block error.
  bool transmit(const ChannelGrid& chan, const TapGains* taps, int port, const LinkFormat& format, Rng& noise,
                std::uint64_t payload_key, std::uint64_t subframe) const;

  /// Full block of a campaign point under the configured link mode.
  BlockResult run_block(double snr_db, int snr_index, std::uint64_t block) const;

 private:
  CampaignConfig cfg_;
  const AmcLut* lut_;
  Numerology num_;
  TdlProfile profile_;
  EigenBasis basis_;
  FadingProcessConfig fading_;
  std::vector<CqiEntry> cqi_table_;
  std::vector<McsEntry> mcs_table_;
  std::map<int, LinkFormat> mcs_formats_;
  std::map<int, LinkFormat> cqi_formats_;
};

/// Runs `fn(i)` for i in [0, n) on `workers` threads.
void parallel_for(long n, int workers, const std::function<void(long)>& fn);

struct CampaignResult {
  CampaignConfig config;
  std::vector<BlerPoint> points;
};

/// BLER (or throughput, in AMC mode) versus SNR. Blocks are tallied in
/// index order and the tally stops at the stopping rule, so the result does
/// not depend on the worker count.
CampaignResult run_campaign(const CampaignConfig& cfg, const AmcLut* lut = nullptr);
/// Throughput versus SNR under cfg.throughput_method. Adaptive runs
/// run_campaign in AMC mode with the LUT named by the config; bler_target
/// returns one row per CQI that reaches BLER 0.1 inside the sweep.
CampaignResult run_throughput(const CampaignConfig& cfg);

/// Throughput at `snr_db` read off a throughput curve: linear between rows,
/// zero below the first and flat above the last.
double throughput_at(std::span<const BlerPoint> points, double snr_db);

/// AWGN waterfall and BLER-0.1 threshold per CQI, packed into a LUT with
/// unit alphas.
AmcLut build_awgn_lut(const CampaignConfig& cfg);

struct CalibrationRecord {
  int cqi = 0;
  int realization = 0;
  double theta_db = 0.0;    // SNR at which the raw effective SNR hits the threshold
  double raw_snr_db = 0.0;  // I^-1(I(H)) at theta
  long blocks = 0;
  long errors = 0;
  double target_snr_db = 0.0;  // AWGN SNR with the same BLER
};

struct CalibrationResult {
  AmcLut lut;
  std::vector<CalibrationRecord> records;
};

/// Per CQI: every realization is driven to raw Gamma_eff = threshold, its
/// BLER is measured with the channel held fixed and mapped to an
/// AWGN-equivalent SNR on the stored curve; alpha is the least-squares fit
/// in log10.
CalibrationResult calibrate_amc(const CampaignConfig& cfg, const AmcLut& lut);

std::string points_csv(const CampaignConfig& cfg, const std::vector<BlerPoint>& points);
std::string calibration_csv(const std::vector<CalibrationRecord>& records);
/// JSON metadata: resolved config, asset checksums and library version.
std::string sidecar_json(const CampaignConfig& cfg, const std::string& result_file);
void write_text_file(const std::string& path, const std::string& text);

/// Campaigns behind the paper's figures at desk scale.
std::vector<CampaignConfig> figure_preset(const std::string& name);

}  // namespace fassim
