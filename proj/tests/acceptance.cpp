// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset. `--known-deviation N` keeps a documented
// failure of criterion N from failing the exit status; it is still printed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "fassim/amc.hpp"
#include "fassim/capacity.hpp"
#include "fassim/channel.hpp"
#include "fassim/harness.hpp"
#include "fassim/phy_frame.hpp"
#include "fassim/rng.hpp"
#include "fassim/rxchain.hpp"
#include "fassim/spatial.hpp"
#include "fassim/txchain.hpp"
#include "oracles.hpp"

using namespace fassim;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int workers() { return static_cast<int>(std::max(1U, std::thread::hardware_concurrency())); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string shipped_lut() { return data_dir() + "/lut/awgn_lut.txt"; }

std::vector<CurvePoint> as_curve(const std::vector<BlerPoint>& pts) {
  std::vector<CurvePoint> out;
  for (const auto& p : pts) out.push_back({p.snr_db, p.blocks, p.block_errors});
  return out;
}

// 1: BLER-0.1 thresholds on AWGN
Outcome awgn_thresholds() {
  CampaignConfig c;
  c.scenario = Scenario::AwgnLut;
  c.channel = ChannelKind::Awgn;
  c.seed = 2026;
  c.workers = workers();
  c.lut_cqis = {1, 4, 7, 9, 12, 15};
  c.lut_build.blocks_per_point = 2000;
  c.lut_build.points = 6;
  const AmcLut lut = build_awgn_lut(c);
  const double want[] = {-7.84, -1.80, 3.93, 7.93, 13.38, 20.03};
  Outcome o{true, ""};
  for (std::size_t i = 0; i < c.lut_cqis.size(); ++i) {
    const int q = c.lut_cqis[i];
    const double got = lut.cqi[q].threshold_db;
    const bool ok = std::fabs(got - want[i]) <= 0.75;
    o.pass = o.pass && ok;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%sCQI%d %.2f (ref %.2f)%s", i ? ", " : "", q, got, want[i], ok ? "" : " OUT");
    o.detail += buf;
  }
  return o;
}

// 2: alpha calibration at desk scale
Outcome alpha_calibration() {
  CampaignConfig c;
  c.scenario = Scenario::CalibrateAmc;
  c.geometry = FasGeometry{8, 8, 1.0, 1.0};
  c.delay_spread_ns = 30.0;
  c.doppler_hz = 30.0;
  c.seed = 2026;
  c.workers = workers();
  c.lut = shipped_lut();
  c.calibration_cqis = {4, 9, 15};
  c.realizations = 500;
  c.blocks_per_realization = 50;
  const CalibrationResult r = calibrate_amc(c, AmcLut::load(c.lut));
  const double want[] = {1.00, 0.97, 0.92};
  Outcome o{true, ""};
  for (std::size_t i = 0; i < 3; ++i) {
    const int q = c.calibration_cqis[i];
    const double got = r.lut.cqi[q].alpha;
    const bool ok = std::fabs(got - want[i]) <= 0.2;
    o.pass = o.pass && ok;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%sCQI%d alpha %.3f (ref %.2f)%s", i ? ", " : "", q, got, want[i], ok ? "" : " OUT");
    o.detail += buf;
  }
  return o;
}

// 3: wideband selection on flat channels equals argmax |h_k|
Outcome flat_degeneracy() {
  const Numerology num = numerology_for_bandwidth(1.4);
  const EigenBasis b = eigen_decompose(build_correlation(FasGeometry{4, 4, 1.0, 1.0}));
  long mismatches = 0;
  const long n = 10000;
  for (long r = 0; r < n; ++r) {
    Rng rng(2026, {static_cast<std::uint64_t>(Stream::FlatChannel), static_cast<std::uint64_t>(r)});
    ChannelGrid h = flat_channel(b, num, rng);
    h.set_snr_db(-5.0 + static_cast<double>(r % 30));
    const int want = select_port_narrowband(h);
    for (MetricKind kind : {MetricKind::AverageSnr, MetricKind::Exponential, MetricKind::MutualInformation})
      for (Modulation m : {Modulation::Qpsk, Modulation::Qam64})
        if (select_port(port_metric(h, PortSelectionMetric{kind, 1.0, m})) != want) ++mismatches;
  }
  return {mismatches == 0, std::to_string(n) + " realizations x 6 metric variants, " + std::to_string(mismatches) +
                               " mismatches"};
}

// 4: empirical spatial covariance
Outcome covariance_recovery() {
  const FasGeometry g{4, 4, 1.0, 1.0};
  const CorrelationMatrix sigma = build_correlation(g);
  const EigenBasis b = eigen_decompose(sigma);
  const Numerology num = numerology_for_bandwidth(1.4);
  const TdlProfile p = load_tdl_profile("TDL-C", 30e-9);
  const FadingProcessConfig fcfg{30.0, 32, 2026};
  const int k = g.ports();
  const long n = 10000;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(k, k);
  for (long s = 0; s < n; ++s) {
    const TapGains taps = gen_tap_processes(p, fcfg, b, num.n_symb, num.symbol_period_s(), s);
    const ChannelGrid h = freq_response(taps, p, num);
    for (int a = 0; a < k; ++a)
      for (int c = 0; c < k; ++c) acc(a, c) += h.at(a, 0, 0) * std::conj(h.at(c, 0, 0));
  }
  acc /= static_cast<double>(n);
  double worst = 0.0;
  for (int a = 0; a < k; ++a)
    for (int c = 0; c < k; ++c) worst = std::max(worst, std::abs(acc(a, c) - sigma.entries(a, c)));
  return {worst <= 0.05, fmt("max entry error %.4f over 10^4 subframes", worst)};
}

// 5: time-domain and frequency-domain channel application
Outcome path_equivalence() {
  const Numerology num = numerology_for_bandwidth(5);
  const TdlProfile p = quantize_delays(load_tdl_profile("TDL-C", 100e-9), num.sample_rate_hz());
  const EigenBasis b = eigen_decompose(build_correlation(FasGeometry{2, 2, 1.0, 1.0}));
  const TapGains taps = gen_tap_processes(p, FadingProcessConfig{0.0, 32, 2026}, b, num.n_symb, num.symbol_period_s(), 0);
  const ChannelGrid h = freq_response(taps, p, num);
  Rng rng(2026, {static_cast<std::uint64_t>(Stream::Payload), 0});
  const Bits bits = rng.bits(static_cast<std::size_t>(num.data_res()) * 2);
  const ResourceGrid g = map_to_grid(map_symbols(bits, constellation(Modulation::Qpsk)), num);
  double worst = 0.0;
  for (int port = 0; port < 4; ++port) {
    const ResourceGrid y =
        ofdm_demodulate(apply_channel_time(ofdm_modulate(g, num), taps, port, p, num, 0.0, nullptr), num);
    for (int n = 0; n < num.n_symb; ++n)
      for (int f = 0; f < num.subcarriers(); ++f)
        worst = std::max(worst, std::abs(y.at(f, n) - h.at(port, f, n) * g.at(f, n)));
  }
  const bool cp_ok = p.max_delay_s() < num.cp_length(1) / num.sample_rate_hz();
  return {worst <= 1e-9 && cp_ok, fmt("max symbol error %.3e", worst) + (cp_ok ? "" : " (CP shorter than delay)")};
}

// 6: noiseless end-to-end coding loop
Outcome coding_soundness() {
  long blocks = 0;
  long failures = 0;
  long parity_fail = 0;
  for (int mcs : {0, 7, 16, 27})
    for (int prb : {6, 25}) {
      const McsEntry& m = mcs_entry(mcs);
      const int n_re = prb * kDataRePerPrb;
      const int tbs = compute_tbs(m, prb);
      const SegmentPlan plan = plan_transport(tbs, m.rate(), n_re, m.qm());
      const LdpcCode code(plan.bg, plan.z);
      const Constellation& c = constellation(m.modulation);
      for (std::uint64_t t = 0; t < 10; ++t) {
        Rng rng(2026, {static_cast<std::uint64_t>(Stream::Payload), static_cast<std::uint64_t>(mcs * 100 + prb), t});
        const Bits payload = rng.bits(static_cast<std::size_t>(tbs));
        const std::uint32_t c_init = default_c_init(2026, t);
        const CodedTransportBlock tb = encode_transport(payload, plan, c_init, c);
        for (const auto& cw : tb.codewords)
          if (!code.check(cw)) ++parity_fail;
        const DecodeResult r = decode_transport(demap_maxlog(tb.symbols, 1e-4, c), plan, c_init);
        if (!r.crc_ok || r.payload != payload) ++failures;
        ++blocks;
      }
    }
  return {failures == 0 && parity_fail == 0, std::to_string(blocks) + " blocks over MCS {0,7,16,27} x N_PRB {6,25}, " +
                                                 std::to_string(failures) + " decode failures, " +
                                                 std::to_string(parity_fail) + " parity violations"};
}

CampaignConfig fig2_point(int k, double w) {
  CampaignConfig c;
  c.geometry = FasGeometry{k, k, w, w};
  c.mcs = 7;
  c.bandwidth_mhz = 5.0;
  c.delay_spread_ns = 30.0;
  c.doppler_hz = 30.0;
  c.seed = 2026;  // paired across every curve
  c.workers = workers();
  c.sweep = SnrSweep{-10.0, 30.0, 1.0, 0.1};
  c.stopping = StoppingRule{100, 100, 10000};
  return c;
}

std::vector<BlerPoint> fpa_w1;

// 7: more ports need less SNR
Outcome gain_ordering() {
  double snr[3];
  const int ks[] = {1, 2, 4};
  for (int i = 0; i < 3; ++i) {
    const auto pts = run_campaign(fig2_point(ks[i], 1.0)).points;
    if (ks[i] == 1) fpa_w1 = pts;
    snr[i] = fit_threshold(as_curve(pts), 0.1);
  }
  const bool ok = snr[2] < snr[1] && snr[1] < snr[0] && snr[0] - snr[2] >= 5.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "SNR@BLER0.1: FPA %.2f, 2x2 %.2f, 4x4 %.2f dB; FPA-4x4 gap %.2f dB", snr[0], snr[1],
                snr[2], snr[0] - snr[2]);
  return {ok, buf};
}

// 8: FPA curves do not depend on the aperture
Outcome fpa_invariance() {
  if (fpa_w1.empty()) fpa_w1 = run_campaign(fig2_point(1, 1.0)).points;
  const auto w5 = run_campaign(fig2_point(1, 5.0)).points;
  if (w5.size() != fpa_w1.size()) return {false, "curves have different lengths"};
  double worst = 0.0;  // largest |difference| in standard errors
  for (std::size_t i = 0; i < w5.size(); ++i) {
    const auto& a = fpa_w1[i];
    const auto& b = w5[i];
    const double p = static_cast<double>(a.block_errors + b.block_errors) / static_cast<double>(a.blocks + b.blocks);
    const double se = std::sqrt(p * (1 - p) * (1.0 / a.blocks + 1.0 / b.blocks));
    const double d = std::fabs(a.bler - b.bler);
    worst = std::max(worst, se > 0 ? d / se : (d > 0 ? 1e9 : 0.0));
  }
  return {worst <= 2.0, std::to_string(w5.size()) + " points, worst gap " + fmt("%.3f standard errors", worst)};
}

// 9: throughput at 10 dB. The anchors come from per-CQI curves read at
// BLER 0.1; the per-block adaptive figure is reported alongside.
Outcome throughput_anchors() {
  auto base = [](FasGeometry g) {
    CampaignConfig c;
    c.scenario = Scenario::Throughput;
    c.geometry = g;
    c.bandwidth_mhz = 5.0;
    c.seed = 2026;
    c.workers = workers();
    c.lut = shipped_lut();
    return c;
  };
  auto target = [&](FasGeometry g) {
    CampaignConfig c = base(g);
    c.throughput_method = ThroughputMethod::BlerTarget;
    c.sweep = SnrSweep{-10.0, 40.0, 1.0, 0.1};
    c.stopping = StoppingRule{100, 100, 2000};
    return throughput_at(run_throughput(c).points, 10.0);
  };
  auto adaptive = [&](FasGeometry g) {
    CampaignConfig c = base(g);
    c.sweep = SnrSweep{10.0, 10.0, 1.0, 0.0};
    c.stopping = StoppingRule{2000, 1000000, 2000};
    return run_throughput(c).points.at(0).throughput_bps;
  };
  const FasGeometry fpa_g{1, 1, 1.0, 1.0};
  const FasGeometry fas_g{8, 8, 0.2, 0.2};
  const double fpa = target(fpa_g);
  const double fas = target(fas_g);
  const double fpa_ad = adaptive(fpa_g);
  const double fas_ad = adaptive(fas_g);
  const bool ok = std::fabs(fpa - 3.62e6) <= 0.15 * 3.62e6 && fas >= 2.0 * fpa;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "FPA %.3f Mbit/s (ref 3.62); FAS 8x8 W=0.2 %.3f Mbit/s, ratio %.2f; per-block adaptive: FPA %.3f, FAS "
                "%.3f Mbit/s",
                fpa / 1e6, fas / 1e6, fas / fpa, fpa_ad / 1e6, fas_ad / 1e6);
  return {ok, buf};
}

// 10: link-budget identity and overheads
Outcome link_budget_identity() {
  double worst = 0.0;
  for (double bw : {1.4, 5.0, 10.0, 20.0}) {
    const Numerology num = numerology_for_bandwidth(bw);
    for (const auto& m : load_mcs_table()) {
      const LinkBudget lb = link_budget(compute_tbs(m, num.n_prb), num, num.data_res(), m.qm());
      const double rhs = lb.e_bicm * (1 - lb.eps_rs) * (1 - lb.eps_cp) * (1 - lb.eps_gb);
      worst = std::max(worst, std::fabs(lb.spectral_efficiency - rhs));
    }
  }
  const LinkBudget lb5 = link_budget(3968, numerology_for_bandwidth(5), 3900, 2);
  const bool rs = lb5.eps_rs == 1.0 - 156.0 / 168.0;
  const bool gb = std::fabs(lb5.eps_gb - 0.1) <= 1e-15;
  return {worst <= 1e-9 && rs && gb, fmt("identity residual %.2e", worst) + fmt(", eps_RS %.8f", lb5.eps_rs) +
                                         fmt(", eps_GB %.15f", lb5.eps_gb)};
}

// 11: capacity against independent estimators
Outcome capacity_oracles() {
  double mc_worst = 0.0;
  for (double db : {-5.0, 0.0, 5.0, 10.0}) {
    const double snr = db_to_linear(db);
    const double mc = oracle::bicm_capacity_mc(snr, constellation(Modulation::Qpsk), 1000000,
                                               static_cast<std::uint64_t>(db + 100));
    mc_worst = std::max(mc_worst, std::fabs(bicm_capacity_point(snr, Modulation::Qpsk) - mc));
  }
  double bpsk_worst = 0.0;
  for (double db = CapacityTable::kMinDb; db <= CapacityTable::kMaxDb; db += CapacityTable::kStepDb) {
    const double snr = db_to_linear(db);
    bpsk_worst = std::max(bpsk_worst, std::fabs(bicm_capacity_point(snr, Modulation::Qpsk) - oracle::qpsk_capacity_bpsk(snr)));
  }
  return {mc_worst <= 3e-3 && bpsk_worst <= 2e-3,
          fmt("Monte-Carlo max gap %.2e bits", mc_worst) + fmt(", BPSK oracle max gap %.2e bits", bpsk_worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"AWGN LUT thresholds", awgn_thresholds},
      {"alpha calibration", alpha_calibration},
      {"flat-fading degeneracy", flat_degeneracy},
      {"covariance recovery", covariance_recovery},
      {"path equivalence", path_equivalence},
      {"coding-chain soundness", coding_soundness},
      {"FAS gain ordering", gain_ordering},
      {"FPA invariance", fpa_invariance},
      {"throughput anchors", throughput_anchors},
      {"link-budget identity", link_budget_identity},
      {"capacity oracles", capacity_oracles},
  };
  std::set<int> only;
  std::set<int> known;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--known-deviation" && i + 1 < argc)
      known.insert(std::atoi(argv[++i]));
    else
      only.insert(std::atoi(argv[i]));
  }

  int failed = 0;
  int deviations = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %-24s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++(known.count(id) ? deviations : failed);
  }
  std::printf("summary: %d unexpected failure(s), %d documented deviation(s)\n", failed, deviations);
  return failed == 0 ? 0 : 1;
}
