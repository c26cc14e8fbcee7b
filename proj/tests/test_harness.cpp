// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#include <atomic>
#include <cmath>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "fassim/harness.hpp"
#include "json.hpp"

using namespace fassim;

namespace {

CampaignConfig quick(ChannelKind kind = ChannelKind::Flat) {
  CampaignConfig c;
  c.channel = kind;
  c.bandwidth_mhz = 1.4;
  c.geometry = FasGeometry{2, 2, 1.0, 1.0};
  c.sweep = SnrSweep{0.0, 4.0, 2.0, 0.0};
  c.stopping = StoppingRule{100, 20, 150};
  return c;
}

const char* kIni = R"(schema_version = 1
name = t
scenario = bler
seed = 5

[geometry]
k1 = 4
k2 = 2
w1 = 2
w2 = 0.5

[numerology]
bandwidth_mhz = 10

[channel]
kind = tdl
delay_spread_ns = 100
doppler_hz = 300
path = time

[link]
mode = mcs
mcs = 16
metric = mutual_information
metric_beta = 1.5
throughput_method = bler_target

[sweep]
start_db = -2
stop_db = 3
step_db = 0.5

[stopping]
min_blocks = 200
min_block_errors = 50
max_blocks = 4000

[lut]
cqis = 1-3, 9

[calibration]
cqis = 4,9,15
)";


}  // namespace

TEST_CASE("config parsing") {
  const CampaignConfig c = parse_config(kIni);
  CHECK(c.seed == 5);
  CHECK(c.geometry.k1 == 4);
  CHECK(c.geometry.w2 == 0.5);
  CHECK(c.bandwidth_mhz == 10.0);
  CHECK(c.path == ChannelPath::Time);
  CHECK(c.mcs == 16);
  CHECK(c.metric == MetricKind::MutualInformation);
  CHECK(c.metric_beta == 1.5);
  CHECK(c.throughput_method == ThroughputMethod::BlerTarget);
  CHECK(c.sweep.points().size() == 11);
  CHECK(c.stopping.max_blocks == 4000);
  CHECK(c.lut_cqis == std::vector<int>{1, 2, 3, 9});
  CHECK(c.calibration_cqis == std::vector<int>{4, 9, 15});
  CHECK(c.mode_label() == "mcs16");
}

TEST_CASE("serialised config parses back to the same values") {
  const CampaignConfig c = parse_config(kIni);
  const std::string text = serialize_config(c);
  const CampaignConfig d = parse_config(text);
  CHECK(serialize_config(d) == text);
  CHECK(d.metric_beta == c.metric_beta);
  CHECK(d.lut_cqis == c.lut_cqis);
}

TEST_CASE("config errors") {
  auto kind_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;  // sentinel: no error
  };
  CHECK(kind_of("schema_version = 1\nfoo = 1\n") == ErrorKind::Configuration);
  CHECK(kind_of("schema_version = 1\n[geometry]\nk3 = 1\n") == ErrorKind::Configuration);
  CHECK(kind_of("schema_version = 1\n[bogus]\nx = 1\n") == ErrorKind::Configuration);
  CHECK(kind_of("schema_version = 2\n") == ErrorKind::Configuration);
  CHECK(kind_of("seed = 1\n") == ErrorKind::Configuration);  // missing version
  CHECK(kind_of("schema_version = 1\n[sweep]\nstep_db = 0\n") == ErrorKind::Configuration);
  CHECK(kind_of("schema_version = 1\n[stopping]\nmin_blocks = 50\n") == ErrorKind::Configuration);
  CHECK(kind_of("schema_version = 1\n[stopping]\nmin_blocks = 500\nmax_blocks = 400\n") == ErrorKind::Configuration);
  CHECK(kind_of("schema_version = 1\n[geometry]\nk1 = abc\n") == ErrorKind::Configuration);
  CHECK(kind_of("schema_version = 1\n[numerology]\nbandwidth_mhz = 3\n") == ErrorKind::Configuration);
  CHECK(kind_of("schema_version = 1\n[channel]\nkind = flat\npath = time\n") == ErrorKind::Configuration);
  CHECK(kind_of("schema_version = 1\nscenario = throughput\n") == ErrorKind::Configuration);  // no LUT
  CHECK(kind_of("schema_version = 1\n") == ErrorKind::Io);
}

TEST_CASE("stopping rule") {
  const StoppingRule r{100, 100, 1000};
  CHECK_FALSE(r.done(99, 200));
  CHECK(r.done(100, 100));
  CHECK_FALSE(r.done(500, 99));
  CHECK(r.done(1000, 0));
}

TEST_CASE("parallel_for covers every index and propagates errors") {
  std::vector<int> hits(1000, 0);
  parallel_for(1000, 4, [&](long i) { ++hits[i]; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(100, 3,
                               [](long i) {
                                 if (i == 37) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("campaign results do not depend on the worker count") {
  CampaignConfig c = quick(ChannelKind::Tdl);
  c.workers = 1;
  const auto a = run_campaign(c);
  c.workers = 3;
  const auto b = run_campaign(c);
  CHECK(points_csv(c, a.points) == points_csv(c, b.points));
}

TEST_CASE("identical runs give identical CSV") {
  const CampaignConfig c = quick();
  CHECK(points_csv(c, run_campaign(c).points) == points_csv(c, run_campaign(c).points));
}

TEST_CASE("noiseless limit has no block errors") {
  CampaignConfig c = quick();
  c.sweep = SnrSweep{30.0, 30.0, 1.0, 0.0};
  const auto r = run_campaign(c);
  REQUIRE(r.points.size() == 1);
  CHECK(r.points[0].blocks == 150);  // no errors, so the block cap ends the point
  CHECK(r.points[0].block_errors == 0);
  const LinkSimulator sim(c);
  CHECK(r.points[0].throughput_bps == doctest::Approx(sim.mcs_format(7).tbs / 1e-3));
}

TEST_CASE("stopping rule is honoured per point") {
  CampaignConfig c = quick();
  c.sweep = SnrSweep{-10.0, -10.0, 1.0, 0.0};  // every block fails
  const auto r = run_campaign(c);
  CHECK(r.points[0].blocks == 100);
  CHECK(r.points[0].block_errors == 100);
  CHECK(r.points[0].bler == 1.0);
}

TEST_CASE("sweep stops below the BLER floor") {
  CampaignConfig c = quick();
  c.sweep = SnrSweep{20.0, 30.0, 5.0, 0.01};
  CHECK(run_campaign(c).points.size() == 1);
}

TEST_CASE("BLER falls with SNR and with more ports") {
  CampaignConfig c = quick(ChannelKind::Tdl);
  c.sweep = SnrSweep{0.0, 6.0, 3.0, 0.0};
  c.stopping = StoppingRule{200, 1000000, 200};
  c.geometry = FasGeometry{1, 1, 1.0, 1.0};
  const auto fpa = run_campaign(c).points;
  c.geometry = FasGeometry{3, 3, 1.0, 1.0};
  const auto fas = run_campaign(c).points;
  for (std::size_t i = 0; i < fpa.size(); ++i) {
    CHECK(fas[i].block_errors <= fpa[i].block_errors);
    if (i > 0) CHECK(fpa[i].block_errors <= fpa[i - 1].block_errors);
  }
}

TEST_CASE("selected port is never worse than a fixed port") {
  CampaignConfig c = quick(ChannelKind::Tdl);
  c.sweep = SnrSweep{2.0, 2.0, 1.0, 0.0};
  c.stopping = StoppingRule{300, 1000000, 300};
  const auto sel = run_campaign(c).points[0];
  c.fixed_port = 0;
  const auto fixed = run_campaign(c).points[0];
  const double se = std::sqrt(fixed.bler * (1 - fixed.bler) / fixed.blocks + sel.bler * (1 - sel.bler) / sel.blocks);
  CHECK(sel.bler <= fixed.bler + 2 * se);
  CHECK(sel.mean_selected_port_metric >= fixed.mean_selected_port_metric);
}

TEST_CASE("time path runs and matches the frequency path without CP overrun") {
  CampaignConfig c = quick(ChannelKind::Tdl);
  c.doppler_hz = 0.0;
  c.sweep = SnrSweep{30.0, 30.0, 1.0, 0.0};
  c.path = ChannelPath::Time;
  const auto r = run_campaign(c);
  CHECK(r.points[0].block_errors == 0);
}

TEST_CASE("CSV columns and sidecar") {
  const CampaignConfig c = quick();
  std::vector<BlerPoint> pts(1);
  pts[0].snr_db = 1.5;
  pts[0].blocks = 100;
  pts[0].block_errors = 7;
  pts[0].bler = 0.07;
  const std::string csv = points_csv(c, pts);
  CHECK(csv.rfind("snr_db,blocks,block_errors,bler,throughput_bps,cqi_mode,k1,k2,w1,w2,ds_ns,fd_hz,bw_mhz,seed\n", 0) ==
        0);
  CHECK(csv.find("1.5000,100,7,0.07,0,mcs7,2,2,1,1,30,30,1.4,1\n") != std::string::npos);
  const auto j = nlohmann::json::parse(sidecar_json(c, "x.csv"));
  CHECK(j["schema_version"] == 1);
  CHECK(j["assets"].contains("ldpc/bg1.txt"));
  CHECK(j["assets"].contains("tables/tbs.txt"));
  CHECK(parse_config(j["config"].get<std::string>()).seed == c.seed);
}

TEST_CASE("figure presets") {
  const auto f2 = figure_preset("fig2");
  CHECK(f2.size() == 15);
  std::set<double> ws;
  for (const auto& c : f2) {
    ws.insert(c.geometry.w1);
    CHECK(c.mcs == 7);
    CHECK(c.geometry.k1 <= 8);
  }
  CHECK(ws == std::set<double>{0.2, 1.0, 5.0});
  std::set<double> bws;
  bool full = false;
  for (const auto& c : figure_preset("fig4")) {
    bws.insert(c.bandwidth_mhz);
    full = full || c.geometry.k1 == 20;
  }
  CHECK(bws == std::set<double>{1.4, 5.0, 10.0, 20.0});
  CHECK(full);
  std::set<double> fds;
  for (const auto& c : figure_preset("fig6")) fds.insert(c.doppler_hz);
  CHECK(fds == std::set<double>{0.0, 30.0, 100.0, 300.0, 1000.0});
  for (const auto& c : figure_preset("fig5")) CHECK(c.path == ChannelPath::Time);
  for (const auto& c : figure_preset("fig8")) {
    CHECK(c.scenario == Scenario::Throughput);
    CHECK(c.throughput_method == ThroughputMethod::BlerTarget);
  }
  CHECK_THROWS_AS(figure_preset("fig7"), Error);
}

TEST_CASE("transmission formats") {
  CampaignConfig c = quick();
  const LinkSimulator sim(c);
  CHECK(sim.mcs_format(7).tbs == compute_tbs(mcs_entry(7), 6));
  CHECK(sim.cqi_format(15).modulation == Modulation::Qam64);
  CHECK_THROWS_AS(sim.cqi_format(0), Error);
  CHECK_THROWS_AS(sim.mcs_format(30), Error);
}

TEST_CASE("throughput curve lookup") {
  std::vector<BlerPoint> pts(3);
  pts[0].snr_db = 0.0;
  pts[0].throughput_bps = 1e6;
  pts[1].snr_db = 4.0;
  pts[1].throughput_bps = 3e6;
  pts[2].snr_db = 2.0;  // rows need not be sorted
  pts[2].throughput_bps = 2.5e6;
  CHECK(throughput_at(pts, -1.0) == 0.0);
  CHECK(throughput_at(pts, 1.0) == doctest::Approx(1.75e6));
  CHECK(throughput_at(pts, 3.0) == doctest::Approx(2.75e6));
  CHECK(throughput_at(pts, 9.0) == 3e6);
  CHECK(throughput_at(std::vector<BlerPoint>{}, 1.0) == 0.0);
}

TEST_CASE("BLER-target throughput rows") {
  CampaignConfig c = quick(ChannelKind::Awgn);
  c.scenario = Scenario::Throughput;
  c.throughput_method = ThroughputMethod::BlerTarget;
  c.geometry = FasGeometry{1, 1, 1.0, 1.0};
  c.sweep = SnrSweep{-10.0, 0.0, 1.0, 0.0};
  c.stopping = StoppingRule{100, 30, 400};
  const auto r = run_throughput(c);
  // low CQIs only: the sweep ends at 0 dB
  REQUIRE(r.points.size() >= 3);
  CHECK(r.points.size() < 8);
  const LinkSimulator sim(c);
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const BlerPoint& p = r.points[i];
    CHECK(p.cqi == static_cast<int>(i) + 1);
    CHECK(p.throughput_bps == doctest::Approx(0.9 * sim.cqi_format(p.cqi).tbs / 1e-3));
    if (i > 0) CHECK(p.snr_db > r.points[i - 1].snr_db);
  }
  CHECK(points_csv(c, r.points).find(",cqi2,") != std::string::npos);
}
