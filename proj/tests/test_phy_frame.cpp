// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#include <cmath>

#include "doctest.h"
#include "fassim/channel.hpp"
#include "fassim/common.hpp"
#include "fassim/numerology.hpp"
#include "fassim/phy_frame.hpp"
#include "fassim/rng.hpp"
#include "fassim/spatial.hpp"

using namespace fassim;

TEST_CASE("numerology table") {
  const Numerology n5 = numerology_for_bandwidth(5);
  CHECK(n5.n_prb == 25);
  CHECK(n5.n_fft == 512);
  CHECK(n5.subcarriers() == 300);
  CHECK(n5.sample_rate_hz() == 7.68e6);
  CHECK(n5.cp_length(0) == 40);
  CHECK(n5.cp_length(1) == 36);
  CHECK(n5.cp_length(7) == 40);
  // 1 ms of samples
  for (double bw : {1.4, 5.0, 10.0, 20.0}) {
    const Numerology n = numerology_for_bandwidth(bw);
    CHECK(n.subframe_samples() == static_cast<int>(std::lround(n.sample_rate_hz() * 1e-3)));
  }
  CHECK(numerology_for_prb(100).n_fft == 2048);
  CHECK_THROWS_AS(numerology_for_bandwidth(3.0), Error);
}

TEST_CASE("every PRB carries 156 data REs") {
  for (double bw : {1.4, 5.0, 20.0}) {
    const Numerology num = numerology_for_bandwidth(bw);
    const ResourceGrid g = make_resource_grid(num);
    CHECK(g.data_count() == 156 * num.n_prb);
    for (int prb = 0; prb < num.n_prb; ++prb) {
      int count = 0;
      for (int n = 0; n < num.n_symb; ++n)
        for (int f = prb * 12; f < prb * 12 + 12; ++f) count += g.is_data(f, n) ? 1 : 0;
      CHECK(count == 156);
    }
  }
}

TEST_CASE("map and extract are inverse") {
  const Numerology num = numerology_for_bandwidth(1.4);
  Rng rng(3, {static_cast<std::uint64_t>(Stream::Test)});
  std::vector<cdouble> s(num.data_res());
  for (auto& x : s) x = rng.cnormal();
  const ResourceGrid g = map_to_grid(s, num);
  CHECK(extract_data(g) == s);
  CHECK_THROWS_AS(map_to_grid(std::vector<cdouble>(5), num), Error);
}

TEST_CASE("OFDM modulation is unitary and invertible") {
  const Numerology num = numerology_for_bandwidth(5);
  Rng rng(4, {static_cast<std::uint64_t>(Stream::Test)});
  std::vector<cdouble> s(num.data_res());
  for (auto& x : s) x = rng.cnormal();
  const ResourceGrid g = map_to_grid(s, num);
  const auto stream = ofdm_modulate(g, num);
  CHECK(static_cast<int>(stream.size()) == num.subframe_samples());
  // energy of one symbol's useful part equals its grid energy
  double grid_e = 0.0;
  for (int f = 0; f < g.subcarriers; ++f) grid_e += std::norm(g.at(f, 0));
  double time_e = 0.0;
  for (int i = num.cp_length(0); i < num.cp_length(0) + num.n_fft; ++i) time_e += std::norm(stream[i]);
  CHECK(time_e == doctest::Approx(grid_e).epsilon(1e-10));
  const ResourceGrid back = ofdm_demodulate(stream, num);
  double err = 0.0;
  for (std::size_t i = 0; i < g.values.size(); ++i) err = std::max(err, std::abs(back.values[i] - g.values[i]));
  CHECK(err < 1e-12);
  CHECK_THROWS_AS(ofdm_demodulate(std::vector<cdouble>(10), num), Error);
}

TEST_CASE("cyclic prefix copies the symbol tail") {
  const Numerology num = numerology_for_bandwidth(1.4);
  Rng rng(5, {static_cast<std::uint64_t>(Stream::Test)});
  std::vector<cdouble> s(num.data_res());
  for (auto& x : s) x = rng.cnormal();
  const auto stream = ofdm_modulate(map_to_grid(s, num), num);
  const int cp = num.cp_length(0);
  for (int i = 0; i < cp; ++i) CHECK(stream[i] == stream[i + num.n_fft]);
}

TEST_CASE("frequency-domain channel at high SNR is y = h x") {
  const Numerology num = numerology_for_bandwidth(1.4);
  const EigenBasis b = eigen_decompose(build_correlation(FasGeometry{2, 1, 1.0, 0.0}));
  Rng rng(6, {static_cast<std::uint64_t>(Stream::Test)});
  ChannelGrid h = flat_channel(b, num, rng);
  h.set_snr_db(200.0);
  std::vector<cdouble> s(num.data_res(), cdouble{1.0, -1.0});
  const ResourceGrid g = map_to_grid(s, num);
  const ResourceGrid y = apply_channel_freq(g, h, 1, rng);
  CHECK(std::abs(y.at(0, 0) - h.at(1, 0, 0) * g.at(0, 0)) < 1e-9);
}

TEST_CASE("frequency-domain noise has the configured variance") {
  const Numerology num = numerology_for_bandwidth(5);
  ChannelGrid h = unit_channel(num);
  h.set_snr_db(3.0);
  Rng rng(7, {static_cast<std::uint64_t>(Stream::Test)});
  const ResourceGrid zero = make_resource_grid(num);
  double acc = 0.0;
  int count = 0;
  for (int r = 0; r < 10; ++r) {
    const ResourceGrid y = apply_channel_freq(zero, h, 0, rng);
    for (const auto& v : y.values) acc += std::norm(v);
    count += static_cast<int>(y.values.size());
  }
  CHECK(acc / count == doctest::Approx(h.noise_var()).epsilon(0.02));
}

TEST_CASE("time and frequency paths agree inside the cyclic prefix") {
  const Numerology num = numerology_for_bandwidth(1.4);
  const TdlProfile p = quantize_delays(load_tdl_profile("TDL-C", 100e-9), num.sample_rate_hz());
  const EigenBasis b = eigen_decompose(build_correlation(FasGeometry{2, 2, 1.0, 1.0}));
  const TapGains taps = gen_tap_processes(p, FadingProcessConfig{0.0, 32, 8}, b, num.n_symb, num.symbol_period_s(), 0);
  const ChannelGrid h = freq_response(taps, p, num);
  Rng rng(8, {static_cast<std::uint64_t>(Stream::Test)});
  std::vector<cdouble> s(num.data_res());
  for (auto& x : s) x = rng.cnormal();
  const ResourceGrid g = map_to_grid(s, num);
  const ResourceGrid y = ofdm_demodulate(apply_channel_time(ofdm_modulate(g, num), taps, 3, p, num, 0.0, nullptr), num);
  double err = 0.0;
  for (int n = 0; n < num.n_symb; ++n)
    for (int f = 0; f < num.subcarriers(); ++f) err = std::max(err, std::abs(y.at(f, n) - h.at(3, f, n) * g.at(f, n)));
  CHECK(err < 1e-9);
}
