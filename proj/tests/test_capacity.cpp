// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "fassim/capacity.hpp"
#include "fassim/channel.hpp"
#include "fassim/common.hpp"
#include "fassim/numerology.hpp"
#include "fassim/phy_frame.hpp"
#include "fassim/rng.hpp"
#include "fassim/rxchain.hpp"
#include "oracles.hpp"

using namespace fassim;

TEST_CASE("Gauss-Hermite rule integrates polynomials exactly") {
  const GaussHermite& gh = gauss_hermite(16);
  REQUIRE(gh.nodes.size() == 16);
  double m0 = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
  for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
    const double x = gh.nodes[i];
    m0 += gh.weights[i];
    m2 += gh.weights[i] * x * x;
    m4 += gh.weights[i] * x * x * x * x;
  }
  CHECK(m0 == doctest::Approx(std::sqrt(kPi)).epsilon(1e-12));
  CHECK(m2 == doctest::Approx(std::sqrt(kPi) / 2).epsilon(1e-12));
  CHECK(m4 == doctest::Approx(3 * std::sqrt(kPi) / 4).epsilon(1e-12));
}

TEST_CASE("capacity limits") {
  for (Modulation m : {Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64}) {
    CHECK(bicm_capacity_point(db_to_linear(40.0), m) == doctest::Approx(bits_per_symbol(m)).epsilon(1e-3 / 6));
    CHECK(bicm_capacity_point(db_to_linear(-40.0), m) < 1e-3);
  }
}

TEST_CASE("QPSK capacity against Monte Carlo") {
  const Constellation& c = constellation(Modulation::Qpsk);
  for (double db : {-5.0, 0.0, 5.0}) {
    const double snr = db_to_linear(db);
    CHECK(std::fabs(bicm_capacity_point(snr, Modulation::Qpsk) - oracle::bicm_capacity_mc(snr, c, 200000, 17)) < 6e-3);
  }
}

TEST_CASE("16QAM capacity against Monte Carlo") {
  const Constellation& c = constellation(Modulation::Qam16);
  const double snr = db_to_linear(8.0);
  CHECK(std::fabs(bicm_capacity_point(snr, Modulation::Qam16) - oracle::bicm_capacity_mc(snr, c, 100000, 3)) < 1e-2);
}

TEST_CASE("QPSK capacity equals two BPSK channels") {
  for (double db = -20.0; db <= 30.0; db += 2.5) {
    const double snr = db_to_linear(db);
    CHECK(std::fabs(bicm_capacity_point(snr, Modulation::Qpsk) - oracle::qpsk_capacity_bpsk(snr)) < 2e-3);
  }
}

TEST_CASE("BICM capacity stays below Shannon and rises with SNR") {
  for (Modulation m : {Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64}) {
    const CapacityTable& t = CapacityTable::get(m);
    for (std::size_t i = 0; i < t.snr_db().size(); ++i) {
      const double snr = db_to_linear(t.snr_db()[i]);
      CHECK(t.capacity()[i] <= shannon_capacity(snr) + 1e-9);
      if (i > 0) {
        CHECK(t.capacity()[i] >= t.capacity()[i - 1]);
        CHECK(t.ln_deficit()[i] < t.ln_deficit()[i - 1]);
      }
    }
  }
}

TEST_CASE("table grid and endpoints") {
  const CapacityTable& q = CapacityTable::get(Modulation::Qpsk);
  CHECK(q.snr_db().size() == 201);
  CHECK(q.snr_db().front() == -20.0);
  CHECK(q.snr_db().back() == 30.0);
  CHECK(q.capacity().front() < 0.02);
  CHECK(q.capacity().back() > 2.0 - 0.01);
}

TEST_CASE("Shannon capacity") {
  CHECK(shannon_capacity(1.0) == doctest::Approx(1.0));
  CHECK(shannon_capacity(3.0) == doctest::Approx(2.0));
  CHECK(shannon_capacity(10.0) == doctest::Approx(3.4594316186).epsilon(1e-9));
}

TEST_CASE("inverse undoes the forward map") {
  for (Modulation m : {Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64}) {
    const CapacityTable& t = CapacityTable::get(m);
    for (double db = -19.0; db <= 29.0; db += 0.7) {
      const double bits = t.capacity_at(db_to_linear(db));
      // away from the flat ends the capacity carries enough information to invert
      if (bits > 0.05 && bits < 0.95 * bits_per_symbol(m))
        CHECK(std::fabs(linear_to_db(t.invert(bits)) - db) < 0.05);
      CHECK(std::fabs(linear_to_db(t.invert_ln_deficit(t.ln_deficit_at(db_to_linear(db)))) - db) < 1e-6);
    }
    bool sat = false;
    t.invert(0.0, &sat);
    CHECK(sat);
    sat = false;
    t.invert(bits_per_symbol(m) + 0.1, &sat);
    CHECK(sat);
  }
}

TEST_CASE("effective SNR on constant grids and its alpha scaling") {
  const CapacityTable& t = CapacityTable::get(Modulation::Qam16);
  const std::vector<double> snr(50, db_to_linear(6.0));
  const GridCapacity cap = bicm_capacity_mean(snr, t);
  CHECK(linear_to_db(effective_snr(cap, 1.0, t)) == doctest::Approx(6.0).epsilon(1e-6));
  CHECK(effective_snr(cap, 2.0, t) == doctest::Approx(2.0 * effective_snr(cap, 1.0, t)));
}

TEST_CASE("grid capacity is the mean of point values and order-free") {
  const CapacityTable& t = CapacityTable::get(Modulation::Qpsk);
  const std::vector<double> snr = {0.3, 2.0, 7.5, 0.9};
  double want = 0.0;
  for (double s : snr) want += t.capacity_at(s) / 4.0;
  CHECK(bicm_capacity_mean(snr, t).bits == doctest::Approx(want).epsilon(1e-9));
  const std::vector<double> shuffled = {7.5, 0.9, 0.3, 2.0};
  CHECK(bicm_capacity_mean(shuffled, t).bits == doctest::Approx(bicm_capacity_mean(snr, t).bits).epsilon(1e-12));
  // half dead, half saturated
  const std::vector<double> split = {1e-8, 1e-8, 1e8, 1e8};
  CHECK(bicm_capacity_mean(split, t).bits == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("grid capacity of a flat equalised grid equals the point value") {
  const Numerology num = numerology_for_bandwidth(1.4);
  ChannelGrid h = unit_channel(num);
  h.set_snr_db(4.0);
  const EqualizedGrid eq = mmse_equalize(make_resource_grid(num), h, 0);
  const CapacityTable& t = CapacityTable::get(Modulation::Qpsk);
  CHECK(bicm_capacity_grid(eq, t).bits == doctest::Approx(t.capacity_at(db_to_linear(4.0))).epsilon(1e-9));
}

TEST_CASE("capacity table file round-trips and rejects tampering") {
  const CapacityTable t = CapacityTable::build(Modulation::Qpsk);
  const CapacityTable back = CapacityTable::parse(t.serialize());
  CHECK(back.key() == t.key());
  CHECK(back.capacity()[100] == doctest::Approx(t.capacity()[100]).epsilon(1e-15));
  std::string text = t.serialize();
  text[text.size() - 5] = text[text.size() - 5] == '1' ? '2' : '1';
  CHECK_THROWS_AS(CapacityTable::parse(text), Error);
}
