// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#include "fassim/channel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "fassim/rng.hpp"

namespace fassim {

TdlProfile parse_tdl_profile(std::string_view text, double delay_spread_s) {
  if (!(delay_spread_s > 0.0) || !std::isfinite(delay_spread_s))
    raise(ErrorKind::Configuration, "delay spread must be positive");
  TdlProfile profile;
  profile.delay_spread_s = delay_spread_s;
  std::istringstream in{std::string(text)};
  std::string line;
  int declared = -1;
  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "profile") {
      ls >> profile.name;
    } else if (first == "taps") {
      ls >> declared;
    } else {
      double delay = 0.0;
      double power_db = 0.0;
      try {
        delay = std::stod(first);
      } catch (const std::exception&) {
        raise(ErrorKind::Asset, "bad TDL row: " + line);
      }
      if (!(ls >> power_db)) raise(ErrorKind::Asset, "bad TDL row: " + line);
      rows.emplace_back(delay, power_db);
    }
  }
  if (rows.empty()) raise(ErrorKind::Asset, "TDL profile has no taps");
  if (declared >= 0 && declared != static_cast<int>(rows.size()))
    raise(ErrorKind::Asset, "TDL tap count does not match header");
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  if (rows.front().first != 0.0) raise(ErrorKind::Asset, "first TDL tap must have zero delay");

  double total = 0.0;
  for (const auto& [d, p] : rows) total += std::pow(10.0, p / 10.0);
  for (const auto& [d, p] : rows) profile.taps.push_back({d * delay_spread_s, std::pow(10.0, p / 10.0) / total});
  return profile;
}

TdlProfile load_tdl_profile(const std::string& name, double delay_spread_s) {
  const std::string path = data_dir() + "/tdl/" + name + ".txt";
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error&) {
    raise(ErrorKind::Configuration, "unknown TDL profile '" + name + "'");
  }
  TdlProfile p = parse_tdl_profile(text, delay_spread_s);
  if (p.name.empty()) p.name = name;
  return p;
}

TdlProfile quantize_delays(const TdlProfile& profile, double sample_rate_hz) {
  TdlProfile q = profile;
  for (auto& t : q.taps) t.delay_s = std::round(t.delay_s * sample_rate_hz) / sample_rate_hz;
  return q;
}

void FadingProcessConfig::validate() const {
  if (!(max_doppler_hz >= 0.0) || !std::isfinite(max_doppler_hz))
    raise(ErrorKind::Configuration, "maximum Doppler must be finite and non-negative");
  if (num_oscillators < 8 || num_oscillators % 2 != 0)
    raise(ErrorKind::Configuration, "oscillator count must be even and at least 8");
}

TapGains gen_tap_processes(const TdlProfile& profile, const FadingProcessConfig& cfg, const EigenBasis& basis,
                           int symbols, double symbol_period_s, std::uint64_t subframe, double sigma_h) {
  cfg.validate();
  if (symbols <= 0) raise(ErrorKind::Bounds, "need at least one symbol");
  const int k = basis.ports();
  const int p_count = static_cast<int>(profile.taps.size());
  const int modes = basis.rank();
  const int m_osc = cfg.num_oscillators;
  Rng rng(cfg.seed, {static_cast<std::uint64_t>(Stream::Fading), subframe});

  // Mode processes, one row per mode, columns (tap, symbol).
  Eigen::MatrixXcd a(modes, p_count * symbols);
  const double norm = 1.0 / std::sqrt(static_cast<double>(m_osc));
  std::vector<cdouble> acc(symbols);
  for (int l = 0; l < modes; ++l) {
    for (int p = 0; p < p_count; ++p) {
      std::fill(acc.begin(), acc.end(), cdouble{});
      const double offset = 2.0 * kPi * rng.uniform();
      for (int m = 0; m < m_osc; ++m) {
        const double arrival = (2.0 * kPi * m + offset) / m_osc;
        const double phase = 2.0 * kPi * rng.uniform();
        const double omega = 2.0 * kPi * cfg.max_doppler_hz * std::cos(arrival);
        const cdouble step = std::polar(1.0, omega * symbol_period_s);
        cdouble z = std::polar(norm, phase);
        for (int n = 0; n < symbols; ++n) {
          acc[n] += z;
          z *= step;
        }
      }
      for (int n = 0; n < symbols; ++n) a(l, p * symbols + n) = acc[n];
    }
  }

  Eigen::MatrixXd mix = basis.vectors.leftCols(modes);
  for (int l = 0; l < modes; ++l) mix.col(l) *= std::sqrt(basis.values(l));
  const Eigen::MatrixXcd g = mix.cast<cdouble>() * a;

  TapGains out(k, p_count, symbols);
  for (int kk = 0; kk < k; ++kk) {
    for (int p = 0; p < p_count; ++p) {
      const double amp = sigma_h * std::sqrt(profile.taps[p].power);
      for (int n = 0; n < symbols; ++n) out.at(kk, p, n) = amp * g(kk, p * symbols + n);
    }
  }
  return out;
}

void ChannelGrid::set_snr_db(double snr_db) {
  if (!std::isfinite(snr_db)) raise(ErrorKind::Domain, "SNR must be finite");
  theta_ = db_to_linear(snr_db);
  noise_var_ = 1.0 / theta_;
}

ChannelGrid freq_response(const TapGains& taps, const TdlProfile& profile, const Numerology& num) {
  const int k = taps.ports();
  const int p_count = taps.taps();
  const int n_sym = taps.symbols();
  const int f_count = num.subcarriers();
  if (p_count != static_cast<int>(profile.taps.size())) raise(ErrorKind::Bounds, "tap count mismatch");

  Eigen::MatrixXcd steer(p_count, f_count);
  for (int p = 0; p < p_count; ++p)
    for (int f = 0; f < f_count; ++f)
      steer(p, f) = std::polar(1.0, -2.0 * kPi * num.subcarrier_hz(f) * profile.taps[p].delay_s);

  ChannelGrid grid(k, f_count, n_sym);
  Eigen::MatrixXcd g(k, p_count);
  Eigen::MatrixXcd h(k, f_count);
  for (int n = 0; n < n_sym; ++n) {
    for (int kk = 0; kk < k; ++kk)
      for (int p = 0; p < p_count; ++p) g(kk, p) = taps.at(kk, p, n);
    h.noalias() = g * steer;
    for (int kk = 0; kk < k; ++kk) {
      cdouble* dst = grid.row(kk, n);
      for (int f = 0; f < f_count; ++f) dst[f] = h(kk, f);
    }
  }
  const double shortest_cp = num.cp_length(1) / num.sample_rate_hz();
  grid.cp_violation = profile.max_delay_s() > shortest_cp;
  return grid;
}

ChannelGrid flat_channel(const EigenBasis& basis, const Numerology& num, Rng& rng, double sigma_h) {
  const int k = basis.ports();
  std::vector<cdouble> iid(k);
  for (auto& z : iid) z = rng.cnormal();
  const std::vector<cdouble> h = synth_correlated(basis, sigma_h, iid);
  ChannelGrid grid(k, num.subcarriers(), num.n_symb);
  for (int kk = 0; kk < k; ++kk)
    for (int n = 0; n < num.n_symb; ++n) std::fill_n(grid.row(kk, n), num.subcarriers(), h[kk]);
  return grid;
}

ChannelGrid unit_channel(const Numerology& num) {
  ChannelGrid grid(1, num.subcarriers(), num.n_symb);
  for (int n = 0; n < num.n_symb; ++n) std::fill_n(grid.row(0, n), num.subcarriers(), cdouble{1.0, 0.0});
  return grid;
}

static_assert(std::endian::native == std::endian::little, "channel dumps assume a little-endian host");

void write_channel_dump(const std::string& path, const ChannelGrid& grid, const ChannelDumpHeader& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::Io, "cannot write " + path);
  char line[512];
  std::snprintf(line, sizeof line, "FASGRID %d %d %d %.17g %.17g %.17g %llu %.17g\n", grid.ports(),
                grid.subcarriers(), grid.symbols(), h.delta_f_hz, h.delay_spread_s, h.max_doppler_hz,
                static_cast<unsigned long long>(h.seed), h.sigma_h2);
  out << line;
  for (int k = 0; k < grid.ports(); ++k)
    for (int f = 0; f < grid.subcarriers(); ++f)
      for (int n = 0; n < grid.symbols(); ++n) {
        const cdouble v = grid.at(k, f, n);
        const float re = static_cast<float>(v.real());
        const float im = static_cast<float>(v.imag());
        out.write(reinterpret_cast<const char*>(&re), sizeof re);
        out.write(reinterpret_cast<const char*>(&im), sizeof im);
      }
  if (!out) raise(ErrorKind::Io, "short write to " + path);
}

ChannelGrid read_channel_dump(const std::string& path, ChannelDumpHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::Io, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::istringstream ls(line);
  std::string magic;
  ChannelDumpHeader h;
  unsigned long long seed = 0;
  ls >> magic >> h.ports >> h.subcarriers >> h.symbols >> h.delta_f_hz >> h.delay_spread_s >> h.max_doppler_hz >>
      seed >> h.sigma_h2;
  if (magic != "FASGRID" || !ls || h.ports <= 0 || h.subcarriers <= 0 || h.symbols <= 0)
    raise(ErrorKind::Framing, "bad channel dump header in " + path);
  h.seed = seed;
  ChannelGrid grid(h.ports, h.subcarriers, h.symbols);
  for (int k = 0; k < h.ports; ++k)
    for (int f = 0; f < h.subcarriers; ++f)
      for (int n = 0; n < h.symbols; ++n) {
        float re = 0.0F;
        float im = 0.0F;
        in.read(reinterpret_cast<char*>(&re), sizeof re);
        in.read(reinterpret_cast<char*>(&im), sizeof im);
        if (!in) raise(ErrorKind::Framing, "truncated channel dump " + path);
        grid.at(k, f, n) = {re, im};
      }
  if (header != nullptr) *header = h;
  return grid;
}

}  // namespace fassim
