// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#include "fassim/phy_frame.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include <fftw3.h>

#include "fassim/rng.hpp"

namespace fassim {

namespace {

// CP lengths of the 2048-point reference numerology.
constexpr int kRefFft = 2048;
constexpr int kRefLongCp = 160;
constexpr int kRefShortCp = 144;

struct TableRow {
  double bandwidth_mhz;
  int n_prb;
  int n_fft;
};

std::vector<TableRow> load_numerology_table() {
  const std::string text = read_text_file(data_dir() + "/tables/numerology.txt");
  std::istringstream in(text);
  std::string line;
  std::vector<TableRow> rows;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    TableRow r{};
    if (!(ls >> r.bandwidth_mhz)) continue;
    if (!(ls >> r.n_prb >> r.n_fft)) raise(ErrorKind::Asset, "bad numerology row: " + line);
    rows.push_back(r);
  }
  if (rows.empty()) raise(ErrorKind::Asset, "empty numerology table");
  return rows;
}

const std::vector<TableRow>& numerology_table() {
  static const std::vector<TableRow> table = load_numerology_table();
  return table;
}

Numerology from_row(const TableRow& r) {
  Numerology num;
  num.n_prb = r.n_prb;
  num.n_fft = r.n_fft;
  num.bandwidth_hz = r.bandwidth_mhz * 1e6;
  return num;
}

// FFTW planning is not thread-safe; execution through the new-array
// interface is. Plans are cached per (size, direction).
fftw_plan get_plan(int n, int sign) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, fftw_plan> plans;
  std::lock_guard lock(mu);
  auto it = plans.find({n, sign});
  if (it != plans.end()) return it->second;
  std::vector<cdouble> a(n);
  std::vector<cdouble> b(n);
  fftw_plan p = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(a.data()), reinterpret_cast<fftw_complex*>(b.data()),
                                 sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (p == nullptr) raise(ErrorKind::Model, "FFT planning failed");
  plans.emplace(std::make_pair(n, sign), p);
  return p;
}

void dft(int n, int sign, const cdouble* in, cdouble* out) {
  fftw_execute_dft(get_plan(n, sign), reinterpret_cast<fftw_complex*>(const_cast<cdouble*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) out[i] *= s;
}

int fft_bin(int f, const Numerology& num) {
  const int offset = f - num.subcarriers() / 2;
  return ((offset % num.n_fft) + num.n_fft) % num.n_fft;
}

void check_dims(const ResourceGrid& grid, const Numerology& num) {
  if (grid.subcarriers != num.subcarriers() || grid.symbols != num.n_symb)
    raise(ErrorKind::Framing, "resource grid does not match numerology");
  if (num.subcarriers() > num.n_fft) raise(ErrorKind::Configuration, "more subcarriers than FFT bins");
}

}  // namespace

int Numerology::cp_length(int symbol) const {
  if (symbol < 0 || symbol >= n_symb) raise(ErrorKind::Bounds, "symbol index out of range");
  const int ref = (symbol % (n_symb / 2) == 0) ? kRefLongCp : kRefShortCp;
  return ref * n_fft / kRefFft;
}

int Numerology::subframe_samples() const {
  int total = 0;
  for (int n = 0; n < n_symb; ++n) total += n_fft + cp_length(n);
  return total;
}

double Numerology::cp_duration_s() const {
  int total = 0;
  for (int n = 0; n < n_symb; ++n) total += cp_length(n);
  return total / sample_rate_hz();
}

Numerology numerology_for_bandwidth(double bandwidth_mhz) {
  for (const auto& r : numerology_table())
    if (std::abs(r.bandwidth_mhz - bandwidth_mhz) < 1e-9) return from_row(r);
  std::ostringstream msg;
  msg << "no numerology for " << bandwidth_mhz << " MHz";
  raise(ErrorKind::Configuration, msg.str());
}

Numerology numerology_for_prb(int n_prb) {
  for (const auto& r : numerology_table())
    if (r.n_prb == n_prb) return from_row(r);
  raise(ErrorKind::Configuration, "no numerology with " + std::to_string(n_prb) + " PRBs");
}

int ResourceGrid::data_count() const {
  return static_cast<int>(std::count(data_mask.begin(), data_mask.end(), std::uint8_t{1}));
}

ResourceGrid make_resource_grid(const Numerology& num) {
  ResourceGrid g;
  g.subcarriers = num.subcarriers();
  g.symbols = num.n_symb;
  g.values.assign(static_cast<std::size_t>(g.subcarriers) * g.symbols, cdouble{});
  g.data_mask.assign(g.values.size(), 1);
  // Reference-signal placeholders: symbols 0/7 at subcarriers 0 mod 4 and
  // symbols 4/11 at 2 mod 4, i.e. 12 REs per PRB per subframe.
  for (int n = 0; n < g.symbols; ++n) {
    int offset = -1;
    if (n == 0 || n == 7) offset = 0;
    if (n == 4 || n == 11) offset = 2;
    if (offset < 0) continue;
    for (int f = offset; f < g.subcarriers; f += 4) g.data_mask[static_cast<std::size_t>(n) * g.subcarriers + f] = 0;
  }
  return g;
}

ResourceGrid map_to_grid(std::span<const cdouble> symbols, const Numerology& num) {
  ResourceGrid g = make_resource_grid(num);
  if (static_cast<int>(symbols.size()) != num.data_res())
    raise(ErrorKind::Framing, "symbol count " + std::to_string(symbols.size()) + " != data REs " +
                                  std::to_string(num.data_res()));
  std::size_t next = 0;
  for (std::size_t i = 0; i < g.values.size(); ++i)
    if (g.data_mask[i] != 0) g.values[i] = symbols[next++];
  return g;
}

std::vector<cdouble> extract_data(const ResourceGrid& grid) {
  std::vector<cdouble> out;
  out.reserve(grid.values.size());
  for (std::size_t i = 0; i < grid.values.size(); ++i)
    if (grid.data_mask[i] != 0) out.push_back(grid.values[i]);
  return out;
}

ResourceGrid apply_channel_freq(const ResourceGrid& grid, const ChannelGrid& chan, int port, Rng& rng) {
  if (port < 0 || port >= chan.ports()) raise(ErrorKind::Bounds, "port index out of range");
  if (chan.subcarriers() != grid.subcarriers || chan.symbols() != grid.symbols)
    raise(ErrorKind::Framing, "channel grid does not match resource grid");
  ResourceGrid out = grid;
  const double nv = chan.noise_var();
  for (int n = 0; n < grid.symbols; ++n) {
    const cdouble* h = chan.row(port, n);
    for (int f = 0; f < grid.subcarriers; ++f) {
      cdouble y = h[f] * grid.at(f, n);
      if (nv > 0.0) y += rng.cnormal(nv);
      out.at(f, n) = y;
    }
  }
  return out;
}

std::vector<cdouble> ofdm_modulate(const ResourceGrid& grid, const Numerology& num) {
  check_dims(grid, num);
  const int nfft = num.n_fft;
  std::vector<cdouble> stream;
  stream.reserve(num.subframe_samples());
  std::vector<cdouble> bins(nfft);
  std::vector<cdouble> time(nfft);
  for (int n = 0; n < num.n_symb; ++n) {
    std::fill(bins.begin(), bins.end(), cdouble{});
    for (int f = 0; f < grid.subcarriers; ++f) bins[fft_bin(f, num)] = grid.at(f, n);
    dft(nfft, FFTW_BACKWARD, bins.data(), time.data());
    const int cp = num.cp_length(n);
    stream.insert(stream.end(), time.end() - cp, time.end());
    stream.insert(stream.end(), time.begin(), time.end());
  }
  return stream;
}

ResourceGrid ofdm_demodulate(std::span<const cdouble> stream, const Numerology& num) {
  if (static_cast<int>(stream.size()) != num.subframe_samples())
    raise(ErrorKind::Framing, "sample stream length does not match one subframe");
  ResourceGrid grid = make_resource_grid(num);
  const int nfft = num.n_fft;
  std::vector<cdouble> bins(nfft);
  std::size_t pos = 0;
  for (int n = 0; n < num.n_symb; ++n) {
    pos += num.cp_length(n);
    dft(nfft, FFTW_FORWARD, stream.data() + pos, bins.data());
    pos += nfft;
    for (int f = 0; f < grid.subcarriers; ++f) grid.at(f, n) = bins[fft_bin(f, num)];
  }
  return grid;
}

std::vector<cdouble> apply_channel_time(std::span<const cdouble> stream, const TapGains& taps, int port,
                                        const TdlProfile& profile, const Numerology& num, double noise_var,
                                        Rng* rng) {
  if (static_cast<int>(stream.size()) != num.subframe_samples())
    raise(ErrorKind::Framing, "sample stream length does not match one subframe");
  if (port < 0 || port >= taps.ports()) raise(ErrorKind::Bounds, "port index out of range");
  if (taps.taps() != static_cast<int>(profile.taps.size()) || taps.symbols() != num.n_symb)
    raise(ErrorKind::Framing, "tap gains do not match profile or numerology");

  const double fs = num.sample_rate_hz();
  std::vector<int> lag(profile.taps.size());
  for (std::size_t p = 0; p < lag.size(); ++p) lag[p] = static_cast<int>(std::lround(profile.taps[p].delay_s * fs));

  // Owning symbol of every output sample.
  std::vector<int> owner(stream.size());
  std::size_t pos = 0;
  for (int n = 0; n < num.n_symb; ++n) {
    const int len = num.cp_length(n) + num.n_fft;
    std::fill_n(owner.begin() + static_cast<std::ptrdiff_t>(pos), len, n);
    pos += len;
  }

  std::vector<cdouble> out(stream.size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    cdouble acc{};
    const int n = owner[t];
    for (std::size_t p = 0; p < lag.size(); ++p) {
      if (t < static_cast<std::size_t>(lag[p])) continue;
      acc += taps.at(port, static_cast<int>(p), n) * stream[t - lag[p]];
    }
    if (rng != nullptr && noise_var > 0.0) acc += rng->cnormal(noise_var);
    out[t] = acc;
  }
  return out;
}

}  // namespace fassim
