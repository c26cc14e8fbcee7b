// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#include "fassim/amc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace fassim {

namespace {

std::vector<std::vector<std::string>> read_rows(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> fields;
    for (std::string f; ls >> f;) fields.push_back(f);
    if (!fields.empty()) rows.push_back(std::move(fields));
  }
  return rows;
}

int to_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  raise(ErrorKind::Asset, "bad " + what + ": '" + s + "'");
}

const std::vector<int>& tbs_table() {
  static const std::vector<int> table = [] {
    std::vector<int> v;
    for (const auto& row : read_rows(data_dir() + "/tables/tbs.txt"))
      for (const auto& f : row) v.push_back(to_int(f, "TBS entry"));
    if (v.empty() || !std::is_sorted(v.begin(), v.end())) raise(ErrorKind::Asset, "TBS table must be sorted");
    return v;
  }();
  return table;
}

}  // namespace

std::vector<CqiEntry> load_cqi_table() {
  std::vector<CqiEntry> out;
  for (const auto& row : read_rows(data_dir() + "/tables/cqi.txt")) {
    if (row.size() != 3) raise(ErrorKind::Asset, "CQI rows need three fields");
    CqiEntry e;
    e.index = to_int(row[0], "CQI index");
    if (row[1] != "none") e.modulation = modulation_from_string(row[1]);
    e.rate_x1024 = to_int(row[2], "CQI rate");
    if (e.index != static_cast<int>(out.size())) raise(ErrorKind::Asset, "CQI indices must be consecutive from 0");
    out.push_back(e);
  }
  if (out.size() != 16) raise(ErrorKind::Asset, "CQI table needs 16 rows");
  return out;
}

std::vector<McsEntry> load_mcs_table() {
  std::vector<McsEntry> out;
  for (const auto& row : read_rows(data_dir() + "/tables/mcs.txt")) {
    if (row.size() != 3) raise(ErrorKind::Asset, "MCS rows need three fields");
    McsEntry e;
    e.index = to_int(row[0], "MCS index");
    e.modulation = modulation_from_string(row[1]);
    e.rate_x1024 = to_int(row[2], "MCS rate");
    if (e.index != static_cast<int>(out.size())) raise(ErrorKind::Asset, "MCS indices must be consecutive from 0");
    out.push_back(e);
  }
  if (out.empty()) raise(ErrorKind::Asset, "empty MCS table");
  return out;
}

const McsEntry& mcs_entry(int index) {
  static const std::vector<McsEntry> table = load_mcs_table();
  if (index < 0 || index >= static_cast<int>(table.size())) raise(ErrorKind::Bounds, "MCS index out of range");
  return table[index];
}

// ---- LUT file ----

std::string AmcLut::serialize() const {
  std::ostringstream out;
  char line[256];
  out << "# AMC look-up table: AWGN BLER-0.1 thresholds and adjustment factors\n";
  out << "lut_version 1\n";
  out << "blocks_per_point " << blocks_per_point << "\n";
  out << "seed " << seed << "\n";
  out << "n_prb " << n_prb << "\n";
  out << "created " << (created.empty() ? "unknown" : created) << "\n";
  out << "# cqi index modulation rate_x1024 threshold_db alpha\n";
  for (const auto& e : cqi) {
    std::snprintf(line, sizeof line, "cqi %d %s %d %.4f %.4f\n", e.index,
                  e.modulation ? to_string(*e.modulation).c_str() : "none", e.rate_x1024, e.threshold_db, e.alpha);
    out << line;
  }
  out << "# curve index snr_db blocks errors\n";
  for (std::size_t i = 0; i < curves.size(); ++i)
    for (const auto& p : curves[i]) {
      std::snprintf(line, sizeof line, "curve %zu %.4f %ld %ld\n", i, p.snr_db, p.blocks, p.errors);
      out << line;
    }
  return out.str();
}

AmcLut AmcLut::parse(const std::string& text) {
  AmcLut lut;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "lut_version") {
      int v = 0;
      ls >> v;
      if (v != 1) raise(ErrorKind::Asset, "unsupported LUT version");
    } else if (tag == "blocks_per_point") {
      ls >> lut.blocks_per_point;
    } else if (tag == "seed") {
      ls >> lut.seed;
    } else if (tag == "n_prb") {
      ls >> lut.n_prb;
    } else if (tag == "created") {
      ls >> lut.created;
    } else if (tag == "cqi") {
      CqiEntry e;
      std::string mod;
      std::string thr;
      std::string alpha;
      ls >> e.index >> mod >> e.rate_x1024 >> thr >> alpha;
      if (!ls) raise(ErrorKind::Asset, "bad LUT row: " + line);
      // strtod, unlike stream extraction, reads the "nan" of rows never built.
      char* end = nullptr;
      e.threshold_db = std::strtod(thr.c_str(), &end);
      if (*end != '\0') raise(ErrorKind::Asset, "bad LUT threshold: " + line);
      e.alpha = std::strtod(alpha.c_str(), &end);
      if (*end != '\0') raise(ErrorKind::Asset, "bad LUT alpha: " + line);
      if (mod != "none") e.modulation = modulation_from_string(mod);
      if (e.index != static_cast<int>(lut.cqi.size())) raise(ErrorKind::Asset, "LUT CQI rows out of order");
      lut.cqi.push_back(e);
    } else if (tag == "curve") {
      std::size_t idx = 0;
      CurvePoint p;
      ls >> idx >> p.snr_db >> p.blocks >> p.errors;
      if (!ls || idx >= 16) raise(ErrorKind::Asset, "bad LUT curve row: " + line);
      if (lut.curves.size() <= idx) lut.curves.resize(idx + 1);
      lut.curves[idx].push_back(p);
    } else {
      raise(ErrorKind::Asset, "unknown LUT field '" + tag + "'");
    }
  }
  if (lut.cqi.size() != 16) raise(ErrorKind::Asset, "LUT needs 16 CQI rows");
  double last = -std::numeric_limits<double>::infinity();
  for (int i = 1; i < 16; ++i) {
    if (std::isnan(lut.cqi[i].threshold_db)) continue;  // not built
    if (!(lut.cqi[i].threshold_db > last))
      raise(ErrorKind::Calibration, "LUT thresholds must increase with the CQI index");
    last = lut.cqi[i].threshold_db;
  }
  lut.curves.resize(16);
  return lut;
}

AmcLut AmcLut::load(const std::string& path) { return parse(read_text_file(resolve_data_path(path))); }

void AmcLut::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::Io, "cannot write " + path);
  out << serialize();
  if (!out) raise(ErrorKind::Io, "short write to " + path);
}

double AmcLut::awgn_snr_for_bler(int index, double bler) const {
  if (index < 1 || index >= static_cast<int>(curves.size())) raise(ErrorKind::Bounds, "CQI index out of range");
  std::vector<CurvePoint> pts;
  for (const auto& p : curves[index])
    if (p.errors > 0 && p.blocks > 0) pts.push_back(p);
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.snr_db < b.snr_db; });
  if (pts.size() < 2) raise(ErrorKind::Calibration, "LUT curve of CQI " + std::to_string(index) + " is too short");
  const double target = std::log10(bler);
  auto segment = [&](std::size_t i) {
    const double y0 = std::log10(pts[i].bler());
    const double y1 = std::log10(pts[i + 1].bler());
    if (y1 == y0) return 0.5 * (pts[i].snr_db + pts[i + 1].snr_db);
    return pts[i].snr_db + (target - y0) * (pts[i + 1].snr_db - pts[i].snr_db) / (y1 - y0);
  };
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double y0 = std::log10(pts[i].bler());
    const double y1 = std::log10(pts[i + 1].bler());
    if ((y0 >= target && y1 <= target) || (y0 <= target && y1 >= target)) return segment(i);
  }
  // Outside the simulated range: extend the nearer end segment.
  if (target > std::log10(pts.front().bler())) return segment(0);
  return segment(pts.size() - 2);
}

// ---- reporting ----

int report_cqi(double gamma_eff_db, const AmcLut& lut, CqiRule rule) {
  if (std::isnan(gamma_eff_db)) raise(ErrorKind::Domain, "effective SNR is NaN");
  int best = 0;
  for (int i = 1; i < static_cast<int>(lut.cqi.size()); ++i)
    if (lut.cqi[i].threshold_db <= gamma_eff_db) best = i;
  if (rule == CqiRule::Nearest) {
    double dist = std::numeric_limits<double>::infinity();
    int nearest = 0;
    for (int i = 1; i < static_cast<int>(lut.cqi.size()); ++i) {
      const double d = std::abs(lut.cqi[i].threshold_db - gamma_eff_db);
      if (d < dist) {
        dist = d;
        nearest = i;
      }
    }
    // Below the first threshold by more than half its gap to CQI 2 is out of range.
    if (nearest == 1 && gamma_eff_db < lut.cqi[1].threshold_db - 0.5 * (lut.cqi[2].threshold_db - lut.cqi[1].threshold_db))
      nearest = 0;
    return nearest;
  }
  return best;
}

int report_cqi(const EqualizedGrid& eq, const AmcLut& lut, CqiRule rule) {
  std::vector<double> snr(eq.gain.size());
  for (std::size_t i = 0; i < snr.size(); ++i) snr[i] = per_re_snr(eq, i);
  const Modulation mods[] = {Modulation::Qpsk, Modulation::Qam16, Modulation::Qam64};
  double raw_db[3];
  for (int m = 0; m < 3; ++m) {
    const CapacityTable& table = CapacityTable::get(mods[m]);
    raw_db[m] = linear_to_db(table.invert_ln_deficit(bicm_capacity_mean(snr, table).ln_deficit));
  }
  auto gamma_db = [&](int i) {
    const auto& e = lut.cqi[i];
    const int m = e.modulation == Modulation::Qpsk ? 0 : (e.modulation == Modulation::Qam16 ? 1 : 2);
    return raw_db[m] + linear_to_db(e.alpha);
  };
  if (rule == CqiRule::Nearest) {
    int nearest = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (int i = 1; i < static_cast<int>(lut.cqi.size()); ++i) {
      const double d = std::abs(gamma_db(i) - lut.cqi[i].threshold_db);
      if (d < dist) {
        dist = d;
        nearest = i;
      }
    }
    if (nearest == 1 && gamma_db(1) < lut.cqi[1].threshold_db - 0.5 * (lut.cqi[2].threshold_db - lut.cqi[1].threshold_db))
      nearest = 0;
    return nearest;
  }
  int best = 0;
  for (int i = 1; i < static_cast<int>(lut.cqi.size()); ++i)
    if (gamma_db(i) >= lut.cqi[i].threshold_db) best = i;
  return best;
}

std::optional<McsEntry> select_mcs(int cqi, const std::vector<CqiEntry>& cqi_table,
                                   const std::vector<McsEntry>& mcs_table) {
  if (cqi < 0 || cqi >= static_cast<int>(cqi_table.size())) raise(ErrorKind::Bounds, "CQI index out of range");
  if (cqi == 0) return std::nullopt;
  const CqiEntry& c = cqi_table[cqi];
  std::optional<McsEntry> best;
  int best_gap = std::numeric_limits<int>::max();
  for (const auto& m : mcs_table) {
    if (m.modulation != c.modulation) continue;
    const int gap = std::abs(m.rate_x1024 - c.rate_x1024);
    if (gap < best_gap || (gap == best_gap && best && m.rate_x1024 < best->rate_x1024)) {
      best = m;
      best_gap = gap;
    }
  }
  if (!best) raise(ErrorKind::Configuration, "no MCS with the modulation of CQI " + std::to_string(cqi));
  return best;
}

// ---- TBS ----

int compute_tbs(double rate, int qm, int n_re) {
  if (n_re <= 0) raise(ErrorKind::Configuration, "no data resource elements");
  if (!(rate > 0.0 && rate < 1.0)) raise(ErrorKind::Configuration, "code rate must lie in (0, 1)");
  const double n_info = n_re * rate * qm;
  if (n_info <= 3824.0) {
    const int n = std::max(3, static_cast<int>(std::floor(std::log2(n_info))) - 6);
    const double step = std::ldexp(1.0, n);
    const double n_prime = std::max(24.0, step * std::floor(n_info / step));
    for (int v : tbs_table())
      if (v >= n_prime) return v;
    raise(ErrorKind::Asset, "TBS table does not cover " + std::to_string(n_prime));
  }
  const int n = static_cast<int>(std::floor(std::log2(n_info - 24.0))) - 5;
  const double step = std::ldexp(1.0, n);
  const double n_prime = std::max(3840.0, step * std::round((n_info - 24.0) / step));
  auto blocks_tbs = [&](double c) { return 8.0 * c * std::ceil((n_prime + 24.0) / (8.0 * c)) - 24.0; };
  if (rate <= 0.25) return static_cast<int>(blocks_tbs(std::ceil((n_prime + 24.0) / 3816.0)));
  if (n_prime > 8424.0) return static_cast<int>(blocks_tbs(std::ceil((n_prime + 24.0) / 8424.0)));
  return static_cast<int>(8.0 * std::ceil((n_prime + 24.0) / 8.0) - 24.0);
}

int compute_tbs(const McsEntry& mcs, int n_prb, int n_re_per_prb) {
  if (n_prb <= 0 || n_re_per_prb <= 0) raise(ErrorKind::Configuration, "no data resource elements");
  return compute_tbs(mcs.rate(), mcs.qm(), n_prb * n_re_per_prb);
}

LinkBudget link_budget(int tbs, const Numerology& num, int n_re, int qm) {
  if (tbs < 0 || n_re <= 0 || qm <= 0) raise(ErrorKind::Configuration, "inconsistent link-budget inputs");
  LinkBudget lb;
  lb.tbs = tbs;
  lb.n_re = n_re;
  lb.qm = qm;
  lb.code_rate = static_cast<double>(tbs) / (static_cast<double>(n_re) * qm);
  lb.e_bicm = static_cast<double>(tbs) / n_re;
  lb.throughput_bps = tbs / lb.t_subframe_s;
  lb.spectral_efficiency = lb.throughput_bps / num.bandwidth_hz;
  lb.eps_rs = 1.0 - static_cast<double>(n_re) / (num.n_prb * num.n_sc_rb * num.n_symb);
  lb.t_cp_s = num.cp_duration_s();
  lb.eps_cp = lb.t_cp_s / lb.t_subframe_s;
  lb.abw_hz = num.n_prb * num.n_sc_rb * num.delta_f_hz;
  lb.eps_gb = 1.0 - lb.abw_hz / num.bandwidth_hz;
  return lb;
}

// ---- calibration ----

double calibrate_alpha(std::span<const CalibrationSample> samples) {
  if (samples.empty()) raise(ErrorKind::Calibration, "no calibration realizations");
  double acc = 0.0;
  for (const auto& s : samples) {
    if (!(s.raw_snr > 0.0) || !(s.target_snr > 0.0)) raise(ErrorKind::Calibration, "calibration SNRs must be positive");
    acc += std::log10(s.target_snr) - std::log10(s.raw_snr);
  }
  return std::pow(10.0, acc / static_cast<double>(samples.size()));
}

double fit_threshold(std::span<const CurvePoint> curve, double target) {
  std::vector<CurvePoint> pts(curve.begin(), curve.end());
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.snr_db < b.snr_db; });
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double p0 = pts[i - 1].bler();
    const double p1 = pts[i].bler();
    const double se = std::sqrt(p0 * (1 - p0) / std::max<long>(pts[i - 1].blocks, 1) +
                                p1 * (1 - p1) / std::max<long>(pts[i].blocks, 1));
    if (p1 - p0 > 3.0 * se + 1e-12 && p1 - p0 > 0.02)
      raise(ErrorKind::Calibration, "BLER rises with SNR beyond Monte-Carlo tolerance");
  }
  std::vector<CurvePoint> nz;
  for (const auto& p : pts)
    if (p.errors > 0) nz.push_back(p);
  const double lt = std::log10(target);
  for (std::size_t i = 0; i + 1 < nz.size(); ++i) {
    const double y0 = std::log10(nz[i].bler());
    const double y1 = std::log10(nz[i + 1].bler());
    if (y0 >= lt && y1 <= lt) {
      if (y0 == y1) return 0.5 * (nz[i].snr_db + nz[i + 1].snr_db);
      return nz[i].snr_db + (lt - y0) * (nz[i + 1].snr_db - nz[i].snr_db) / (y1 - y0);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::vector<CurvePoint> sweep_awgn_curve(int cqi, const CqiEntry& entry, const LutBuildConfig& cfg,
                                         const AwgnSimulator& sim) {
  if (!entry.modulation) raise(ErrorKind::Configuration, "CQI 0 has no waterfall");
  const CapacityTable& table = CapacityTable::get(*entry.modulation);
  // Start from the SNR at which the BICM capacity equals the spectral load.
  const double load = entry.rate() * bits_per_symbol(*entry.modulation);
  double guess = linear_to_db(table.invert(load)) + 1.0;

  auto probe = [&](double snr) { return static_cast<double>(sim(cqi, snr, cfg.probe_blocks)) / cfg.probe_blocks; };
  double lo = guess;
  double hi = guess;
  int guard = 0;
  if (probe(guess) > cfg.target_bler) {
    do {
      lo = hi;
      hi += 1.0;
    } while (probe(hi) > cfg.target_bler && ++guard < 30);
  } else {
    do {
      hi = lo;
      lo -= 1.0;
    } while (probe(lo) <= cfg.target_bler && ++guard < 30);
  }
  if (guard >= 30) raise(ErrorKind::Calibration, "could not bracket the waterfall of CQI " + std::to_string(cqi));
  for (int i = 0; i < 3; ++i) {
    const double mid = 0.5 * (lo + hi);
    (probe(mid) > cfg.target_bler ? lo : hi) = mid;
  }
  const double centre = 0.5 * (lo + hi);

  std::vector<CurvePoint> curve;
  auto run = [&](double snr) {
    CurvePoint p;
    p.snr_db = snr;
    p.blocks = cfg.blocks_per_point;
    p.errors = sim(cqi, snr, cfg.blocks_per_point);
    curve.push_back(p);
  };
  const double first = centre - 0.5 * (cfg.points - 1) * cfg.spacing_db;
  for (int i = 0; i < cfg.points; ++i) run(first + i * cfg.spacing_db);

  // Add points until the target is bracketed by points with errors.
  auto by_snr = [](const auto& a, const auto& b) { return a.snr_db < b.snr_db; };
  for (int extra = 0; extra < 8 && std::isnan(fit_threshold(curve, cfg.target_bler)); ++extra) {
    std::sort(curve.begin(), curve.end(), by_snr);
    auto high = std::find_if(curve.rbegin(), curve.rend(), [&](const auto& p) { return p.bler() > cfg.target_bler; });
    if (high == curve.rend()) {
      run(curve.front().snr_db - cfg.spacing_db);
    } else if (high == curve.rbegin()) {
      run(curve.back().snr_db + cfg.spacing_db);
    } else {
      // The waterfall drops from above target to zero errors between two
      // neighbours: split the gap.
      run(0.5 * (high->snr_db + std::prev(high)->snr_db));
    }
  }
  std::sort(curve.begin(), curve.end(), by_snr);
  return curve;
}

}  // namespace fassim
