// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#include "fassim/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include <Eigen/Dense>

namespace fassim {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// ln(ln(1 + e^t)).
double ln_softplus(double t) {
  if (t > 35.0) return std::log(t);
  if (t < -35.0) return t;
  return std::log(std::log1p(std::exp(t)));
}

GaussHermite build_gauss_hermite(int order) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    j(i, i - 1) = std::sqrt(i / 2.0);
    j(i - 1, i) = j(i, i - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(j);
  GaussHermite gh;
  gh.nodes.resize(order);
  gh.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    gh.nodes[i] = solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    gh.weights[i] = std::sqrt(kPi) * v0 * v0;
  }
  return gh;
}

}  // namespace

const GaussHermite& gauss_hermite(int order) {
  if (order < 2 || order > 200) raise(ErrorKind::Domain, "Gauss-Hermite order out of range");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussHermite>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GaussHermite>(build_gauss_hermite(order));
  return *slot;
}

double bicm_ln_deficit_point(double snr_linear, Modulation m, int order) {
  if (!(snr_linear > 0.0) || !std::isfinite(snr_linear)) raise(ErrorKind::Domain, "SNR must be positive and finite");
  const Constellation& c = constellation(m);
  const GaussHermite& gh = gauss_hermite(order);
  const int points = static_cast<int>(c.points.size());
  const double sigma = std::sqrt(1.0 / snr_linear);

  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(points) * order * order * c.qm);
  std::vector<double> a(points);
  std::vector<double> ex(points);
  const double ln_points = std::log(static_cast<double>(points));
  for (int xi = 0; xi < points; ++xi) {
    for (int u = 0; u < order; ++u) {
      for (int v = 0; v < order; ++v) {
        const cdouble y = c.points[xi] + sigma * cdouble{gh.nodes[u], gh.nodes[v]};
        const double ln_w = std::log(gh.weights[u] * gh.weights[v] / kPi) - ln_points;
        double amax = -std::numeric_limits<double>::infinity();
        for (int p = 0; p < points; ++p) {
          a[p] = -std::norm(y - c.points[p]) * snr_linear;
          amax = std::max(amax, a[p]);
        }
        for (int p = 0; p < points; ++p) ex[p] = std::exp(a[p] - amax);
        for (int b = 0; b < c.qm; ++b) {
          const int shift = c.qm - 1 - b;
          const int own = (xi >> shift) & 1;
          double s_same = 0.0;
          double s_other = 0.0;
          for (int p = 0; p < points; ++p) (((p >> shift) & 1) == own ? s_same : s_other) += ex[p];
          double t = 0.0;
          if (s_other > 1e-280 && s_same > 1e-280) {
            t = std::log(s_other) - std::log(s_same);
          } else {
            // Exponentials underflowed; redo the two sums in the log domain.
            double m_same = -std::numeric_limits<double>::infinity();
            double m_other = m_same;
            for (int p = 0; p < points; ++p) {
              double& mm = ((p >> shift) & 1) == own ? m_same : m_other;
              mm = std::max(mm, a[p]);
            }
            double r_same = 0.0;
            double r_other = 0.0;
            for (int p = 0; p < points; ++p) {
              if (((p >> shift) & 1) == own) r_same += std::exp(a[p] - m_same);
              else r_other += std::exp(a[p] - m_other);
            }
            t = (m_other + std::log(r_other)) - (m_same + std::log(r_same));
          }
          terms.push_back(ln_w + ln_softplus(t));
        }
      }
    }
  }
  return log_sum_exp(terms) - std::log(kLn2);
}

double bicm_capacity_point(double snr_linear, Modulation m, int order) {
  const double qm = bits_per_symbol(m);
  return std::clamp(qm - std::exp(bicm_ln_deficit_point(snr_linear, m, order)), 0.0, qm);
}

double shannon_capacity(double gamma_bar) {
  if (!(gamma_bar > 0.0) || !std::isfinite(gamma_bar)) raise(ErrorKind::Domain, "SNR must be positive and finite");
  return std::log2(1.0 + gamma_bar);
}

// ---- table ----

CapacityTable CapacityTable::build(Modulation m, int order) {
  CapacityTable t;
  t.modulation_ = m;
  t.order_ = order;
  const int count = static_cast<int>(std::lround((kMaxDb - kMinDb) / kStepDb)) + 1;
  const double qm = bits_per_symbol(m);
  for (int i = 0; i < count; ++i) {
    const double db = kMinDb + i * kStepDb;
    const double lnd = bicm_ln_deficit_point(db_to_linear(db), m, order);
    t.snr_db_.push_back(db);
    t.ln_deficit_.push_back(lnd);
    t.capacity_.push_back(std::clamp(qm - std::exp(lnd), 0.0, qm));
  }
  for (std::size_t i = 1; i < t.ln_deficit_.size(); ++i)
    if (!(t.ln_deficit_[i] < t.ln_deficit_[i - 1])) raise(ErrorKind::Model, "capacity table is not strictly monotone");
  if (!(t.capacity_.front() > 0.0)) raise(ErrorKind::Model, "capacity table has no positive low end");
  return t;
}

std::string CapacityTable::key() const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s gh%d %.2f:%.2f:%.2f", to_string(modulation_).c_str(), order_, kMinDb, kStepDb,
                kMaxDb);
  return buf;
}

std::string CapacityTable::serialize() const {
  std::ostringstream body;
  char line[128];
  for (std::size_t i = 0; i < snr_db_.size(); ++i) {
    std::snprintf(line, sizeof line, "%.2f %.17g %.17g\n", snr_db_[i], capacity_[i], ln_deficit_[i]);
    body << line;
  }
  const std::string rows = body.str();
  std::ostringstream out;
  out << "# BICM capacity table: snr_db capacity_bits ln(Qm - capacity)\n";
  out << "table " << key() << "\n";
  out << "constellation " << to_string(modulation_) << " order " << qm() << "\n";
  out << "checksum fnv1a64 " << hex64(fnv1a64(rows)) << "\n";
  out << rows;
  return out.str();
}

CapacityTable CapacityTable::parse(const std::string& text) {
  CapacityTable t;
  std::istringstream in(text);
  std::string line;
  std::string key_line;
  std::string checksum;
  std::size_t pos = 0;
  std::size_t body_start = std::string::npos;
  bool have_mod = false;
  while (std::getline(in, line)) {
    pos += line.size() + 1;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "table") {
      key_line = line.substr(6);
    } else if (tag == "constellation") {
      std::string name;
      ls >> name;
      t.modulation_ = modulation_from_string(name);
      have_mod = true;
    } else if (tag == "checksum") {
      std::string algo;
      ls >> algo >> checksum;
      body_start = pos;
    } else {
      double db = 0.0;
      double cap = 0.0;
      double lnd = 0.0;
      std::istringstream rs(line);
      if (!(rs >> db >> cap >> lnd)) raise(ErrorKind::Asset, "bad capacity table row: " + line);
      t.snr_db_.push_back(db);
      t.capacity_.push_back(cap);
      t.ln_deficit_.push_back(lnd);
    }
  }
  if (!have_mod || body_start == std::string::npos || t.snr_db_.size() < 2)
    raise(ErrorKind::Asset, "incomplete capacity table");
  if (hex64(fnv1a64(std::string_view(text).substr(body_start))) != checksum)
    raise(ErrorKind::Asset, "capacity table checksum mismatch");
  const auto gh = key_line.find(" gh");
  if (gh != std::string::npos) t.order_ = std::atoi(key_line.c_str() + gh + 3);
  if (t.key() != key_line) raise(ErrorKind::Asset, "capacity table key mismatch");
  return t;
}

void CapacityTable::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) raise(ErrorKind::Io, "cannot write " + path);
  out << serialize();
  if (!out) raise(ErrorKind::Io, "short write to " + path);
}

const CapacityTable& CapacityTable::get(Modulation m) {
  static std::mutex mu;
  static std::map<Modulation, std::unique_ptr<CapacityTable>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[m];
  if (slot) return *slot;

  const std::string name = to_string(m) + ".txt";
  std::vector<std::string> candidates;
  if (const char* dir = std::getenv("FASSIM_CACHE_DIR"); dir != nullptr && *dir != '\0')
    candidates.push_back(std::string(dir) + "/" + name);
  candidates.push_back(data_dir() + "/capacity/" + name);
  CapacityTable expected_key;
  expected_key.modulation_ = m;
  for (const auto& path : candidates) {
    if (!std::filesystem::exists(path)) continue;
    try {
      CapacityTable t = parse(read_text_file(path));
      if (t.key() == expected_key.key()) {
        slot = std::make_unique<CapacityTable>(std::move(t));
        return *slot;
      }
    } catch (const Error&) {
      // Stale or damaged cache: rebuild below.
    }
  }
  slot = std::make_unique<CapacityTable>(build(m));
  if (const char* dir = std::getenv("FASSIM_CACHE_DIR"); dir != nullptr && *dir != '\0') {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    try {
      slot->write(std::string(dir) + "/" + name);
    } catch (const Error&) {
      // The cache is an optimisation only.
    }
  }
  return *slot;
}

double CapacityTable::ln_deficit_at(double snr_linear) const {
  const double lnq = std::log(static_cast<double>(qm()));
  if (!(snr_linear > 0.0)) return lnq;
  const double db = linear_to_db(snr_linear);
  const std::size_t n = snr_db_.size();
  if (db <= snr_db_.front()) {
    // Low-SNR capacity grows linearly in the SNR.
    const double i0 = qm() - std::exp(ln_deficit_.front());
    const double bits = i0 * snr_linear / db_to_linear(snr_db_.front());
    return std::log(qm() - bits);
  }
  if (db >= snr_db_.back()) {
    const double slope = (ln_deficit_[n - 1] - ln_deficit_[n - 2]) / (snr_db_[n - 1] - snr_db_[n - 2]);
    return ln_deficit_[n - 1] + slope * (db - snr_db_[n - 1]);
  }
  const double step = snr_db_[1] - snr_db_[0];
  std::size_t i = std::min(static_cast<std::size_t>((db - snr_db_.front()) / step), n - 2);
  const double frac = (db - snr_db_[i]) / (snr_db_[i + 1] - snr_db_[i]);
  return ln_deficit_[i] + frac * (ln_deficit_[i + 1] - ln_deficit_[i]);
}

double CapacityTable::capacity_at(double snr_linear) const {
  return std::clamp(qm() - std::exp(ln_deficit_at(snr_linear)), 0.0, static_cast<double>(qm()));
}

double CapacityTable::invert_ln_deficit(double lnd) const {
  const std::size_t n = snr_db_.size();
  if (lnd >= ln_deficit_.front()) {
    const double i0 = qm() - std::exp(ln_deficit_.front());
    const double bits = qm() - std::exp(lnd);
    if (!(bits > 0.0)) return 0.0;
    return db_to_linear(snr_db_.front()) * bits / i0;
  }
  if (lnd <= ln_deficit_.back()) {
    const double slope = (ln_deficit_[n - 1] - ln_deficit_[n - 2]) / (snr_db_[n - 1] - snr_db_[n - 2]);
    return db_to_linear(snr_db_[n - 1] + (lnd - ln_deficit_[n - 1]) / slope);
  }
  // ln_deficit_ is strictly decreasing.
  auto it = std::upper_bound(ln_deficit_.begin(), ln_deficit_.end(), lnd, std::greater<double>());
  const std::size_t i = static_cast<std::size_t>(it - ln_deficit_.begin()) - 1;
  const double frac = (lnd - ln_deficit_[i]) / (ln_deficit_[i + 1] - ln_deficit_[i]);
  return db_to_linear(snr_db_[i] + frac * (snr_db_[i + 1] - snr_db_[i]));
}

double CapacityTable::invert(double bits, bool* saturated) const {
  const double qm_d = qm();
  bool sat = false;
  double snr = 0.0;
  if (!(bits > 0.0)) {
    sat = true;
    snr = db_to_linear(snr_db_.front());
  } else if (!(bits < qm_d)) {
    sat = true;
    snr = db_to_linear(snr_db_.back());
  } else {
    snr = invert_ln_deficit(std::log(qm_d - bits));
  }
  if (saturated != nullptr) *saturated = sat;
  return snr;
}

// ---- grids ----

double per_re_snr(const EqualizedGrid& eq, std::size_t i) {
  return eq.gain[i] * eq.gain[i] / eq.sigma_tilde2;
}

GridCapacity bicm_capacity_mean(std::span<const double> snr_linear, const CapacityTable& table) {
  if (snr_linear.empty()) raise(ErrorKind::Bounds, "no resource elements");
  std::vector<double> lnd(snr_linear.size());
  for (std::size_t i = 0; i < lnd.size(); ++i) lnd[i] = table.ln_deficit_at(snr_linear[i]);
  GridCapacity out;
  out.ln_deficit = log_sum_exp(lnd) - std::log(static_cast<double>(lnd.size()));
  out.bits = std::clamp(table.qm() - std::exp(out.ln_deficit), 0.0, static_cast<double>(table.qm()));
  return out;
}

GridCapacity bicm_capacity_grid(const EqualizedGrid& eq, const CapacityTable& table) {
  std::vector<double> snr(eq.gain.size());
  for (std::size_t i = 0; i < snr.size(); ++i) snr[i] = per_re_snr(eq, i);
  return bicm_capacity_mean(snr, table);
}

double effective_snr(const GridCapacity& cap, double alpha, const CapacityTable& table) {
  if (!(alpha > 0.0)) raise(ErrorKind::Domain, "alpha must be positive");
  return alpha * table.invert_ln_deficit(cap.ln_deficit);
}

double effective_snr(double bits, double alpha, const CapacityTable& table, bool* saturated) {
  if (!(alpha > 0.0)) raise(ErrorKind::Domain, "alpha must be positive");
  return alpha * table.invert(bits, saturated);
}

}  // namespace fassim
