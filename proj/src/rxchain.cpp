// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#include "fassim/rxchain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fassim/capacity.hpp"

namespace fassim {

MetricKind metric_kind_from_string(const std::string& name) {
  if (name == "average" || name == "average_snr") return MetricKind::AverageSnr;
  if (name == "exponential" || name == "eesm") return MetricKind::Exponential;
  if (name == "mutual_information" || name == "mi" || name == "miesm") return MetricKind::MutualInformation;
  raise(ErrorKind::Configuration, "unknown metric kind '" + name + "'");
}

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::AverageSnr: return "average_snr";
    case MetricKind::Exponential: return "exponential";
    case MetricKind::MutualInformation: return "mutual_information";
  }
  return "?";
}

void PortSelectionMetric::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) raise(ErrorKind::Configuration, "metric beta must be finite and positive");
}

std::vector<double> port_metric(const ChannelGrid& chan, const PortSelectionMetric& metric) {
  metric.validate();
  const int k = chan.ports();
  const int f_count = chan.subcarriers();
  const int n_sym = chan.symbols();
  const double theta = chan.theta();
  const double nf = static_cast<double>(f_count) * n_sym;
  const double ln_nf = std::log(nf);
  const double beta = metric.beta;
  const CapacityTable* table =
      metric.kind == MetricKind::MutualInformation ? &CapacityTable::get(metric.modulation) : nullptr;

  std::vector<double> out(k);
  std::vector<double> terms(static_cast<std::size_t>(f_count) * n_sym);
  for (int kk = 0; kk < k; ++kk) {
    std::size_t idx = 0;
    for (int n = 0; n < n_sym; ++n) {
      const cdouble* h = chan.row(kk, n);
      for (int f = 0; f < f_count; ++f) terms[idx++] = theta * std::norm(h[f]);
    }
    switch (metric.kind) {
      case MetricKind::AverageSnr: {
        double s = 0.0;
        for (double g : terms) s += g;
        out[kk] = s / nf;
        break;
      }
      case MetricKind::Exponential: {
        // -beta * ln(mean exp(-Gamma / beta)) as a log-sum-exp.
        double m = -std::numeric_limits<double>::infinity();
        for (double& g : terms) {
          g = -g / beta;
          m = std::max(m, g);
        }
        double s = 0.0;
        for (double g : terms) s += std::exp(g - m);
        out[kk] = -beta * (m + std::log(s) - ln_nf);
        break;
      }
      case MetricKind::MutualInformation: {
        for (double& g : terms) g /= beta;
        const GridCapacity cap = bicm_capacity_mean(terms, *table);
        out[kk] = beta * table->invert_ln_deficit(cap.ln_deficit);
        break;
      }
    }
  }
  return out;
}

int select_port(std::span<const double> metrics) {
  if (metrics.empty()) raise(ErrorKind::Bounds, "no ports to select from");
  int best = 0;
  for (int k = 1; k < static_cast<int>(metrics.size()); ++k)
    if (metrics[k] > metrics[best]) best = k;
  return best;
}

int select_port_narrowband(const ChannelGrid& chan) {
  if (chan.ports() == 0) raise(ErrorKind::Bounds, "no ports to select from");
  int best = 0;
  for (int k = 1; k < chan.ports(); ++k)
    if (std::abs(chan.at(k, 0, 0)) > std::abs(chan.at(best, 0, 0))) best = k;
  return best;
}

EqualizedGrid mmse_equalize(const ResourceGrid& received, const ChannelGrid& chan, int port) {
  if (port < 0 || port >= chan.ports()) raise(ErrorKind::Bounds, "port index out of range");
  if (chan.subcarriers() != received.subcarriers || chan.symbols() != received.symbols)
    raise(ErrorKind::Framing, "channel grid does not match resource grid");
  const double nv = chan.noise_var();
  EqualizedGrid eq;
  eq.noise_var = nv;
  const std::size_t count = static_cast<std::size_t>(received.data_count());
  eq.w.reserve(count);
  eq.y_tilde.reserve(count);
  eq.gain.reserve(count);
  eq.w_abs2.reserve(count);

  double sum_wh2 = 0.0;
  double sum_w2 = 0.0;
  double sum_h2 = 0.0;
  std::vector<double> wh;
  wh.reserve(count);
  for (int n = 0; n < received.symbols; ++n) {
    const cdouble* h = chan.row(port, n);
    for (int f = 0; f < received.subcarriers; ++f) {
      if (!received.is_data(f, n)) continue;
      const double h2 = std::norm(h[f]);
      const double den = h2 + nv;
      const cdouble w = den > 0.0 ? std::conj(h[f]) / den : cdouble{};
      const double g = den > 0.0 ? h2 / den : 0.0;  // w h is real
      sum_h2 += h2;
      sum_wh2 += g * g;
      sum_w2 += std::norm(w);
      eq.w.push_back(w);
      eq.w_abs2.push_back(std::norm(w));
      eq.y_tilde.push_back(w * received.at(f, n));
      wh.push_back(g);
    }
  }
  if (!(sum_h2 > 0.0) || !(sum_wh2 > 0.0)) raise(ErrorKind::DegenerateChannel, "selected port has an all-zero channel");
  const double nf = static_cast<double>(eq.w.size());
  eq.beta = std::sqrt(nf / sum_wh2);
  for (auto& y : eq.y_tilde) y *= eq.beta;
  for (double g : wh) eq.gain.push_back(eq.beta * g);
  eq.sigma_tilde2 = eq.beta * eq.beta * nv / nf * sum_w2;
  eq.gamma_bar = nf * chan.theta() / (eq.beta * eq.beta * sum_w2);
  if (!(eq.sigma_tilde2 > 0.0)) eq.sigma_tilde2 = std::numeric_limits<double>::min();
  return eq;
}

std::vector<float> demap_maxlog(std::span<const cdouble> y, double sigma2, const Constellation& c) {
  if (!(sigma2 > 0.0)) raise(ErrorKind::Domain, "noise variance must be positive");
  const int half = c.qm / 2;
  const int levels = static_cast<int>(c.levels.size());
  const double inv = 1.0 / sigma2;
  std::vector<float> out(y.size() * c.qm);
  // Gray square QAM separates per axis: even label bits ride the in-phase
  // amplitude, odd bits the quadrature one.
  for (std::size_t s = 0; s < y.size(); ++s) {
    for (int axis = 0; axis < 2; ++axis) {
      const double v = axis == 0 ? y[s].real() : y[s].imag();
      for (int j = 0; j < half; ++j) {
        double d0 = std::numeric_limits<double>::max();
        double d1 = d0;
        for (int a = 0; a < levels; ++a) {
          const double d = (v - c.levels[a]) * (v - c.levels[a]);
          if (((a >> (half - 1 - j)) & 1) != 0) d1 = std::min(d1, d);
          else d0 = std::min(d0, d);
        }
        const double llr = std::clamp((d1 - d0) * inv, -static_cast<double>(kLlrClip), static_cast<double>(kLlrClip));
        out[s * c.qm + 2 * j + axis] = static_cast<float>(llr);
      }
    }
  }
  return out;
}

DecodeResult decode_transport(std::span<const float> llr, const SegmentPlan& plan, std::uint32_t c_init,
                              int max_iters) {
  if (static_cast<int>(llr.size()) != plan.g) raise(ErrorKind::Framing, "LLR count does not match coded length");
  const Bits c = gold_sequence(c_init, llr.size());
  std::vector<float> d(llr.begin(), llr.end());
  for (std::size_t i = 0; i < d.size(); ++i)
    if (c[i] != 0) d[i] = -d[i];

  const LdpcCode code(plan.bg, plan.z);
  DecodeResult res;
  res.crc_ok = true;
  Bits tb;
  tb.reserve(static_cast<std::size_t>(plan.tbs) + plan.tb_crc);
  std::size_t offset = 0;
  Bits hard;
  for (int r = 0; r < plan.c; ++r) {
    const int e = plan.e[r];
    const std::vector<float> buf = rate_recover(std::span<const float>(d).subspan(offset, e), plan, e, kLlrClip);
    offset += e;
    const int iters = code.decode(buf, hard, max_iters, active_check_rows(plan, e));
    res.iterations = std::max(res.iterations, iters);
    const auto blk = std::span<const std::uint8_t>(hard).first(plan.k_prime);
    if (plan.cb_crc > 0 && !crc_check(blk, CrcKind::Crc24B)) res.crc_ok = false;
    tb.insert(tb.end(), blk.begin(), blk.begin() + (plan.k_prime - plan.cb_crc));
  }
  if (!crc_check(tb, plan.tb_crc == 24 ? CrcKind::Crc24A : CrcKind::Crc16)) res.crc_ok = false;
  res.payload.assign(tb.begin(), tb.begin() + plan.tbs);
  return res;
}

}  // namespace fassim
