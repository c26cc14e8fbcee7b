// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#include "fassim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include "json.hpp"

#include "fassim/capacity.hpp"
#include "fassim/rng.hpp"
#include "fassim/version.hpp"

namespace fassim {

namespace pt = boost::property_tree;

// ---- enums ----

ThroughputMethod throughput_method_from_string(const std::string& name) {
  if (name == "adaptive") return ThroughputMethod::Adaptive;
  if (name == "bler_target") return ThroughputMethod::BlerTarget;
  raise(ErrorKind::Configuration, "unknown throughput method '" + name + "'");
}

std::string to_string(ThroughputMethod m) { return m == ThroughputMethod::BlerTarget ? "bler_target" : "adaptive"; }

Scenario scenario_from_string(const std::string& name) {
  if (name == "bler" || name == "simulate-bler") return Scenario::Bler;
  if (name == "awgn-lut") return Scenario::AwgnLut;
  if (name == "calibrate-amc") return Scenario::CalibrateAmc;
  if (name == "throughput") return Scenario::Throughput;
  raise(ErrorKind::Configuration, "unknown scenario '" + name + "'");
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::Bler: return "bler";
    case Scenario::AwgnLut: return "awgn-lut";
    case Scenario::CalibrateAmc: return "calibrate-amc";
    case Scenario::Throughput: return "throughput";
  }
  return "?";
}

ChannelKind channel_kind_from_string(const std::string& name) {
  if (name == "tdl") return ChannelKind::Tdl;
  if (name == "flat") return ChannelKind::Flat;
  if (name == "awgn") return ChannelKind::Awgn;
  raise(ErrorKind::Configuration, "unknown channel kind '" + name + "'");
}

std::string to_string(ChannelKind k) {
  switch (k) {
    case ChannelKind::Tdl: return "tdl";
    case ChannelKind::Flat: return "flat";
    case ChannelKind::Awgn: return "awgn";
  }
  return "?";
}

namespace {

LinkMode link_mode_from_string(const std::string& name) {
  if (name == "mcs") return LinkMode::Mcs;
  if (name == "cqi") return LinkMode::Cqi;
  if (name == "amc") return LinkMode::Amc;
  raise(ErrorKind::Configuration, "unknown link mode '" + name + "'");
}

std::string to_string(LinkMode m) {
  switch (m) {
    case LinkMode::Mcs: return "mcs";
    case LinkMode::Cqi: return "cqi";
    case LinkMode::Amc: return "amc";
  }
  return "?";
}

ChannelPath path_from_string(const std::string& name) {
  if (name == "frequency") return ChannelPath::Frequency;
  if (name == "time") return ChannelPath::Time;
  raise(ErrorKind::Configuration, "unknown channel path '" + name + "'");
}

std::string to_string(ChannelPath p) { return p == ChannelPath::Time ? "time" : "frequency"; }

CqiRule cqi_rule_from_string(const std::string& name) {
  if (name == "largest_not_exceeding") return CqiRule::LargestNotExceeding;
  if (name == "nearest") return CqiRule::Nearest;
  raise(ErrorKind::Configuration, "unknown CQI rule '" + name + "'");
}

std::string to_string(CqiRule r) { return r == CqiRule::Nearest ? "nearest" : "largest_not_exceeding"; }

// "1-15", "1,4,7" or a mix of both.
std::vector<int> parse_index_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    try {
      if (auto dash = item.find('-'); dash != std::string::npos && dash > 0) {
        const int lo = std::stoi(item.substr(0, dash));
        const int hi = std::stoi(item.substr(dash + 1));
        if (hi < lo) raise(ErrorKind::Configuration, "empty index range '" + item + "'");
        for (int i = lo; i <= hi; ++i) out.push_back(i);
      } else {
        out.push_back(std::stoi(item));
      }
    } catch (const std::logic_error&) {
      raise(ErrorKind::Configuration, "bad index list '" + text + "'");
    }
  }
  return out;
}

std::string format_index_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<int> all_cqis() {
  std::vector<int> v(15);
  for (int i = 0; i < 15; ++i) v[i] = i + 1;
  return v;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

// ---- config ----

void StoppingRule::validate() const {
  if (min_blocks < 100) raise(ErrorKind::Configuration, "min_blocks must be at least 100");
  if (max_blocks < min_blocks) raise(ErrorKind::Configuration, "max_blocks must not be below min_blocks");
  if (min_block_errors < 1) raise(ErrorKind::Configuration, "min_block_errors must be positive");
}

void SnrSweep::validate() const {
  if (!(step_db > 0.0)) raise(ErrorKind::Configuration, "SNR step must be positive");
  if (!std::isfinite(start_db) || !std::isfinite(stop_db) || stop_db < start_db)
    raise(ErrorKind::Configuration, "SNR sweep needs finite start <= stop");
  if (!(stop_bler >= 0.0 && stop_bler < 1.0)) raise(ErrorKind::Configuration, "stop_bler must lie in [0, 1)");
}

std::vector<double> SnrSweep::points() const {
  validate();
  std::vector<double> out;
  const long n = static_cast<long>(std::floor((stop_db - start_db) / step_db + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(start_db + static_cast<double>(i) * step_db);
  return out;
}

void CampaignConfig::validate() const {
  if (workers < 1) raise(ErrorKind::Configuration, "workers must be at least 1");
  geometry.validate();
  numerology_for_bandwidth(bandwidth_mhz);
  if (!(delay_spread_ns >= 0.0) || !(doppler_hz >= 0.0))
    raise(ErrorKind::Configuration, "delay spread and Doppler must be non-negative");
  FadingProcessConfig{doppler_hz, oscillators, seed}.validate();
  if (path == ChannelPath::Time && channel != ChannelKind::Tdl)
    raise(ErrorKind::Configuration, "the time-domain path needs a TDL channel");
  if (mode == LinkMode::Mcs) mcs_entry(mcs);
  if (mode == LinkMode::Cqi && (cqi < 1 || cqi > 15)) raise(ErrorKind::Configuration, "CQI must lie in 1..15");
  PortSelectionMetric{metric, metric_beta, Modulation::Qpsk}.validate();
  const int ports = channel == ChannelKind::Awgn ? 1 : geometry.ports();
  if (fixed_port >= ports) raise(ErrorKind::Configuration, "fixed_port exceeds the port count");
  if (max_iterations < 1) raise(ErrorKind::Configuration, "max_iterations must be positive");
  sweep.validate();
  stopping.validate();
  for (int c : lut_cqis)
    if (c < 1 || c > 15) raise(ErrorKind::Configuration, "LUT CQIs must lie in 1..15");
  for (int c : calibration_cqis)
    if (c < 1 || c > 15) raise(ErrorKind::Configuration, "calibration CQIs must lie in 1..15");
  if (lut_build.blocks_per_point < 1 || lut_build.points < 2 || !(lut_build.spacing_db > 0.0) ||
      lut_build.probe_blocks < 1 || !(lut_build.target_bler > 0.0 && lut_build.target_bler < 1.0))
    raise(ErrorKind::Configuration, "invalid [lut] settings");
  if (realizations < 1 || blocks_per_realization < 1) raise(ErrorKind::Configuration, "invalid [calibration] settings");
  const bool needs_lut = scenario == Scenario::CalibrateAmc ||
                         (scenario == Scenario::Throughput && throughput_method == ThroughputMethod::Adaptive);
  if (needs_lut && lut.empty())
    raise(ErrorKind::Configuration, "scenario " + to_string(scenario) + " needs link.lut");
}

std::string CampaignConfig::mode_label() const {
  switch (mode) {
    case LinkMode::Mcs: return "mcs" + std::to_string(mcs);
    case LinkMode::Cqi: return "cqi" + std::to_string(cqi);
    case LinkMode::Amc: return "amc";
  }
  return "?";
}

// ptree's defaulted get() silently falls back on unparsable text; a key that
// is present must convert.
template <typename T>
T value(const pt::ptree& tree, const std::string& path, const T& fallback) {
  return tree.get_optional<std::string>(path) ? tree.get<T>(path) : fallback;
}

CampaignConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    raise(ErrorKind::Configuration, std::string("config syntax: ") + e.what());
  }

  static const std::map<std::string, std::set<std::string>> known = {
      {"", {"schema_version", "name", "scenario", "seed", "output", "workers"}},
      {"geometry", {"k1", "k2", "w1", "w2"}},
      {"numerology", {"bandwidth_mhz"}},
      {"channel", {"kind", "profile", "delay_spread_ns", "doppler_hz", "oscillators", "path"}},
      {"link",
       {"mode", "mcs", "cqi", "metric", "metric_beta", "metric_modulation", "fixed_port", "max_iterations", "lut",
        "cqi_rule", "throughput_method"}},
      {"sweep", {"start_db", "stop_db", "step_db", "stop_bler"}},
      {"stopping", {"min_blocks", "min_block_errors", "max_blocks"}},
      {"lut", {"cqis", "blocks_per_point", "points", "spacing_db", "probe_blocks", "target_bler"}},
      {"calibration", {"cqis", "realizations", "blocks_per_realization"}},
  };
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      if (!known.at("").count(key)) raise(ErrorKind::Configuration, "unknown config key '" + key + "'");
      continue;
    }
    auto sec = known.find(key);
    if (sec == known.end() || key.empty()) raise(ErrorKind::Configuration, "unknown config section [" + key + "]");
    for (const auto& [sub, _] : node)
      if (!sec->second.count(sub)) raise(ErrorKind::Configuration, "unknown config key '" + key + "." + sub + "'");
  }

  CampaignConfig c;
  try {
    const int version = value<int>(tree, "schema_version", 0);
    if (version != kSchemaVersion)
      raise(ErrorKind::Configuration, "schema_version must be " + std::to_string(kSchemaVersion));
    c.name = value<std::string>(tree, "name", "");
    c.scenario = scenario_from_string(value<std::string>(tree, "scenario", "bler"));
    c.seed = value<std::uint64_t>(tree, "seed", c.seed);
    c.output = value<std::string>(tree, "output", "");
    c.workers = value<int>(tree, "workers", c.workers);

    c.geometry.k1 = value<int>(tree, "geometry.k1", c.geometry.k1);
    c.geometry.k2 = value<int>(tree, "geometry.k2", c.geometry.k2);
    c.geometry.w1 = value<double>(tree, "geometry.w1", c.geometry.w1);
    c.geometry.w2 = value<double>(tree, "geometry.w2", c.geometry.w2);
    c.bandwidth_mhz = value<double>(tree, "numerology.bandwidth_mhz", c.bandwidth_mhz);

    c.channel = channel_kind_from_string(value<std::string>(tree, "channel.kind", "tdl"));
    c.profile = value<std::string>(tree, "channel.profile", c.profile);
    c.delay_spread_ns = value<double>(tree, "channel.delay_spread_ns", c.delay_spread_ns);
    c.doppler_hz = value<double>(tree, "channel.doppler_hz", c.doppler_hz);
    c.oscillators = value<int>(tree, "channel.oscillators", c.oscillators);
    c.path = path_from_string(value<std::string>(tree, "channel.path", "frequency"));

    c.mode = link_mode_from_string(value<std::string>(tree, "link.mode", "mcs"));
    c.mcs = value<int>(tree, "link.mcs", c.mcs);
    c.cqi = value<int>(tree, "link.cqi", c.cqi);
    c.metric = metric_kind_from_string(value<std::string>(tree, "link.metric", "average_snr"));
    c.metric_beta = value<double>(tree, "link.metric_beta", c.metric_beta);
    if (const auto m = value<std::string>(tree, "link.metric_modulation", "auto"); m != "auto")
      c.metric_modulation = modulation_from_string(m);
    c.fixed_port = value<int>(tree, "link.fixed_port", c.fixed_port);
    c.max_iterations = value<int>(tree, "link.max_iterations", c.max_iterations);
    c.lut = value<std::string>(tree, "link.lut", "");
    c.cqi_rule = cqi_rule_from_string(value<std::string>(tree, "link.cqi_rule", "largest_not_exceeding"));
    c.throughput_method = throughput_method_from_string(value<std::string>(tree, "link.throughput_method", "adaptive"));

    c.sweep.start_db = value<double>(tree, "sweep.start_db", c.sweep.start_db);
    c.sweep.stop_db = value<double>(tree, "sweep.stop_db", c.sweep.stop_db);
    c.sweep.step_db = value<double>(tree, "sweep.step_db", c.sweep.step_db);
    c.sweep.stop_bler = value<double>(tree, "sweep.stop_bler", c.sweep.stop_bler);

    c.stopping.min_blocks = value<long>(tree, "stopping.min_blocks", c.stopping.min_blocks);
    c.stopping.min_block_errors = value<long>(tree, "stopping.min_block_errors", c.stopping.min_block_errors);
    c.stopping.max_blocks = value<long>(tree, "stopping.max_blocks", c.stopping.max_blocks);

    c.lut_cqis = parse_index_list(value<std::string>(tree, "lut.cqis", ""));
    c.lut_build.blocks_per_point = value<long>(tree, "lut.blocks_per_point", c.lut_build.blocks_per_point);
    c.lut_build.points = value<int>(tree, "lut.points", c.lut_build.points);
    c.lut_build.spacing_db = value<double>(tree, "lut.spacing_db", c.lut_build.spacing_db);
    c.lut_build.probe_blocks = value<long>(tree, "lut.probe_blocks", c.lut_build.probe_blocks);
    c.lut_build.target_bler = value<double>(tree, "lut.target_bler", c.lut_build.target_bler);

    c.calibration_cqis = parse_index_list(value<std::string>(tree, "calibration.cqis", ""));
    c.realizations = value<int>(tree, "calibration.realizations", c.realizations);
    c.blocks_per_realization = value<long>(tree, "calibration.blocks_per_realization", c.blocks_per_realization);
  } catch (const pt::ptree_bad_data& e) {
    raise(ErrorKind::Configuration, std::string("config value: ") + e.what());
  }
  c.validate();
  return c;
}

CampaignConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

std::string serialize_config(const CampaignConfig& c) {
  std::ostringstream o;
  o << "schema_version = " << kSchemaVersion << "\n";
  if (!c.name.empty()) o << "name = " << c.name << "\n";
  o << "scenario = " << to_string(c.scenario) << "\n";
  o << "seed = " << c.seed << "\n";
  if (!c.output.empty()) o << "output = " << c.output << "\n";
  o << "workers = " << c.workers << "\n";
  o << "\n[geometry]\nk1 = " << c.geometry.k1 << "\nk2 = " << c.geometry.k2 << "\nw1 = " << fmt(c.geometry.w1)
    << "\nw2 = " << fmt(c.geometry.w2) << "\n";
  o << "\n[numerology]\nbandwidth_mhz = " << fmt(c.bandwidth_mhz) << "\n";
  o << "\n[channel]\nkind = " << to_string(c.channel) << "\nprofile = " << c.profile
    << "\ndelay_spread_ns = " << fmt(c.delay_spread_ns) << "\ndoppler_hz = " << fmt(c.doppler_hz)
    << "\noscillators = " << c.oscillators << "\npath = " << to_string(c.path) << "\n";
  o << "\n[link]\nmode = " << to_string(c.mode) << "\nmcs = " << c.mcs << "\ncqi = " << c.cqi
    << "\nmetric = " << to_string(c.metric) << "\nmetric_beta = " << fmt(c.metric_beta)
    << "\nmetric_modulation = " << (c.metric_modulation ? to_string(*c.metric_modulation) : "auto")
    << "\nfixed_port = " << c.fixed_port << "\nmax_iterations = " << c.max_iterations << "\n";
  if (!c.lut.empty()) o << "lut = " << c.lut << "\n";
  o << "cqi_rule = " << to_string(c.cqi_rule) << "\n";
  o << "throughput_method = " << to_string(c.throughput_method) << "\n";
  o << "\n[sweep]\nstart_db = " << fmt(c.sweep.start_db) << "\nstop_db = " << fmt(c.sweep.stop_db)
    << "\nstep_db = " << fmt(c.sweep.step_db) << "\nstop_bler = " << fmt(c.sweep.stop_bler) << "\n";
  o << "\n[stopping]\nmin_blocks = " << c.stopping.min_blocks << "\nmin_block_errors = " << c.stopping.min_block_errors
    << "\nmax_blocks = " << c.stopping.max_blocks << "\n";
  o << "\n[lut]\ncqis = " << format_index_list(c.lut_cqis.empty() ? all_cqis() : c.lut_cqis)
    << "\nblocks_per_point = " << c.lut_build.blocks_per_point << "\npoints = " << c.lut_build.points
    << "\nspacing_db = " << fmt(c.lut_build.spacing_db) << "\nprobe_blocks = " << c.lut_build.probe_blocks
    << "\ntarget_bler = " << fmt(c.lut_build.target_bler) << "\n";
  o << "\n[calibration]\ncqis = " << format_index_list(c.calibration_cqis.empty() ? all_cqis() : c.calibration_cqis)
    << "\nrealizations = " << c.realizations << "\nblocks_per_realization = " << c.blocks_per_realization << "\n";
  return o.str();
}

// ---- link ----

LinkSimulator::LinkSimulator(const CampaignConfig& cfg, const AmcLut* lut)
    : cfg_(cfg), lut_(lut), num_(numerology_for_bandwidth(cfg.bandwidth_mhz)) {
  cfg_.validate();
  if (cfg_.mode == LinkMode::Amc && lut_ == nullptr) raise(ErrorKind::Configuration, "AMC mode needs a LUT");
  if (cfg_.channel == ChannelKind::Tdl) {
    profile_ = load_tdl_profile(cfg_.profile, cfg_.delay_spread_ns * 1e-9);
    // The time path applies integer-sample lags; the grid seen by the
    // receiver is built from the same lags so CSI stays exact.
    if (cfg_.path == ChannelPath::Time) profile_ = quantize_delays(profile_, num_.sample_rate_hz());
  }
  if (cfg_.channel != ChannelKind::Awgn) basis_ = eigen_decompose(build_correlation(cfg_.geometry));
  fading_ = FadingProcessConfig{cfg_.doppler_hz, cfg_.oscillators, cfg_.seed};
  cqi_table_ = lut_ != nullptr ? lut_->cqi : load_cqi_table();
  mcs_table_ = load_mcs_table();
  const int n_re = num_.data_res();
  for (const auto& m : mcs_table_) {
    LinkFormat f;
    f.modulation = m.modulation;
    f.rate_x1024 = m.rate_x1024;
    f.tbs = compute_tbs(m, num_.n_prb);
    f.plan = plan_transport(f.tbs, m.rate(), n_re, m.qm());
    mcs_formats_.emplace(m.index, std::move(f));
  }
  for (const auto& c : cqi_table_) {
    if (!c.modulation) continue;
    LinkFormat f;
    f.modulation = *c.modulation;
    f.rate_x1024 = c.rate_x1024;
    f.tbs = compute_tbs(c.rate(), bits_per_symbol(f.modulation), n_re);
    f.plan = plan_transport(f.tbs, c.rate(), n_re, bits_per_symbol(f.modulation));
    cqi_formats_.emplace(c.index, std::move(f));
  }
}

const LinkFormat& LinkSimulator::mcs_format(int mcs) const {
  auto it = mcs_formats_.find(mcs);
  if (it == mcs_formats_.end()) raise(ErrorKind::Bounds, "MCS index out of range");
  return it->second;
}

const LinkFormat& LinkSimulator::cqi_format(int cqi) const {
  auto it = cqi_formats_.find(cqi);
  if (it == cqi_formats_.end()) raise(ErrorKind::Bounds, "CQI index has no transmission format");
  return it->second;
}

ChannelGrid LinkSimulator::channel(std::uint64_t subframe, double snr_db, TapGains* taps) const {
  ChannelGrid grid;
  switch (cfg_.channel) {
    case ChannelKind::Awgn:
      grid = unit_channel(num_);
      break;
    case ChannelKind::Flat: {
      Rng rng(cfg_.seed, {static_cast<std::uint64_t>(Stream::FlatChannel), subframe});
      grid = flat_channel(basis_, num_, rng);
      break;
    }
    case ChannelKind::Tdl: {
      TapGains g = gen_tap_processes(profile_, fading_, basis_, num_.n_symb, num_.symbol_period_s(), subframe);
      grid = freq_response(g, profile_, num_);
      if (taps != nullptr) *taps = std::move(g);
      break;
    }
  }
  grid.set_snr_db(snr_db);
  return grid;
}

int LinkSimulator::select(const ChannelGrid& chan, Modulation transmitted, double* metric) const {
  const PortSelectionMetric m{cfg_.metric, cfg_.metric_beta, cfg_.metric_modulation.value_or(transmitted)};
  const std::vector<double> values = port_metric(chan, m);
  const int port = cfg_.fixed_port >= 0 ? cfg_.fixed_port : select_port(values);
  if (!std::isfinite(values[port])) raise(ErrorKind::Domain, "non-finite port metric");
  if (metric != nullptr) *metric = values[port];
  return port;
}

EqualizedGrid LinkSimulator::equalizer(const ChannelGrid& chan, int port) const {
  // Weights and noise statistics depend on the channel alone.
  return mmse_equalize(make_resource_grid(num_), chan, port);
}

bool LinkSimulator::transmit(const ChannelGrid& chan, const TapGains* taps, int port, const LinkFormat& format,
                             Rng& noise, std::uint64_t payload_key, std::uint64_t subframe) const {
  Rng payload_rng(cfg_.seed, {static_cast<std::uint64_t>(Stream::Payload), payload_key});
  const Bits payload = payload_rng.bits(static_cast<std::size_t>(format.tbs));
  const std::uint32_t c_init = default_c_init(cfg_.seed, subframe);
  const Constellation& c = constellation(format.modulation);
  const CodedTransportBlock tb = encode_transport(payload, format.plan, c_init, c);
  const ResourceGrid tx = map_to_grid(tb.symbols, num_);

  ResourceGrid rx;
  if (cfg_.path == ChannelPath::Time) {
    if (taps == nullptr) raise(ErrorKind::Configuration, "time path needs tap gains");
    const std::vector<cdouble> stream = ofdm_modulate(tx, num_);
    const std::vector<cdouble> out = apply_channel_time(stream, *taps, port, profile_, num_, chan.noise_var(), &noise);
    rx = ofdm_demodulate(out, num_);
    rx.data_mask = tx.data_mask;
  } else {
    rx = apply_channel_freq(tx, chan, port, noise);
  }
  const EqualizedGrid eq = mmse_equalize(rx, chan, port);
  const std::vector<float> llr = demap_maxlog(eq.y_tilde, eq.sigma_tilde2, c);
  const DecodeResult res = decode_transport(llr, format.plan, c_init, cfg_.max_iterations);
  return !res.crc_ok || res.payload != payload;
}

BlockResult LinkSimulator::run_block(double snr_db, int snr_index, std::uint64_t block) const {
  BlockResult out;
  TapGains taps;
  const bool time_path = cfg_.path == ChannelPath::Time;
  const ChannelGrid chan = channel(block, snr_db, time_path ? &taps : nullptr);
  Rng noise(cfg_.seed, {static_cast<std::uint64_t>(Stream::Noise), static_cast<std::uint64_t>(snr_index), block});

  const LinkFormat* format = nullptr;
  if (cfg_.mode == LinkMode::Amc) {
    out.port = select(chan, cfg_.metric_modulation.value_or(Modulation::Qpsk), &out.port_metric);
    out.cqi = report_cqi(equalizer(chan, out.port), *lut_, cfg_.cqi_rule);
    const std::optional<McsEntry> mcs = select_mcs(out.cqi, cqi_table_, mcs_table_);
    if (!mcs) return out;  // out of range: nothing is sent
    out.mcs = mcs->index;
    format = &mcs_format(mcs->index);
  } else {
    format = cfg_.mode == LinkMode::Mcs ? &mcs_format(cfg_.mcs) : &cqi_format(cfg_.cqi);
    out.port = select(chan, format->modulation, &out.port_metric);
    out.mcs = cfg_.mode == LinkMode::Mcs ? cfg_.mcs : -1;
    out.cqi = cfg_.mode == LinkMode::Cqi ? cfg_.cqi : -1;
  }
  out.transmitted = true;
  out.tbs = format->tbs;
  out.error = transmit(chan, time_path ? &taps : nullptr, out.port, *format, noise, block, block);
  return out;
}

// ---- engine ----

void parallel_for(long n, int workers, const std::function<void(long)>& fn) {
  if (n <= 0) return;
  const int threads = static_cast<int>(std::min<long>(std::max(workers, 1), n));
  if (threads == 1) {
    for (long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&] {
    for (long i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (int t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

CampaignResult run_campaign(const CampaignConfig& cfg, const AmcLut* lut) {
  cfg.validate();
  std::optional<AmcLut> owned;
  if (cfg.mode == LinkMode::Amc && lut == nullptr) {
    owned = AmcLut::load(cfg.lut);
    lut = &*owned;
  }
  const LinkSimulator sim(cfg, lut);
  CampaignResult result;
  result.config = cfg;
  const std::vector<double> snrs = cfg.sweep.points();
  const long batch = std::max<long>(16, 4L * cfg.workers);
  for (std::size_t si = 0; si < snrs.size(); ++si) {
    BlerPoint p;
    p.snr_db = snrs[si];
    double delivered = 0.0;
    double metric_sum = 0.0;
    bool done = false;
    for (long first = 0; !done && first < cfg.stopping.max_blocks; first += batch) {
      const long n = std::min(batch, cfg.stopping.max_blocks - first);
      std::vector<BlockResult> blocks(static_cast<std::size_t>(n));
      parallel_for(n, cfg.workers, [&](long i) {
        blocks[i] = sim.run_block(snrs[si], static_cast<int>(si), static_cast<std::uint64_t>(first + i));
      });
      // Blocks past the stopping point are discarded, so the tally is the
      // same for any worker count.
      for (const BlockResult& b : blocks) {
        ++p.blocks;
        if (b.error) ++p.block_errors;
        if (b.transmitted && !b.error) delivered += b.tbs;
        metric_sum += b.port_metric;
        if (cfg.stopping.done(p.blocks, p.block_errors)) {
          done = true;
          break;
        }
      }
    }
    p.bler = static_cast<double>(p.block_errors) / static_cast<double>(p.blocks);
    p.throughput_bps = delivered / static_cast<double>(p.blocks) / 1e-3;
    p.mean_selected_port_metric = metric_sum / static_cast<double>(p.blocks);
    if (!std::isfinite(p.bler) || !std::isfinite(p.throughput_bps) || !std::isfinite(p.mean_selected_port_metric))
      raise(ErrorKind::Domain, "non-finite statistic at " + fmt(p.snr_db) + " dB");
    result.points.push_back(p);
    if (p.bler < cfg.sweep.stop_bler) break;
  }
  return result;
}

CampaignResult run_throughput(const CampaignConfig& cfg) {
  CampaignConfig c = cfg;
  if (cfg.throughput_method == ThroughputMethod::Adaptive) {
    c.mode = LinkMode::Amc;
    return run_campaign(c);
  }
  cfg.validate();
  constexpr double kTarget = 0.1;
  c.mode = LinkMode::Cqi;
  c.sweep.stop_bler = kTarget;
  CampaignResult result;
  result.config = cfg;
  const double step = cfg.sweep.step_db;
  double start = cfg.sweep.start_db;
  for (int q = 1; q < 16; ++q) {
    c.cqi = q;
    // Thresholds rise with the CQI, so each sweep starts a step below the
    // previous one on the same grid; if that is already past the target the
    // full sweep is rerun.
    c.sweep.start_db = start;
    std::vector<BlerPoint> pts = run_campaign(c).points;
    if (start > cfg.sweep.start_db && !pts.empty() && pts.front().bler < kTarget) {
      c.sweep.start_db = cfg.sweep.start_db;
      pts = run_campaign(c).points;
    }
    std::vector<CurvePoint> curve;
    BlerPoint row;
    for (const auto& p : pts) {
      curve.push_back({p.snr_db, p.blocks, p.block_errors});
      row.blocks += p.blocks;
      row.block_errors += p.block_errors;
    }
    double snr = fit_threshold(curve, kTarget);
    // an error-free final point leaves no log-domain crossing; take its SNR
    if (std::isnan(snr) && !pts.empty() && pts.back().bler < kTarget && pts.size() > 1) snr = pts.back().snr_db;
    if (std::isnan(snr)) break;  // higher CQIs cannot reach the target either
    const LinkSimulator sim(c);
    row.snr_db = snr;
    row.bler = kTarget;
    row.throughput_bps = (1.0 - kTarget) * sim.cqi_format(q).tbs / 1e-3;
    row.mean_selected_port_metric = pts.back().mean_selected_port_metric;
    row.cqi = q;
    result.points.push_back(row);
    const long k = static_cast<long>(std::floor((snr - cfg.sweep.start_db) / step)) - 1;
    start = cfg.sweep.start_db + step * static_cast<double>(std::max(0L, k));
  }
  return result;
}

double throughput_at(std::span<const BlerPoint> points, double snr_db) {
  std::vector<BlerPoint> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.snr_db < b.snr_db; });
  if (pts.empty() || snr_db < pts.front().snr_db) return 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (snr_db <= pts[i].snr_db) {
      const double t = (snr_db - pts[i - 1].snr_db) / (pts[i].snr_db - pts[i - 1].snr_db);
      return pts[i - 1].throughput_bps + t * (pts[i].throughput_bps - pts[i - 1].throughput_bps);
    }
  return pts.back().throughput_bps;
}

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

AmcLut build_awgn_lut(const CampaignConfig& cfg) {
  cfg.validate();
  CampaignConfig awgn = cfg;
  awgn.channel = ChannelKind::Awgn;
  awgn.path = ChannelPath::Frequency;
  awgn.geometry = FasGeometry{1, 1, cfg.geometry.w1, cfg.geometry.w2};
  awgn.fixed_port = -1;
  awgn.mode = LinkMode::Cqi;
  const LinkSimulator sim(awgn);

  AmcLut lut;
  lut.cqi = load_cqi_table();
  lut.curves.assign(lut.cqi.size(), {});
  lut.blocks_per_point = cfg.lut_build.blocks_per_point;
  lut.seed = cfg.seed;
  lut.n_prb = sim.numerology().n_prb;
  lut.created = utc_now();
  for (auto& e : lut.cqi) e.threshold_db = std::numeric_limits<double>::quiet_NaN();
  lut.cqi[0].threshold_db = -std::numeric_limits<double>::infinity();

  const AwgnSimulator simulate = [&](int cqi, double snr_db, long blocks) -> long {
    const LinkFormat& format = sim.cqi_format(cqi);
    const ChannelGrid chan = sim.channel(0, snr_db);
    const std::uint64_t snr_key = std::bit_cast<std::uint64_t>(snr_db);
    std::vector<std::uint8_t> err(static_cast<std::size_t>(blocks));
    parallel_for(blocks, cfg.workers, [&](long i) {
      const auto b = static_cast<std::uint64_t>(i);
      Rng noise(cfg.seed, {static_cast<std::uint64_t>(Stream::Noise), 1000U + static_cast<std::uint64_t>(cqi), snr_key, b});
      const std::uint64_t payload_key = (static_cast<std::uint64_t>(cqi) << 40) | b;
      err[i] = sim.transmit(chan, nullptr, 0, format, noise, payload_key, b) ? 1 : 0;
    });
    long errors = 0;
    for (auto e : err) errors += e;
    return errors;
  };

  for (int cqi : cfg.lut_cqis.empty() ? all_cqis() : cfg.lut_cqis) {
    lut.curves[cqi] = sweep_awgn_curve(cqi, lut.cqi[cqi], cfg.lut_build, simulate);
    const double thr = fit_threshold(lut.curves[cqi], cfg.lut_build.target_bler);
    if (std::isnan(thr)) raise(ErrorKind::Calibration, "no BLER bracket for CQI " + std::to_string(cqi));
    lut.cqi[cqi].threshold_db = thr;
    lut.cqi[cqi].alpha = 1.0;
  }
  return lut;
}

CalibrationResult calibrate_amc(const CampaignConfig& cfg, const AmcLut& lut) {
  cfg.validate();
  CampaignConfig c = cfg;
  c.mode = LinkMode::Cqi;
  const LinkSimulator sim(c);
  const bool time_path = c.path == ChannelPath::Time;

  CalibrationResult result;
  result.lut = lut;
  const std::vector<int> cqis = cfg.calibration_cqis.empty() ? all_cqis() : cfg.calibration_cqis;
  for (int cqi : cqis) {
    const CqiEntry& entry = lut.cqi.at(cqi);
    if (!entry.modulation || std::isnan(entry.threshold_db))
      raise(ErrorKind::Calibration, "LUT has no threshold for CQI " + std::to_string(cqi));
    const LinkFormat& format = sim.cqi_format(cqi);
    const CapacityTable& table = CapacityTable::get(*entry.modulation);
    std::vector<CalibrationRecord> recs(static_cast<std::size_t>(cfg.realizations));

    parallel_for(cfg.realizations, cfg.workers, [&](long r) {
      const auto sub = static_cast<std::uint64_t>(r);
      TapGains taps;
      ChannelGrid chan = sim.channel(sub, 0.0, time_path ? &taps : nullptr);
      // raw Gamma_eff rises with theta; bisect theta onto the threshold.
      auto raw_db = [&](double theta_db, int* port) {
        chan.set_snr_db(theta_db);
        *port = sim.select(chan, *entry.modulation);
        const GridCapacity cap = bicm_capacity_grid(sim.equalizer(chan, *port), table);
        return linear_to_db(effective_snr(cap, 1.0, table));
      };
      int port = 0;
      double lo = -40.0;
      double hi = 70.0;
      for (int it = 0; it < 60 && hi - lo > 1e-6; ++it) {
        const double mid = 0.5 * (lo + hi);
        (raw_db(mid, &port) < entry.threshold_db ? lo : hi) = mid;
      }
      const double theta = 0.5 * (lo + hi);
      CalibrationRecord& rec = recs[r];
      rec.cqi = cqi;
      rec.realization = static_cast<int>(r);
      rec.theta_db = theta;
      rec.raw_snr_db = raw_db(theta, &port);
      rec.blocks = cfg.blocks_per_realization;
      for (long j = 0; j < cfg.blocks_per_realization; ++j) {
        const auto jj = static_cast<std::uint64_t>(j);
        Rng noise(cfg.seed, {static_cast<std::uint64_t>(Stream::Noise), 2000U + static_cast<std::uint64_t>(cqi), sub, jj});
        const std::uint64_t payload_key = (1ULL << 62) | (static_cast<std::uint64_t>(cqi) << 40) | (sub << 20) | jj;
        if (sim.transmit(chan, time_path ? &taps : nullptr, port, format, noise, payload_key, sub)) ++rec.errors;
      }
      // Jeffreys estimate keeps zero and full error counts finite on the curve.
      const double bler = (static_cast<double>(rec.errors) + 0.5) / (static_cast<double>(rec.blocks) + 1.0);
      rec.target_snr_db = lut.awgn_snr_for_bler(cqi, bler);
    });

    std::vector<CalibrationSample> samples;
    samples.reserve(recs.size());
    for (const auto& rec : recs) samples.push_back({db_to_linear(rec.raw_snr_db), db_to_linear(rec.target_snr_db)});
    result.lut.cqi[cqi].alpha = calibrate_alpha(samples);
    result.records.insert(result.records.end(), recs.begin(), recs.end());
  }
  return result;
}

// ---- output ----

std::string points_csv(const CampaignConfig& cfg, const std::vector<BlerPoint>& points) {
  std::ostringstream o;
  o << "snr_db,blocks,block_errors,bler,throughput_bps,cqi_mode,k1,k2,w1,w2,ds_ns,fd_hz,bw_mhz,seed\n";
  char line[512];
  for (const auto& p : points) {
    std::snprintf(line, sizeof line, "%.4f,%ld,%ld,%.8g,%.8g,%s,%d,%d,%.6g,%.6g,%.6g,%.6g,%.6g,%llu\n", p.snr_db,
                  p.blocks, p.block_errors, p.bler, p.throughput_bps,
                  (p.cqi >= 0 ? "cqi" + std::to_string(p.cqi) : cfg.mode_label()).c_str(), cfg.geometry.k1,
                  cfg.geometry.k2, cfg.geometry.w1, cfg.geometry.w2, cfg.delay_spread_ns, cfg.doppler_hz,
                  cfg.bandwidth_mhz, static_cast<unsigned long long>(cfg.seed));
    o << line;
  }
  return o.str();
}

std::string calibration_csv(const std::vector<CalibrationRecord>& records) {
  std::ostringstream o;
  o << "cqi,realization,theta_db,raw_snr_db,blocks,errors,target_snr_db\n";
  char line[256];
  for (const auto& r : records) {
    std::snprintf(line, sizeof line, "%d,%d,%.6f,%.6f,%ld,%ld,%.6f\n", r.cqi, r.realization, r.theta_db, r.raw_snr_db,
                  r.blocks, r.errors, r.target_snr_db);
    o << line;
  }
  return o.str();
}

std::string sidecar_json(const CampaignConfig& cfg, const std::string& result_file) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["fassim_version"] = kVersion;
  j["result"] = result_file;
  j["config"] = serialize_config(cfg);
  auto& assets = j["assets"];
  const std::string root = data_dir();
  auto add = [&](const std::string& rel) {
    assets[rel] = hex64(fnv1a64(read_text_file(root + "/" + rel)));
  };
  add("ldpc/bg1.txt");
  add("ldpc/bg2.txt");
  add("tables/cqi.txt");
  add("tables/mcs.txt");
  add("tables/tbs.txt");
  add("tables/numerology.txt");
  if (cfg.channel == ChannelKind::Tdl) add("tdl/" + cfg.profile + ".txt");
  if (!cfg.lut.empty()) assets[cfg.lut] = hex64(fnv1a64(read_text_file(resolve_data_path(cfg.lut))));
  j["checksum_algorithm"] = "fnv1a64";
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) raise(ErrorKind::Io, "short write to " + path);
}

// ---- presets ----

namespace {

std::string wtag(double w) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", w);
  std::string s = buf;
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

CampaignConfig bler_base() {
  CampaignConfig c;
  c.scenario = Scenario::Bler;
  c.mode = LinkMode::Mcs;
  c.mcs = 7;
  c.sweep = SnrSweep{-10.0, 30.0, 1.0, 1e-3};
  c.stopping = StoppingRule{100, 100, 10000};
  return c;
}

void finish(CampaignConfig& c, const std::string& name) {
  c.name = name;
  c.output = name + ".csv";
  c.validate();
}

}  // namespace

std::vector<CampaignConfig> figure_preset(const std::string& name) {
  std::vector<CampaignConfig> out;
  // Desk scale: at most 8x8 ports except where a figure's full size is
  // listed explicitly.
  const int desk_k = 8;
  if (name == "fig2") {
    for (double w : {0.2, 1.0, 5.0})
      for (int k : {1, 2, 4, 6, desk_k}) {
        CampaignConfig c = bler_base();
        c.geometry = FasGeometry{k, k, w, w};
        finish(c, "fig2_w" + wtag(w) + "_k" + std::to_string(k) + "x" + std::to_string(k));
        out.push_back(c);
      }
  } else if (name == "fig3") {
    for (int k : {2, 5, desk_k})
      for (double w : {0.2, 0.5, 1.0, 2.0, 5.0}) {
        CampaignConfig c = bler_base();
        c.geometry = FasGeometry{k, k, w, w};
        finish(c, "fig3_k" + std::to_string(k) + "x" + std::to_string(k) + "_w" + wtag(w));
        out.push_back(c);
      }
  } else if (name == "fig4") {
    for (int k : {20, desk_k})
      for (double w : {1.0, 5.0})
        for (double bw : {1.4, 5.0, 10.0, 20.0}) {
          CampaignConfig c = bler_base();
          c.geometry = FasGeometry{k, k, w, w};
          c.bandwidth_mhz = bw;
          finish(c, "fig4_k" + std::to_string(k) + "x" + std::to_string(k) + "_w" + wtag(w) + "_bw" + wtag(bw));
          out.push_back(c);
        }
  } else if (name == "fig5") {
    for (double w : {1.0, 5.0})
      for (double ds : {10.0, 30.0, 100.0, 300.0, 1000.0}) {
        CampaignConfig c = bler_base();
        c.geometry = FasGeometry{desk_k, desk_k, w, w};
        c.delay_spread_ns = ds;
        // Long delay spreads overrun the cyclic prefix; only the time path
        // models the resulting interference.
        c.path = ChannelPath::Time;
        finish(c, "fig5_w" + wtag(w) + "_ds" + wtag(ds));
        out.push_back(c);
      }
  } else if (name == "fig6") {
    for (double w : {1.0, 5.0})
      for (double fd : {0.0, 30.0, 100.0, 300.0, 1000.0}) {
        CampaignConfig c = bler_base();
        c.geometry = FasGeometry{desk_k, desk_k, w, w};
        c.doppler_hz = fd;
        finish(c, "fig6_w" + wtag(w) + "_fd" + wtag(fd));
        out.push_back(c);
      }
  } else if (name == "fig8") {
    for (double bw : {5.0, 20.0}) {
      std::vector<FasGeometry> geoms = {FasGeometry{1, 1, 1.0, 1.0}};
      for (double w : {0.2, 1.0, 5.0}) geoms.push_back(FasGeometry{desk_k, desk_k, w, w});
      for (const auto& g : geoms) {
        CampaignConfig c;
        c.scenario = Scenario::Throughput;
        c.throughput_method = ThroughputMethod::BlerTarget;
        c.geometry = g;
        c.bandwidth_mhz = bw;
        c.sweep = SnrSweep{-10.0, 40.0, 1.0, 0.1};
        c.stopping = StoppingRule{100, 100, 5000};
        const std::string geo = g.ports() == 1 ? "fpa" : "k" + std::to_string(g.k1) + "x" + std::to_string(g.k2) + "_w" + wtag(g.w1);
        finish(c, "fig8_bw" + wtag(bw) + "_" + geo);
        out.push_back(c);
      }
    }
  } else {
    raise(ErrorKind::Configuration, "unknown figure preset '" + name + "'");
  }
  return out;
}

}  // namespace fassim
