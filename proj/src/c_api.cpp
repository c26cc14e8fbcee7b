// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

#include "fassim/fas_sim.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <filesystem>
#include <new>
#include <optional>
#include <string>

#include "fassim/capacity.hpp"
#include "fassim/harness.hpp"
#include "fassim/version.hpp"

struct fas_campaign {
  fassim::CampaignConfig config;
  std::vector<fassim::BlerPoint> points;
};

namespace {

thread_local std::string last_error;

fas_status status_of(fassim::ErrorKind kind) {
  using fassim::ErrorKind;
  switch (kind) {
    case ErrorKind::Bounds: return FAS_BOUNDS;
    case ErrorKind::Domain: return FAS_DOMAIN;
    case ErrorKind::Model: return FAS_MODEL;
    case ErrorKind::Configuration: return FAS_CONFIG;
    case ErrorKind::Framing: return FAS_FRAMING;
    case ErrorKind::DegenerateChannel: return FAS_DEGENERATE_CHANNEL;
    case ErrorKind::Calibration: return FAS_CALIBRATION;
    case ErrorKind::Asset: return FAS_ASSET;
    case ErrorKind::Io: return FAS_IO;
  }
  return FAS_INTERNAL;
}

fas_status fail(fas_status s, std::string msg) {
  last_error = std::move(msg);
  return s;
}

// Runs fn and turns any exception into a status; nothing crosses the C
// boundary.
template <class Fn>
fas_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return FAS_OK;
  } catch (const fassim::Error& e) {
    return fail(status_of(e.kind()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(FAS_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(FAS_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FAS_INTERNAL, e.what());
  } catch (...) {
    return fail(FAS_INTERNAL, "unknown exception");
  }
}

#define FAS_REQUIRE(cond, what) \
  if (!(cond)) return fail(FAS_INVALID_ARGUMENT, what)

std::string sibling(const std::string& path, const std::string& suffix) { return path + suffix; }

}  // namespace

extern "C" {

const char* fas_status_string(fas_status status) {
  switch (status) {
    case FAS_OK: return "ok";
    case FAS_INVALID_ARGUMENT: return "invalid argument";
    case FAS_BOUNDS: return "index out of bounds";
    case FAS_DOMAIN: return "value outside its domain";
    case FAS_MODEL: return "model error";
    case FAS_CONFIG: return "configuration error";
    case FAS_FRAMING: return "framing error";
    case FAS_DEGENERATE_CHANNEL: return "degenerate channel";
    case FAS_CALIBRATION: return "calibration error";
    case FAS_ASSET: return "asset error";
    case FAS_IO: return "I/O error";
    case FAS_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* fas_last_error(void) { return last_error.c_str(); }

const char* fas_version(void) { return fassim::kVersion; }

fas_status fas_campaign_load(const char* path, fas_campaign** out) {
  FAS_REQUIRE(path != nullptr && out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new fas_campaign{fassim::load_config(path), {}}; });
}

fas_status fas_campaign_parse(const char* ini_text, fas_campaign** out) {
  FAS_REQUIRE(ini_text != nullptr && out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new fas_campaign{fassim::parse_config(ini_text), {}}; });
}

fas_status fas_preset_count(const char* figure, size_t* count) {
  FAS_REQUIRE(figure != nullptr && count != nullptr, "null argument");
  return guarded([&] { *count = fassim::figure_preset(figure).size(); });
}

fas_status fas_campaign_from_preset(const char* figure, size_t index, fas_campaign** out) {
  FAS_REQUIRE(figure != nullptr && out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] {
    const auto all = fassim::figure_preset(figure);
    if (index >= all.size()) fassim::raise(fassim::ErrorKind::Bounds, "preset index out of range");
    *out = new fas_campaign{all[index], {}};
  });
}

void fas_campaign_destroy(fas_campaign* campaign) { delete campaign; }

fas_status fas_campaign_set_seed(fas_campaign* campaign, uint64_t seed) {
  FAS_REQUIRE(campaign != nullptr, "null campaign");
  campaign->config.seed = seed;
  return FAS_OK;
}

fas_status fas_campaign_set_workers(fas_campaign* campaign, int workers) {
  FAS_REQUIRE(campaign != nullptr, "null campaign");
  FAS_REQUIRE(workers >= 1, "workers must be at least 1");
  campaign->config.workers = workers;
  return FAS_OK;
}

fas_status fas_campaign_set_output(fas_campaign* campaign, const char* path) {
  FAS_REQUIRE(campaign != nullptr && path != nullptr, "null argument");
  campaign->config.output = path;
  return FAS_OK;
}

fas_status fas_campaign_set_scenario(fas_campaign* campaign, const char* scenario) {
  FAS_REQUIRE(campaign != nullptr && scenario != nullptr, "null argument");
  return guarded([&] { campaign->config.scenario = fassim::scenario_from_string(scenario); });
}

fas_status fas_campaign_set_lut(fas_campaign* campaign, const char* path) {
  FAS_REQUIRE(campaign != nullptr && path != nullptr, "null argument");
  campaign->config.lut = path;
  return FAS_OK;
}

fas_status fas_campaign_config(const fas_campaign* campaign, char* buf, size_t capacity, size_t* needed) {
  FAS_REQUIRE(campaign != nullptr, "null campaign");
  FAS_REQUIRE(buf != nullptr || capacity == 0, "null buffer");
  return guarded([&] {
    const std::string text = fassim::serialize_config(campaign->config);
    if (needed != nullptr) *needed = text.size() + 1;
    if (capacity > 0) {
      const std::size_t n = std::min(capacity - 1, text.size());
      std::memcpy(buf, text.data(), n);
      buf[n] = '\0';
    }
  });
}

fas_status fas_campaign_run(fas_campaign* campaign) {
  FAS_REQUIRE(campaign != nullptr, "null campaign");
  return guarded([&] {
    using fassim::Scenario;
    const fassim::CampaignConfig& cfg = campaign->config;
    cfg.validate();
    campaign->points.clear();
    switch (cfg.scenario) {
      case Scenario::Bler:
      case Scenario::Throughput: {
        const fassim::CampaignResult r =
            cfg.scenario == Scenario::Bler ? fassim::run_campaign(cfg) : fassim::run_throughput(cfg);
        campaign->points = r.points;
        if (!cfg.output.empty()) {
          fassim::write_text_file(cfg.output, fassim::points_csv(r.config, r.points));
          const std::string name = std::filesystem::path(cfg.output).filename().string();
          fassim::write_text_file(sibling(cfg.output, ".json"), fassim::sidecar_json(r.config, name));
        }
        break;
      }
      case Scenario::AwgnLut: {
        const fassim::AmcLut lut = fassim::build_awgn_lut(cfg);
        if (!cfg.output.empty()) lut.write(cfg.output);
        break;
      }
      case Scenario::CalibrateAmc: {
        const fassim::CalibrationResult r = fassim::calibrate_amc(cfg, fassim::AmcLut::load(cfg.lut));
        if (!cfg.output.empty()) {
          r.lut.write(cfg.output);
          fassim::write_text_file(sibling(cfg.output, ".records.csv"), fassim::calibration_csv(r.records));
        }
        break;
      }
    }
  });
}

fas_status fas_campaign_point_count(const fas_campaign* campaign, size_t* count) {
  FAS_REQUIRE(campaign != nullptr && count != nullptr, "null argument");
  *count = campaign->points.size();
  return FAS_OK;
}

fas_status fas_campaign_point(const fas_campaign* campaign, size_t index, fas_point* out) {
  FAS_REQUIRE(campaign != nullptr && out != nullptr, "null argument");
  if (index >= campaign->points.size()) return fail(FAS_BOUNDS, "point index out of range");
  const fassim::BlerPoint& p = campaign->points[index];
  *out = fas_point{p.snr_db, p.blocks, p.block_errors, p.bler, p.throughput_bps, p.mean_selected_port_metric};
  return FAS_OK;
}

fas_status fas_capacity_table_write(const char* modulation, const char* path) {
  FAS_REQUIRE(modulation != nullptr && path != nullptr, "null argument");
  return guarded([&] { fassim::CapacityTable::build(fassim::modulation_from_string(modulation)).write(path); });
}

fas_status fas_figure_preset_write(const char* figure, const char* dir) {
  FAS_REQUIRE(figure != nullptr && dir != nullptr, "null argument");
  return guarded([&] {
    std::filesystem::create_directories(dir);
    for (const auto& c : fassim::figure_preset(figure))
      fassim::write_text_file(std::string(dir) + "/" + c.name + ".ini", fassim::serialize_config(c));
  });
}

}  // extern "C"
