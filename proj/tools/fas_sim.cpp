// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The fas-sim Authors

// fas-sim command line. Talks to the library through the C API only.

#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fassim/fas_sim.h"

namespace {

int report(fas_status s) {
  if (s == FAS_OK) return 0;
  const char* detail = fas_last_error();
  std::fprintf(stderr, "fas-sim: %s\n", *detail != '\0' ? detail : fas_status_string(s));
  return 2 + static_cast<int>(s);
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  std::string lut;
};

void add_common(CLI::App* cmd, std::string& config, Overrides& o) {
  cmd->add_option("--config,-c", config, "campaign INI file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--workers,-j", o.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out,-o", o.out, "output path");
}

int run(const std::string& config, const char* scenario, const Overrides& o) {
  fas_campaign* c = nullptr;
  if (fas_status s = fas_campaign_load(config.c_str(), &c); s != FAS_OK) return report(s);
  fas_status s = fas_campaign_set_scenario(c, scenario);
  if (s == FAS_OK && o.seed) s = fas_campaign_set_seed(c, *o.seed);
  if (s == FAS_OK && o.workers) s = fas_campaign_set_workers(c, *o.workers);
  if (s == FAS_OK && !o.out.empty()) s = fas_campaign_set_output(c, o.out.c_str());
  if (s == FAS_OK && !o.lut.empty()) s = fas_campaign_set_lut(c, o.lut.c_str());
  if (s == FAS_OK) s = fas_campaign_run(c);
  if (s == FAS_OK) {
    std::size_t n = 0;
    fas_campaign_point_count(c, &n);
    if (n > 0) std::printf("%10s %9s %9s %12s %14s\n", "snr_db", "blocks", "errors", "bler", "throughput");
    for (std::size_t i = 0; i < n; ++i) {
      fas_point p{};
      fas_campaign_point(c, i, &p);
      std::printf("%10.2f %9lld %9lld %12.4e %14.6g\n", p.snr_db, static_cast<long long>(p.blocks),
                  static_cast<long long>(p.block_errors), p.bler, p.throughput_bps);
    }
  }
  fas_campaign_destroy(c);
  return report(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fas-sim: link-level simulator for fluid-antenna receivers"};
  app.set_version_flag("--version", std::string(fas_version()));
  app.require_subcommand(1);

  std::string config;
  Overrides o;

  auto* bler = app.add_subcommand("simulate-bler", "BLER versus SNR");
  add_common(bler, config, o);
  auto* lut = app.add_subcommand("awgn-lut", "AWGN BLER curves and CQI thresholds");
  add_common(lut, config, o);
  auto* cal = app.add_subcommand("calibrate-amc", "fit the per-CQI effective-SNR scaling");
  add_common(cal, config, o);
  cal->add_option("--lut", o.lut, "input LUT");
  auto* tput = app.add_subcommand("throughput", "adaptive-modulation throughput versus SNR");
  add_common(tput, config, o);
  tput->add_option("--lut", o.lut, "LUT used for CQI reporting");

  std::string modulation;
  std::string cap_out;
  auto* cap = app.add_subcommand("capacity-table", "write a BICM capacity table");
  cap->add_option("--modulation,-m", modulation, "QPSK, 16QAM or 64QAM")->required();
  cap->add_option("--out,-o", cap_out, "output path")->required();

  std::string figure;
  std::string dir = ".";
  auto* preset = app.add_subcommand("figure-preset", "write the campaign files of a figure");
  preset->add_option("--name,-n", figure, "fig2, fig3, fig4, fig5, fig6 or fig8")->required();
  preset->add_option("--out,-o", dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (bler->parsed()) return run(config, "bler", o);
  if (lut->parsed()) return run(config, "awgn-lut", o);
  if (cal->parsed()) return run(config, "calibrate-amc", o);
  if (tput->parsed()) return run(config, "throughput", o);
  if (cap->parsed()) return report(fas_capacity_table_write(modulation.c_str(), cap_out.c_str()));
  if (preset->parsed()) return report(fas_figure_preset_write(figure.c_str(), dir.c_str()));
  return 1;
}
