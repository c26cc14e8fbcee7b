/* SPDX-License-Identifier: Apache-2.0 */
/* Copyright 2026 The fas-sim Authors */

/* C interface of the fas-sim link-level simulator. Every call returns a
 * status; on failure fas_last_error() holds a message for the calling
 * thread. */

#ifndef FASSIM_FAS_SIM_H
#define FASSIM_FAS_SIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(__GNUC__)
#define FAS_API __attribute__((visibility("default")))
#else
#define FAS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fas_status {
  FAS_OK = 0,
  FAS_INVALID_ARGUMENT = 1,
  FAS_BOUNDS = 2,
  FAS_DOMAIN = 3,
  FAS_MODEL = 4,
  FAS_CONFIG = 5,
  FAS_FRAMING = 6,
  FAS_DEGENERATE_CHANNEL = 7,
  FAS_CALIBRATION = 8,
  FAS_ASSET = 9,
  FAS_IO = 10,
  FAS_INTERNAL = 11
} fas_status;

typedef struct fas_campaign fas_campaign;

typedef struct fas_point {
  double snr_db;
  int64_t blocks;
  int64_t block_errors;
  double bler;
  double throughput_bps;
  double mean_port_metric; /* linear */
} fas_point;

FAS_API const char* fas_status_string(fas_status status);
FAS_API const char* fas_last_error(void);
FAS_API const char* fas_version(void);

FAS_API fas_status fas_campaign_load(const char* path, fas_campaign** out);
FAS_API fas_status fas_campaign_parse(const char* ini_text, fas_campaign** out);
/* Campaign `index` of a figure preset; fas_preset_count gives the range. */
FAS_API fas_status fas_preset_count(const char* figure, size_t* count);
FAS_API fas_status fas_campaign_from_preset(const char* figure, size_t index, fas_campaign** out);
FAS_API void fas_campaign_destroy(fas_campaign* campaign);

FAS_API fas_status fas_campaign_set_seed(fas_campaign* campaign, uint64_t seed);
FAS_API fas_status fas_campaign_set_workers(fas_campaign* campaign, int workers);
FAS_API fas_status fas_campaign_set_output(fas_campaign* campaign, const char* path);
/* "bler", "awgn-lut", "calibrate-amc" or "throughput". */
FAS_API fas_status fas_campaign_set_scenario(fas_campaign* campaign, const char* scenario);
FAS_API fas_status fas_campaign_set_lut(fas_campaign* campaign, const char* path);

/* Copies the resolved INI text into buf (NUL-terminated, truncated to
 * capacity). *needed receives the full length including the terminator. */
FAS_API fas_status fas_campaign_config(const fas_campaign* campaign, char* buf, size_t capacity, size_t* needed);

/* Runs the configured scenario. With an output path set, results are
 * written there: a CSV plus "<output>.json" metadata for BLER and
 * throughput runs, the LUT for awgn-lut and calibrate-amc (the latter also
 * writes "<output>.records.csv"). */
FAS_API fas_status fas_campaign_run(fas_campaign* campaign);
FAS_API fas_status fas_campaign_point_count(const fas_campaign* campaign, size_t* count);
FAS_API fas_status fas_campaign_point(const fas_campaign* campaign, size_t index, fas_point* out);

/* Writes the BICM capacity table of "QPSK", "16QAM" or "64QAM". */
FAS_API fas_status fas_capacity_table_write(const char* modulation, const char* path);
/* Writes one INI file per campaign of a figure preset into `dir`. */
FAS_API fas_status fas_figure_preset_write(const char* figure, const char* dir);

#ifdef __cplusplus
}
#endif

#endif
