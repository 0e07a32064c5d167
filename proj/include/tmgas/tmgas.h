// Copyright 2026 The tmgas Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TMGAS_TMGAS_H_
#define TMGAS_TMGAS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(TMGAS_BUILDING_LIBRARY)
#define TMGAS_API __attribute__((visibility("default")))
#else
#define TMGAS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct tmgas_config tmgas_config;
typedef struct tmgas_ensemble tmgas_ensemble;
typedef struct tmgas_report tmgas_report;

typedef enum tmgas_status {
  TMGAS_OK = 0,
  TMGAS_ERR_INVALID_ARGUMENT = 1,
  TMGAS_ERR_CONFIG = 2,
  TMGAS_ERR_IO = 3,
  TMGAS_ERR_CORRUPTED_STATE = 4,
  TMGAS_ERR_PRECONDITION = 5,
  TMGAS_ERR_RUNTIME = 6,
  TMGAS_ERR_NULL_HANDLE = 7
} tmgas_status;

typedef enum tmgas_experiment {
  TMGAS_VERIFY_LEMMA = 0,
  TMGAS_GEN_FUNC = 1,
  TMGAS_BG_COLLAPSE = 2,
  TMGAS_BL_POLYNOMIALITY = 3,
  TMGAS_PROFILE = 4
} tmgas_experiment;

typedef struct tmgas_estimate {
  double value;
  double std_error;
  int64_t n_samples;
  int k;
  int has_ess;
  double ess;
} tmgas_estimate;

/* Message of the last failed call on this thread; never NULL. */
TMGAS_API const char* tmgas_last_error(void);
TMGAS_API const char* tmgas_status_name(tmgas_status status);

/* Configuration. */
TMGAS_API tmgas_status tmgas_config_load(const char* path, tmgas_config** out);
TMGAS_API tmgas_status tmgas_config_parse(const char* json, tmgas_config** out);
TMGAS_API void tmgas_config_free(tmgas_config* config);
TMGAS_API tmgas_status tmgas_config_set_seed(tmgas_config* config, uint64_t seed);
TMGAS_API tmgas_status tmgas_config_set_threads(tmgas_config* config, int threads);
TMGAS_API tmgas_status tmgas_config_set_output_dir(tmgas_config* config, const char* dir);
/* The returned strings live as long as the config or until it is modified. */
TMGAS_API const char* tmgas_config_output_dir(const tmgas_config* config);
TMGAS_API const char* tmgas_config_digest(const tmgas_config* config);
TMGAS_API const char* tmgas_config_json(const tmgas_config* config);

/* Ensembles at the config density, with the config shells. */
TMGAS_API tmgas_status tmgas_simulate(const tmgas_config* config, tmgas_ensemble** out);
TMGAS_API void tmgas_ensemble_free(tmgas_ensemble* ensemble);
TMGAS_API int64_t tmgas_ensemble_size(const tmgas_ensemble* ensemble);
TMGAS_API int64_t tmgas_ensemble_collisions(const tmgas_ensemble* ensemble);
/* Writes records.csv and manifest.json into `dir`. */
TMGAS_API tmgas_status tmgas_ensemble_write(const tmgas_config* config, const tmgas_ensemble* ensemble, const char* dir);
TMGAS_API tmgas_status tmgas_ensemble_summary(const tmgas_config* config, const tmgas_ensemble* ensemble,
                                              tmgas_report** out);
/* `method` is one of plain, score, cumulant, reweighted; `param` is the
   order k for score and cumulant and the tilt u for reweighted.
   `observable_json` uses the config syntax, e.g. "\"delta_sq\"". */
TMGAS_API tmgas_status tmgas_ensemble_estimate(const tmgas_ensemble* ensemble, const char* observable_json,
                                               size_t t_index, const char* method, double param, tmgas_estimate* out);

/* Re-runs one trajectory of the config ensemble and writes its collision log as CSV. */
TMGAS_API tmgas_status tmgas_write_event_log(const tmgas_config* config, int64_t trajectory, const char* path);

/* Experiments. `order` applies to verify-lemma; 0 takes it from the config. */
TMGAS_API tmgas_status tmgas_run_experiment(const tmgas_config* config, tmgas_experiment experiment, int order,
                                            tmgas_report** out);
TMGAS_API void tmgas_report_free(tmgas_report* report);
TMGAS_API int tmgas_report_passed(const tmgas_report* report);
TMGAS_API const char* tmgas_report_json(const tmgas_report* report);
TMGAS_API const char* tmgas_report_table(const tmgas_report* report);
/* Writes report.json and the figure CSVs into `dir`. */
TMGAS_API tmgas_status tmgas_report_write(const tmgas_report* report, const char* dir);

#ifdef __cplusplus
}
#endif

#endif  // TMGAS_TMGAS_H_
