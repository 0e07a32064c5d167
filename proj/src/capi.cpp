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

#include "tmgas/tmgas.h"

#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "config.hpp"
#include "ensemble.hpp"
#include "experiments.hpp"
#include "rng.hpp"

struct tmgas_config {
  tmgas::ExperimentConfig config;
  std::string digest;
  std::string json;
};

struct tmgas_ensemble {
  tmgas::Ensemble ensemble;
};

struct tmgas_report {
  tmgas::VerificationReport report;
  std::string json;
  std::string table;
};

namespace {

thread_local std::string last_error;

tmgas_status status_of(tmgas::Error::Kind kind) {
  switch (kind) {
    case tmgas::Error::Kind::invalid_argument:
      return TMGAS_ERR_INVALID_ARGUMENT;
    case tmgas::Error::Kind::config:
      return TMGAS_ERR_CONFIG;
    case tmgas::Error::Kind::io:
      return TMGAS_ERR_IO;
    case tmgas::Error::Kind::corrupted_state:
      return TMGAS_ERR_CORRUPTED_STATE;
    case tmgas::Error::Kind::precondition:
      return TMGAS_ERR_PRECONDITION;
    case tmgas::Error::Kind::runtime:
      return TMGAS_ERR_RUNTIME;
  }
  return TMGAS_ERR_RUNTIME;
}

template <class F>
tmgas_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return TMGAS_OK;
  } catch (const tmgas::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return TMGAS_ERR_RUNTIME;
  } catch (const std::exception& e) {
    last_error = e.what();
    return TMGAS_ERR_RUNTIME;
  }
}

tmgas_status null_handle(const char* what) {
  last_error = std::string("null ") + what;
  return TMGAS_ERR_NULL_HANDLE;
}

void refresh(tmgas_config* c) {
  c->digest = tmgas::config_digest(c->config);
  c->json = tmgas::config_to_json(c->config).dump(2);
}

tmgas_report* make_report(tmgas::VerificationReport r) {
  auto* out = new tmgas_report{std::move(r), {}, {}};
  out->json = tmgas::to_json(out->report).dump(2);
  out->table = tmgas::format_table(out->report);
  return out;
}

tmgas_status finish_config(tmgas::ExperimentConfig parsed, tmgas_config** out) {
  tmgas::validate_config(parsed);
  auto c = std::make_unique<tmgas_config>();
  c->config = std::move(parsed);
  refresh(c.get());
  *out = c.release();
  return TMGAS_OK;
}

}  // namespace

extern "C" {

const char* tmgas_last_error(void) { return last_error.c_str(); }

const char* tmgas_status_name(tmgas_status status) {
  switch (status) {
    case TMGAS_OK:
      return "ok";
    case TMGAS_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case TMGAS_ERR_CONFIG:
      return "config error";
    case TMGAS_ERR_IO:
      return "i/o error";
    case TMGAS_ERR_CORRUPTED_STATE:
      return "corrupted state";
    case TMGAS_ERR_PRECONDITION:
      return "precondition failed";
    case TMGAS_ERR_RUNTIME:
      return "runtime error";
    case TMGAS_ERR_NULL_HANDLE:
      return "null handle";
  }
  return "unknown status";
}

tmgas_status tmgas_config_load(const char* path, tmgas_config** out) {
  if (!path || !out) return null_handle("argument");
  *out = nullptr;
  return guarded([&] { finish_config(tmgas::load_config(path), out); });
}

tmgas_status tmgas_config_parse(const char* json, tmgas_config** out) {
  if (!json || !out) return null_handle("argument");
  *out = nullptr;
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json);
    } catch (const nlohmann::json::exception& e) {
      throw tmgas::ConfigError(std::string("config: ") + e.what());
    }
    finish_config(tmgas::config_from_json(j), out);
  });
}

void tmgas_config_free(tmgas_config* config) { delete config; }

tmgas_status tmgas_config_set_seed(tmgas_config* config, uint64_t seed) {
  if (!config) return null_handle("config");
  config->config.params.master_seed = seed;
  refresh(config);
  return TMGAS_OK;
}

tmgas_status tmgas_config_set_threads(tmgas_config* config, int threads) {
  if (!config) return null_handle("config");
  if (threads < 0) {
    last_error = "threads must be >= 0";
    return TMGAS_ERR_INVALID_ARGUMENT;
  }
  config->config.threads = threads;
  refresh(config);
  return TMGAS_OK;
}

tmgas_status tmgas_config_set_output_dir(tmgas_config* config, const char* dir) {
  if (!config || !dir) return null_handle("argument");
  config->config.output_dir = dir;
  refresh(config);
  return TMGAS_OK;
}

const char* tmgas_config_output_dir(const tmgas_config* config) {
  return config ? config->config.output_dir.c_str() : "";
}

const char* tmgas_config_digest(const tmgas_config* config) { return config ? config->digest.c_str() : ""; }

const char* tmgas_config_json(const tmgas_config* config) { return config ? config->json.c_str() : ""; }

tmgas_status tmgas_simulate(const tmgas_config* config, tmgas_ensemble** out) {
  if (!config || !out) return null_handle("argument");
  *out = nullptr;
  return guarded([&] {
    const auto& c = config->config;
    auto e = std::make_unique<tmgas_ensemble>();
    e->ensemble = tmgas::run_ensemble(c.params, c.model, c.n_trajectories, c.shells, c.threads,
                                      tmgas::density_stream_key(c.params.n));
    *out = e.release();
  });
}

void tmgas_ensemble_free(tmgas_ensemble* ensemble) { delete ensemble; }

int64_t tmgas_ensemble_size(const tmgas_ensemble* ensemble) {
  return ensemble ? static_cast<int64_t>(ensemble->ensemble.set.records.size()) : 0;
}

int64_t tmgas_ensemble_collisions(const tmgas_ensemble* ensemble) {
  return ensemble ? ensemble->ensemble.stats.collisions : 0;
}

tmgas_status tmgas_ensemble_write(const tmgas_config* config, const tmgas_ensemble* ensemble, const char* dir) {
  if (!config || !ensemble || !dir) return null_handle("argument");
  return guarded([&] { tmgas::write_ensemble(config->config, ensemble->ensemble, dir); });
}

tmgas_status tmgas_ensemble_summary(const tmgas_config* config, const tmgas_ensemble* ensemble, tmgas_report** out) {
  if (!config || !ensemble || !out) return null_handle("argument");
  *out = nullptr;
  return guarded([&] { *out = make_report(tmgas::summarize_ensemble(config->config, ensemble->ensemble)); });
}

tmgas_status tmgas_ensemble_estimate(const tmgas_ensemble* ensemble, const char* observable_json, size_t t_index,
                                     const char* method, double param, tmgas_estimate* out) {
  if (!ensemble || !observable_json || !method || !out) return null_handle("argument");
  return guarded([&] {
    const auto& set = ensemble->ensemble.set;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(observable_json);
    } catch (const nlohmann::json::exception& e) {
      throw tmgas::ConfigError(std::string("observable: ") + e.what());
    }
    const tmgas::Observable g = tmgas::observable_from_json(j, set.params);
    const std::string m = method;
    tmgas::EstimateWithError e;
    if (m == "plain") {
      e = tmgas::plain_estimate(set, g, t_index);
    } else if (m == "score" || m == "cumulant") {
      const int k = static_cast<int>(param);
      if (static_cast<double>(k) != param) throw tmgas::InvalidArgument("order must be an integer");
      e = m == "score" ? tmgas::score_derivative(set, g, t_index, k) : tmgas::integrated_cumulant(set, g, t_index, k);
    } else if (m == "reweighted") {
      e = tmgas::reweight_to_density(set, param, g, t_index);
    } else {
      throw tmgas::InvalidArgument("unknown estimator method '" + m + "'");
    }
    *out = tmgas_estimate{e.value, e.std_error, e.n_samples, e.k, e.ess.has_value() ? 1 : 0, e.ess.value_or(0.0)};
  });
}

tmgas_status tmgas_write_event_log(const tmgas_config* config, int64_t trajectory, const char* path) {
  if (!config || !path) return null_handle("argument");
  return guarded([&] {
    const auto& c = config->config;
    if (c.model != tmgas::Model::exact) throw tmgas::PreconditionError("event logs exist only for the exact model");
    if (trajectory < 0) throw tmgas::InvalidArgument("trajectory index must be >= 0");
    tmgas::validate_params(c.params);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw tmgas::IoError(std::string("cannot write '") + path + "'");
    tmgas::write_event_log_header(os);
    tmgas::TrajectoryOptions options;
    options.shell_edges = c.shells;
    options.observer = tmgas::make_csv_event_log(os);
    tmgas::Xoshiro256pp rng = tmgas::make_stream(c.params.master_seed, tmgas::density_stream_key(c.params.n),
                                                 static_cast<std::uint64_t>(trajectory));
    tmgas::run_exact_trajectory(c.params, rng, c.params.sample_times, options);
    if (!os) throw tmgas::IoError(std::string("failed writing '") + path + "'");
  });
}

tmgas_status tmgas_run_experiment(const tmgas_config* config, tmgas_experiment experiment, int order,
                                  tmgas_report** out) {
  if (!config || !out) return null_handle("argument");
  *out = nullptr;
  return guarded([&] {
    const auto& c = config->config;
    tmgas::VerificationReport r;
    switch (experiment) {
      case TMGAS_VERIFY_LEMMA:
        r = tmgas::verify_lemma(c, order > 0 ? order : c.order);
        break;
      case TMGAS_GEN_FUNC:
        r = tmgas::gen_func_check(c);
        break;
      case TMGAS_BG_COLLAPSE:
        r = tmgas::bg_collapse(c);
        break;
      case TMGAS_BL_POLYNOMIALITY:
        r = tmgas::bl_polynomiality(c);
        break;
      case TMGAS_PROFILE:
        r = tmgas::profile(c);
        break;
      default:
        throw tmgas::InvalidArgument("unknown experiment");
    }
    *out = make_report(std::move(r));
  });
}

void tmgas_report_free(tmgas_report* report) { delete report; }

int tmgas_report_passed(const tmgas_report* report) { return report && report->report.pass ? 1 : 0; }

const char* tmgas_report_json(const tmgas_report* report) { return report ? report->json.c_str() : ""; }

const char* tmgas_report_table(const tmgas_report* report) { return report ? report->table.c_str() : ""; }

tmgas_status tmgas_report_write(const tmgas_report* report, const char* dir) {
  if (!report || !dir) return null_handle("argument");
  return guarded([&] { tmgas::write_report(report->report, dir); });
}

}  // extern "C"
