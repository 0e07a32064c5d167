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

// Command-line front end. Talks to the library only through the C API.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tmgas/tmgas.h"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitFail = 2;

struct Options {
  std::string config;
  std::string out;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  int order{0};
  std::optional<std::int64_t> event_log;
};

int fail(tmgas_status status) {
  std::fprintf(stderr, "error (%s): %s\n", tmgas_status_name(status), tmgas_last_error());
  return kExitError;
}

using ConfigPtr = std::unique_ptr<tmgas_config, decltype(&tmgas_config_free)>;
using ReportPtr = std::unique_ptr<tmgas_report, decltype(&tmgas_report_free)>;
using EnsemblePtr = std::unique_ptr<tmgas_ensemble, decltype(&tmgas_ensemble_free)>;

tmgas_status load(const Options& o, ConfigPtr& config) {
  tmgas_config* raw = nullptr;
  tmgas_status s = tmgas_config_load(o.config.c_str(), &raw);
  if (s != TMGAS_OK) return s;
  config.reset(raw);
  if (o.seed && (s = tmgas_config_set_seed(raw, *o.seed)) != TMGAS_OK) return s;
  if (o.threads && (s = tmgas_config_set_threads(raw, *o.threads)) != TMGAS_OK) return s;
  if (!o.out.empty() && (s = tmgas_config_set_output_dir(raw, o.out.c_str())) != TMGAS_OK) return s;
  return TMGAS_OK;
}

int finish_report(tmgas_report* raw, const char* out_dir) {
  ReportPtr report(raw, tmgas_report_free);
  std::fputs(tmgas_report_table(raw), stdout);
  const tmgas_status s = tmgas_report_write(raw, out_dir);
  if (s != TMGAS_OK) return fail(s);
  std::printf("report: %s/report.json\n", out_dir);
  return tmgas_report_passed(raw) ? kExitPass : kExitFail;
}

int run_simulate(const Options& o) {
  ConfigPtr config(nullptr, tmgas_config_free);
  tmgas_status s = load(o, config);
  if (s != TMGAS_OK) return fail(s);
  const char* out_dir = tmgas_config_output_dir(config.get());
  if (o.event_log) {
    std::filesystem::create_directories(out_dir);
    const std::string path = std::string(out_dir) + "/events_" + std::to_string(*o.event_log) + ".csv";
    if ((s = tmgas_write_event_log(config.get(), *o.event_log, path.c_str())) != TMGAS_OK) return fail(s);
    std::printf("event log: %s\n", path.c_str());
  }
  tmgas_ensemble* raw = nullptr;
  if ((s = tmgas_simulate(config.get(), &raw)) != TMGAS_OK) return fail(s);
  EnsemblePtr ensemble(raw, tmgas_ensemble_free);
  if ((s = tmgas_ensemble_write(config.get(), raw, out_dir)) != TMGAS_OK) return fail(s);
  tmgas_report* report = nullptr;
  if ((s = tmgas_ensemble_summary(config.get(), raw, &report)) != TMGAS_OK) return fail(s);
  std::printf("records: %s/records.csv\n", out_dir);
  return finish_report(report, out_dir);
}

int run_experiment(const Options& o, tmgas_experiment which) {
  ConfigPtr config(nullptr, tmgas_config_free);
  tmgas_status s = load(o, config);
  if (s != TMGAS_OK) return fail(s);
  tmgas_report* report = nullptr;
  if ((s = tmgas_run_experiment(config.get(), which, o.order, &report)) != TMGAS_OK) return fail(s);
  return finish_report(report, tmgas_config_output_dir(config.get()));
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->required();
  cmd->add_option("--out", o.out, "output directory (overrides the config)");
  cmd->add_option("--threads", o.threads, "worker threads, 0 = available parallelism")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", o.seed, "master seed (overrides the config)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Test-molecule gas simulator and lemma verification"};
  app.require_subcommand(1);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "run one ensemble and write records.csv and manifest.json");
  add_common(simulate, o);
  simulate->add_option("--event-log", o.event_log, "also write the collision log of this trajectory index");

  auto* lemma = app.add_subcommand("verify-lemma", "score derivative against finite differences in n");
  add_common(lemma, o);
  lemma->add_option("--order", o.order, "derivative order 1 or 2 (default: config)")->check(CLI::Range(1, 2));

  struct Sub {
    const char* name;
    const char* help;
    tmgas_experiment which;
  };
  const Sub subs[] = {
      {"gen-func", "reweighted estimates against direct simulation at (1+u) n", TMGAS_GEN_FUNC},
      {"bg-collapse", "(n, r0) against (4n, r0/2) at equal mean free path", TMGAS_BG_COLLAPSE},
      {"bl-polynomiality", "curvature in n of the bl mean squared displacement", TMGAS_BL_POLYNOMIALITY},
      {"profile", "shell-resolved correlation profile", TMGAS_PROFILE},
  };
  std::vector<std::pair<CLI::App*, tmgas_experiment>> experiments{{lemma, TMGAS_VERIFY_LEMMA}};
  for (const Sub& s : subs) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, o);
    experiments.emplace_back(cmd, s.which);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  if (*simulate) return run_simulate(o);
  for (const auto& [cmd, which] : experiments) {
    if (*cmd) return run_experiment(o, which);
  }
  return kExitError;
}
