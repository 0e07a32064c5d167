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

#include "ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "bl_dynamics.hpp"
#include "rng.hpp"

namespace tmgas {

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

Ensemble run_ensemble(const GasParams& params, Model model, std::int64_t n_trajectories,
                      const std::vector<double>& shell_edges, int threads, std::uint64_t stream_key,
                      std::int64_t first_index) {
  Ensemble out;
  validate_params(params, &out.stats.warnings);
  if (n_trajectories < 1) throw InvalidArgument("n_trajectories >= 1 violated");
  if (first_index < 0) throw InvalidArgument("first_index >= 0 violated");
  if (model == Model::bl && !shell_edges.empty()) throw InvalidArgument("shell counts need the exact model");
  out.stream_key = stream_key;
  out.set.params = params;
  out.set.model = model;
  out.set.shell_edges = shell_edges;

  const auto n = static_cast<std::size_t>(n_trajectories);
  std::vector<std::optional<TrajectoryRecord>> slots(n);
  std::vector<std::string> failures(n);
  std::atomic<std::size_t> next{0};
  TrajectoryOptions options;
  options.shell_edges = shell_edges;

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      Xoshiro256pp rng = make_stream(params.master_seed, stream_key, first_index + i);
      try {
        slots[i] = model == Model::exact ? run_exact_trajectory(params, rng, params.sample_times, options)
                                         : run_bl_trajectory(params, rng, params.sample_times);
      } catch (const CorruptedState& e) {
        failures[i] = e.what();
      }
    }
  };

  const auto start = std::chrono::steady_clock::now();
  const int workers = std::min<std::int64_t>(resolve_threads(threads), n_trajectories);
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  out.stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  out.set.records.reserve(n);
  std::string first_failure;
  for (std::size_t i = 0; i < n; ++i) {
    if (!slots[i]) {
      ++out.stats.aborted;
      if (first_failure.empty()) first_failure = "trajectory " + std::to_string(first_index + i) + ": " + failures[i];
      continue;
    }
    TrajectoryRecord& r = *slots[i];
    out.stats.collisions += r.collision_count;
    for (const Vec3& d : r.displacements) {
      for (int a = 0; a < 3; ++a) out.stats.max_abs_displacement = std::max(out.stats.max_abs_displacement, std::abs(d[a]));
    }
    out.set.records.push_back(std::move(r));
  }
  if (static_cast<double>(out.stats.aborted) > kMaxAbortedFraction * static_cast<double>(n)) {
    std::ostringstream msg;
    msg << out.stats.aborted << " of " << n << " trajectories aborted (limit fraction " << kMaxAbortedFraction
        << "); first: " << first_failure;
    throw Error(Error::Kind::runtime, msg.str());
  }
  if (params.r0 > 0.0 && out.stats.max_abs_displacement >= params.L / 2.0) {
    std::ostringstream msg;
    msg << "max |Delta_a| = " << out.stats.max_abs_displacement << " reaches L/2 = " << params.L / 2.0
        << " (periodic images may alias)";
    out.stats.warnings.push_back(msg.str());
  }
  return out;
}

namespace {

void put(std::ostream& os, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  os << ',' << buf;
}

}  // namespace

void write_records_csv(const RecordSet& set, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write '" + path + "'");
  const std::size_t ns = set.params.sample_times.size();
  const std::size_t nshell = set.shell_edges.empty() ? 0 : set.shell_edges.size() + 1;
  os << "traj_id,N_init";
  for (std::size_t i = 0; i < ns; ++i) {
    for (const char* c : {"dx", "dy", "dz", "Px", "Py", "Pz"}) os << ",t" << i << '_' << c;
    for (std::size_t s = 0; s < nshell; ++s) os << ",t" << i << "_shell" << s;
  }
  os << '\n';
  for (std::size_t r = 0; r < set.records.size(); ++r) {
    const TrajectoryRecord& rec = set.records[r];
    os << r << ',' << rec.N_init;
    for (std::size_t i = 0; i < ns; ++i) {
      for (int a = 0; a < 3; ++a) put(os, rec.displacements[i][a]);
      for (int a = 0; a < 3; ++a) put(os, rec.P_samples[i][a]);
      for (std::size_t s = 0; s < nshell; ++s) os << ',' << rec.shell_counts[i][s];
    }
    os << '\n';
  }
  if (!os) throw IoError("failed writing '" + path + "'");
}

RecordSet read_records_csv(const std::string& path, const GasParams& params, Model model,
                           const std::vector<double>& shell_edges) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  RecordSet set{params, model, shell_edges, {}};
  const std::size_t ns = params.sample_times.size();
  const std::size_t nshell = shell_edges.empty() ? 0 : shell_edges.size() + 1;
  const std::size_t ncols = 2 + ns * (6 + nshell);
  std::string line;
  if (!std::getline(is, line)) throw IoError("'" + path + "' is empty");
  if (static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1 != ncols) {
    throw IoError("'" + path + "': header does not match the configuration");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != ncols) throw IoError("'" + path + "': malformed row");
    TrajectoryRecord rec;
    std::size_t c = 1;
    rec.N_init = std::stoll(cells[c++]);
    for (std::size_t i = 0; i < ns; ++i) {
      Vec3 d, P;
      for (int a = 0; a < 3; ++a) d[a] = std::strtod(cells[c++].c_str(), nullptr);
      for (int a = 0; a < 3; ++a) P[a] = std::strtod(cells[c++].c_str(), nullptr);
      rec.displacements.push_back(d);
      rec.P_samples.push_back(P);
      if (nshell) {
        std::vector<std::int64_t> counts(nshell);
        for (auto& k : counts) k = std::stoll(cells[c++]);
        rec.shell_counts.push_back(std::move(counts));
      }
    }
    set.records.push_back(std::move(rec));
  }
  return set;
}

nlohmann::json make_manifest(const ExperimentConfig& config, const Ensemble& e) {
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return {{"config", config_to_json(config)},
          {"config_digest", config_digest(config)},
          {"seed", config.params.master_seed},
          {"stream_key", e.stream_key},
          {"model", to_string(e.set.model)},
          {"density", e.set.params.n},
          {"n_records", e.set.records.size()},
          {"collisions", e.stats.collisions},
          {"aborted", e.stats.aborted},
          {"max_abs_displacement", e.stats.max_abs_displacement},
          {"warnings", e.stats.warnings},
          {"wall_seconds", e.stats.wall_seconds},
          {"timestamp", stamp}};
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write '" + path + "'");
  os << j.dump(2) << '\n';
  if (!os) throw IoError("failed writing '" + path + "'");
}

void write_ensemble(const ExperimentConfig& config, const Ensemble& ensemble, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  write_records_csv(ensemble.set, dir + "/records.csv");
  write_json(make_manifest(config, ensemble), dir + "/manifest.json");
}

}  // namespace tmgas
