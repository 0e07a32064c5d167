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

#include "config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace tmgas {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

Vec3 vec_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(what + ": expected an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

std::vector<Observable> default_observables(const GasParams& params) {
  const double lambda = mean_free_path(params.n, params.r0);
  return {Observable::delta_sq(), Observable::cos_q(std::isfinite(lambda) ? 1.0 / lambda : 0.0)};
}

nlohmann::json observable_to_json(const Observable& g) {
  switch (g.tag) {
    case Observable::Tag::delta_sq:
      return {{"tag", "delta_sq"}};
    case Observable::Tag::delta_4:
      return {{"tag", "delta_4"}};
    case Observable::Tag::cos_q:
      return {{"tag", "cos_q"}, {"q", g.q}};
    case Observable::Tag::bin_indicator:
      return {{"tag", "bin_indicator"},
              {"lo", {g.lo.x, g.lo.y, g.lo.z}},
              {"hi", {g.hi.x, g.hi.y, g.hi.z}}};
  }
  return {};
}

Observable observable_from_json(const nlohmann::json& j, const GasParams& params) {
  nlohmann::json obj = j.is_string() ? nlohmann::json{{"tag", j}} : j;
  if (!obj.is_object() || !obj.contains("tag")) throw ConfigError("observable: expected a tag name or an object with 'tag'");
  reject_unknown(obj, {"tag", "q", "lo", "hi"}, "observable");
  const std::string tag = obj.at("tag").get<std::string>();
  if (tag == "delta_sq") return Observable::delta_sq();
  if (tag == "delta_4") return Observable::delta_4();
  if (tag == "cos_q") {
    if (obj.contains("q")) return Observable::cos_q(obj.at("q").get<double>());
    return default_observables(params)[1];
  }
  if (tag == "bin_indicator") {
    if (!obj.contains("lo") || !obj.contains("hi")) throw ConfigError("bin_indicator needs 'lo' and 'hi'");
    return Observable::bin(vec_from_json(obj.at("lo"), "bin_indicator.lo"), vec_from_json(obj.at("hi"), "bin_indicator.hi"));
  }
  throw ConfigError("observable: unknown tag '" + tag + "'");
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  reject_unknown(j,
                 {"params", "model", "n_trajectories", "density_grid", "observables", "shells", "threads",
                  "output_dir", "order", "u_list", "bg_scale", "min_localized_fraction"},
                 "config");
  if (!j.contains("params")) throw ConfigError("config: missing key 'params'");
  ExperimentConfig c;
  try {
    c.params = gas_params_from_json(j.at("params"));
    if (j.contains("model")) c.model = model_from_string(j.at("model").get<std::string>());
    if (j.contains("n_trajectories")) c.n_trajectories = j.at("n_trajectories").get<std::int64_t>();
    if (j.contains("density_grid")) c.density_grid = j.at("density_grid").get<std::vector<double>>();
    if (j.contains("observables")) {
      for (const auto& o : j.at("observables")) c.observables.push_back(observable_from_json(o, c.params));
    } else {
      c.observables = default_observables(c.params);
    }
    if (j.contains("shells")) c.shells = j.at("shells").get<std::vector<double>>();
    if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("order")) c.order = j.at("order").get<int>();
    if (j.contains("u_list")) c.u_list = j.at("u_list").get<std::vector<double>>();
    if (j.contains("bg_scale")) c.bg_scale = j.at("bg_scale").get<double>();
    if (j.contains("min_localized_fraction")) c.min_localized_fraction = j.at("min_localized_fraction").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& g : c.observables) obs.push_back(observable_to_json(g));
  nlohmann::json j{{"params", c.params},
                   {"model", to_string(c.model)},
                   {"n_trajectories", c.n_trajectories},
                   {"density_grid", c.density_grid},
                   {"observables", obs},
                   {"shells", c.shells},
                   {"threads", c.threads},
                   {"output_dir", c.output_dir},
                   {"order", c.order},
                   {"u_list", c.u_list},
                   {"bg_scale", c.bg_scale}};
  if (c.min_localized_fraction) j["min_localized_fraction"] = *c.min_localized_fraction;
  return j;
}

std::string config_digest(const ExperimentConfig& config) {
  nlohmann::json j = config_to_json(config);
  j.erase("threads");
  j.erase("output_dir");
  const std::string canonical = j.dump();
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void validate_config(const ExperimentConfig& c, std::vector<std::string>* warnings) {
  validate_params(c.params, warnings);
  if (c.n_trajectories < 1) throw InvalidArgument("n_trajectories >= 1 violated");
  if (c.threads < 0) throw InvalidArgument("threads must be >= 0");
  for (const double d : c.density_grid) {
    if (!(d > 0.0)) throw InvalidArgument("density_grid entries must be positive");
  }
  if (c.density_grid.size() >= 2) finite_difference_stencil(c.density_grid, 1);  // uniformity
  if (c.params.r0 > 0.0 || !c.shells.empty()) shell_volumes(c.params, c.shells);
  if (c.order != 1 && c.order != 2) throw InvalidArgument("order must be 1 or 2");
  if (!(c.bg_scale > 0.0)) throw InvalidArgument("bg_scale must be positive");
}

}  // namespace tmgas
