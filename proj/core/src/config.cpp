// Copyright 2026 The detvr Authors. All Rights Reserved.
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
// =============================================================================
#include "detvr/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "detvr/errors.hpp"

namespace detvr {

SketchDistribution SketchConfig::resolve(std::size_t dim) const {
  if (identity) return SketchDistribution::identity(dim);
  return SketchDistribution::rand_tau(dim, tau);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

using nlohmann::json;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::size_t get_count(const json& j, const char* key, std::size_t fallback,
                      std::size_t minimum) {
  const auto v = get_or<long long>(j, key, static_cast<long long>(fallback));
  if (v < static_cast<long long>(minimum)) {
    throw ConfigError(std::string("'") + key + "' must be at least " + std::to_string(minimum));
  }
  return static_cast<std::size_t>(v);
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError(std::string("unknown key '") + it.key() + "' in " + where);
    }
  }
}

SketchConfig parse_sketch(const json& j) {
  if (!j.is_object()) throw ConfigError("sketch must be an object");
  reject_unknown(j, {"kind", "tau"}, "sketch");
  const auto kind = get_or<std::string>(j, "kind", "");
  if (kind == "identity") return {};
  if (kind == "rand_tau") {
    SketchConfig s;
    s.identity = false;
    s.tau = get_count(j, "tau", 0, 1);
    return s;
  }
  throw ConfigError("unknown sketch kind '" + kind + "'");
}

MethodConfig parse_method(const json& j, std::size_t index) {
  if (!j.is_object()) throw ConfigError("each method must be an object");
  reject_unknown(j, {"name", "p", "w", "sketch", "K", "eps", "gamma_scale", "label"}, "method");
  MethodConfig m;
  m.method = method_from_string(get_or<std::string>(j, "name", ""));
  m.w = w_kind_from_string(get_or<std::string>(j, "w", "L_inv"));
  if (j.contains("sketch")) m.sketch = parse_sketch(j.at("sketch"));
  m.p = get_or<double>(j, "p", 1.0);
  m.K = get_count(j, "K", 100, 1);
  m.eps = get_or<double>(j, "eps", 0.1);
  m.gamma_scale = get_or<double>(j, "gamma_scale", 1.0);
  m.label = get_or<std::string>(j, "label", std::string(to_string(m.method)));

  const bool uses_p = m.method == Method::kDetMarina || m.method == Method::kMarina ||
                      m.method == Method::kDetCgd2Vr;
  if (uses_p && !(m.p > 0.0 && m.p <= 1.0)) {
    throw ConfigError("method " + std::to_string(index) + ": p must lie in (0, 1]");
  }
  if (!(m.eps > 0.0) || !std::isfinite(m.eps)) throw ConfigError("eps must be positive");
  if (!(m.gamma_scale > 0.0) || !std::isfinite(m.gamma_scale)) {
    throw ConfigError("gamma_scale must be positive");
  }
  if (m.label.empty()) throw ConfigError("method label must not be empty");
  return m;
}

}  // namespace

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"data", "n_clients", "lambda", "partition", "seeds", "seed", "threads",
                  "f_star_iterations", "output_dir", "methods"},
                 "config");
  ExperimentConfig cfg;

  if (!j.contains("data") || !j.at("data").is_object()) {
    throw ConfigError("config needs a 'data' object");
  }
  const json& data = j.at("data");
  reject_unknown(data, {"path", "d_hint", "synthetic"}, "data");
  if (data.contains("path") == data.contains("synthetic")) {
    throw ConfigError("data needs exactly one of 'path' or 'synthetic'");
  }
  if (data.contains("path")) {
    std::filesystem::path p = get_or<std::string>(data, "path", "");
    if (p.is_relative()) p = base_dir / p;
    if (!std::filesystem::is_regular_file(p)) {
      throw ConfigError("dataset file not found: " + p.string());
    }
    cfg.data.path = p;
    if (data.contains("d_hint")) cfg.data.d_hint = get_count(data, "d_hint", 0, 1);
  } else {
    const json& syn = data.at("synthetic");
    if (!syn.is_object()) throw ConfigError("'synthetic' must be an object");
    reject_unknown(syn, {"dim", "rows", "scale_min", "scale_max", "seed"}, "synthetic");
    SyntheticSpec spec;
    spec.dim = get_count(syn, "dim", spec.dim, 1);
    spec.rows = get_count(syn, "rows", spec.rows, 1);
    spec.scale_min = get_or<double>(syn, "scale_min", spec.scale_min);
    spec.scale_max = get_or<double>(syn, "scale_max", spec.scale_max);
    spec.seed = get_or<std::uint64_t>(syn, "seed", spec.seed);
    if (!(spec.scale_min > 0.0) || spec.scale_max < spec.scale_min) {
      throw ConfigError("synthetic scales must satisfy 0 < scale_min <= scale_max");
    }
    cfg.data.synthetic = spec;
  }

  cfg.n_clients = get_count(j, "n_clients", 1, 1);
  cfg.lambda_reg = get_or<double>(j, "lambda", cfg.lambda_reg);
  if (!(cfg.lambda_reg >= 0.0) || !std::isfinite(cfg.lambda_reg)) {
    throw ConfigError("lambda must be finite and nonnegative");
  }
  cfg.partition = partition_scheme_from_string(get_or<std::string>(j, "partition", "contiguous"));
  cfg.seeds = get_count(j, "seeds", cfg.seeds, 1);
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
  cfg.threads = get_count(j, "threads", 1, 1);
  cfg.f_star_iterations = get_count(j, "f_star_iterations", cfg.f_star_iterations, 1);
  std::filesystem::path out = get_or<std::string>(j, "output_dir", "out");
  cfg.output_dir = out.is_relative() ? base_dir / out : out;

  if (!j.contains("methods") || !j.at("methods").is_array() || j.at("methods").empty()) {
    throw ConfigError("config needs a nonempty 'methods' array");
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < j.at("methods").size(); ++i) {
    MethodConfig m = parse_method(j.at("methods")[i], i);
    if (!labels.insert(m.label).second) {
      throw ConfigError("duplicate method label '" + m.label + "'");
    }
    cfg.methods.push_back(std::move(m));
  }

  cfg.canonical = j.dump();
  cfg.hash = fnv1a_hex(cfg.canonical);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, path.parent_path());
}

}  // namespace detvr
