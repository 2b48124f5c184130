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
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "detvr/dataset.hpp"
#include "detvr/stepsize.hpp"

namespace detvr {

struct DataSource {
  std::optional<std::filesystem::path> path;
  std::optional<std::size_t> d_hint;
  std::optional<SyntheticSpec> synthetic;
};

/// Sketch law before the problem dimension is known.
struct SketchConfig {
  bool identity = true;
  std::size_t tau = 0;

  SketchDistribution resolve(std::size_t dim) const;
};

struct MethodConfig {
  Method method = Method::kDetMarina;
  WKind w = WKind::kLInverse;
  SketchConfig sketch;
  double p = 1.0;
  std::size_t K = 100;
  double eps = 0.1;
  double gamma_scale = 1.0;
  std::string label;
};

/// One experiment file. Example:
///   {"data": {"synthetic": {"dim": 20, "rows": 200, "seed": 7}},
///    "n_clients": 5, "lambda": 0.3, "seeds": 10, "seed": 1,
///    "methods": [{"name": "det_marina", "p": 0.1, "w": "L_inv",
///                 "sketch": {"kind": "rand_tau", "tau": 1}, "K": 2000}]}
struct ExperimentConfig {
  DataSource data;
  std::size_t n_clients = 1;
  double lambda_reg = 0.3;
  PartitionScheme partition = PartitionScheme::kContiguous;
  std::size_t seeds = 10;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t f_star_iterations = 2000;
  std::filesystem::path output_dir = "out";
  std::vector<MethodConfig> methods;

  /// Canonical dump of the source JSON and its FNV-1a hash.
  std::string canonical;
  std::string hash;
};

/// Parses and validates; relative paths resolve against base_dir. Throws
/// ConfigError on any problem, including a missing dataset file.
ExperimentConfig parse_config(const nlohmann::json& j,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace detvr
