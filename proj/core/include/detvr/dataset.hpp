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
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "detvr/linalg.hpp"

namespace detvr {

/// Binary classification data with dense features; labels are -1 or +1.
struct Dataset {
  std::size_t dim = 0;
  std::vector<Vector> features;
  std::vector<double> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  void push_back(Vector a, double label);
};

/// Reads LibSVM text (`<label> <idx>:<val> ...`, 1-based indices). Labels are
/// mapped by sign with 0 sent to -1, so 0/1 files load as -1/+1. Blank lines
/// and `#` comments are skipped. The feature dimension is the largest index
/// seen, or `d_hint` when that is larger.
Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> d_hint = {});
Dataset parse_libsvm(std::string_view text, std::optional<std::size_t> d_hint = {});
Dataset load_libsvm(const std::filesystem::path& path,
                    std::optional<std::size_t> d_hint = {});

/// Writes nonzero coordinates with round-trip precision.
void write_libsvm(std::ostream& out, const Dataset& data);

enum class PartitionScheme { kContiguous, kRoundRobin };

PartitionScheme partition_scheme_from_string(std::string_view name);

/// Splits rows into `n` disjoint shards whose sizes differ by at most one.
/// Contiguous shards put the remainder on the leading shards; round robin
/// assigns row r to shard r mod n.
std::vector<Dataset> partition(const Dataset& data, std::size_t n,
                               PartitionScheme scheme = PartitionScheme::kContiguous);

/// Gaussian features with a per-column scale drawn log-uniformly from
/// [scale_min, scale_max] and independent uniform +-1 labels.
struct SyntheticSpec {
  std::size_t dim = 20;
  std::size_t rows = 200;
  double scale_min = 0.2;
  double scale_max = 5.0;
  std::uint64_t seed = 7;
};

Dataset make_synthetic(const SyntheticSpec& spec);

}  // namespace detvr
