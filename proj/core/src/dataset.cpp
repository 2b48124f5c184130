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
#include "detvr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>

#include "detvr/errors.hpp"
#include "detvr/rng.hpp"

namespace detvr {

void Dataset::push_back(Vector a, double label) {
  features.push_back(std::move(a));
  labels.push_back(label);
}

namespace {

template <typename T>
bool parse_number(std::string_view token, T& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

struct SparseRow {
  std::vector<std::pair<std::size_t, double>> entries;
  double label;
};

}  // namespace

Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> d_hint) {
  std::vector<SparseRow> rows;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    auto tokens = split_ws(view);
    if (tokens.empty()) continue;

    double raw_label = 0.0;
    if (!parse_number(tokens[0], raw_label) || !std::isfinite(raw_label)) {
      throw ParseError(line_no, "malformed label '" + std::string(tokens[0]) + "'");
    }
    SparseRow row{{}, raw_label > 0.0 ? 1.0 : -1.0};

    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const std::string_view tok = tokens[t];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no, "expected <index>:<value>, got '" + std::string(tok) + "'");
      }
      const std::string_view idx_str = tok.substr(0, colon);
      const std::string_view val_str = tok.substr(colon + 1);
      if (idx_str == "qid") continue;

      long long idx = 0;
      if (!parse_number(idx_str, idx)) {
        throw ParseError(line_no, "malformed index '" + std::string(idx_str) + "'");
      }
      if (idx < 1) {
        throw ParseError(line_no, "index " + std::to_string(idx) + " is below 1");
      }
      double value = 0.0;
      if (!parse_number(val_str, value) || !std::isfinite(value)) {
        throw ParseError(line_no, "malformed value '" + std::string(val_str) + "'");
      }
      const auto zero_based = static_cast<std::size_t>(idx - 1);
      max_index = std::max(max_index, zero_based + 1);
      row.entries.emplace_back(zero_based, value);
    }
    rows.push_back(std::move(row));
  }

  Dataset data;
  data.dim = std::max(max_index, d_hint.value_or(0));
  data.features.reserve(rows.size());
  data.labels.reserve(rows.size());
  for (auto& row : rows) {
    Vector a(data.dim, 0.0);
    for (auto [j, v] : row.entries) a[j] = v;
    data.push_back(std::move(a), row.label);
  }
  return data;
}

Dataset parse_libsvm(std::string_view text, std::optional<std::size_t> d_hint) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in, d_hint);
}

Dataset load_libsvm(const std::filesystem::path& path,
                    std::optional<std::size_t> d_hint) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file " + path.string());
  return parse_libsvm(in, d_hint);
}

void write_libsvm(std::ostream& out, const Dataset& data) {
  char buf[64];
  for (std::size_t r = 0; r < data.size(); ++r) {
    out << (data.labels[r] > 0.0 ? "+1" : "-1");
    const Vector& a = data.features[r];
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (a[j] == 0.0) continue;
      auto res = std::to_chars(buf, buf + sizeof(buf), a[j]);
      out << ' ' << (j + 1) << ':' << std::string_view(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

PartitionScheme partition_scheme_from_string(std::string_view name) {
  if (name == "contiguous") return PartitionScheme::kContiguous;
  if (name == "round_robin") return PartitionScheme::kRoundRobin;
  throw ConfigError("unknown partition scheme '" + std::string(name) + "'");
}

std::vector<Dataset> partition(const Dataset& data, std::size_t n,
                               PartitionScheme scheme) {
  if (n == 0) throw PartitionError("number of shards must be positive");
  if (n > data.size()) {
    throw PartitionError("cannot split " + std::to_string(data.size()) + " rows into " +
                         std::to_string(n) + " shards");
  }
  std::vector<Dataset> shards(n);
  for (auto& s : shards) s.dim = data.dim;

  if (scheme == PartitionScheme::kRoundRobin) {
    for (std::size_t r = 0; r < data.size(); ++r) {
      shards[r % n].push_back(data.features[r], data.labels[r]);
    }
    return shards;
  }

  const std::size_t base = data.size() / n;
  const std::size_t extra = data.size() % n;
  std::size_t r = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t count = base + (s < extra ? 1 : 0);
    for (std::size_t c = 0; c < count; ++c, ++r) {
      shards[s].push_back(data.features[r], data.labels[r]);
    }
  }
  return shards;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.dim == 0) throw ConfigError("synthetic dim must be positive");
  if (!(spec.scale_min > 0.0) || spec.scale_max < spec.scale_min) {
    throw ConfigError("synthetic scales must satisfy 0 < scale_min <= scale_max");
  }
  Rng rng(stream_seed(spec.seed, 0x5e7, 0));
  Vector scales(spec.dim);
  const double lo = std::log(spec.scale_min);
  const double hi = std::log(spec.scale_max);
  for (double& s : scales) s = std::exp(lo + (hi - lo) * uniform_unit(rng));

  Dataset data;
  data.dim = spec.dim;
  for (std::size_t r = 0; r < spec.rows; ++r) {
    Vector a(spec.dim);
    for (std::size_t j = 0; j < spec.dim; ++j) a[j] = scales[j] * standard_normal(rng);
    data.push_back(std::move(a), bernoulli(rng, 0.5) ? 1.0 : -1.0);
  }
  return data;
}

}  // namespace detvr
