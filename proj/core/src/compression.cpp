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
#include "detvr/compression.hpp"

#include <algorithm>
#include <string>

#include <nlohmann/json.hpp>

#include "detvr/errors.hpp"

namespace detvr {

SketchDistribution SketchDistribution::identity(std::size_t dim) {
  if (dim == 0) throw DimError("sketch dimension must be positive");
  return SketchDistribution(Kind::kIdentity, dim, dim);
}

SketchDistribution SketchDistribution::rand_tau(std::size_t dim, std::size_t tau) {
  if (dim == 0) throw DimError("sketch dimension must be positive");
  if (tau < 1 || tau > dim) {
    throw ConfigError("rand_tau needs 1 <= tau <= d, got tau=" + std::to_string(tau) +
                      " d=" + std::to_string(dim));
  }
  return SketchDistribution(Kind::kRandTau, dim, tau);
}

Vector Sketch::apply(std::span<const double> x) const {
  Vector out(dim);
  apply_into(x, out);
  return out;
}

void Sketch::apply_into(std::span<const double> x, std::span<double> out) const {
  if (x.size() != dim || out.size() != dim) throw DimError("sketch dimension mismatch");
  if (identity) {
    std::copy(x.begin(), x.end(), out.begin());
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j : indices) out[j] = scale * x[j];
}

Sketch sample(const SketchDistribution& s, Rng& rng) {
  Sketch out;
  out.dim = s.dim();
  if (s.kind() == SketchDistribution::Kind::kIdentity) return out;

  const std::size_t d = s.dim();
  const std::size_t tau = s.tau();
  out.identity = false;
  out.scale = static_cast<double>(d) / static_cast<double>(tau);
  // Floyd's algorithm: a uniform tau-subset in O(tau) draws.
  out.indices.reserve(tau);
  for (std::size_t j = d - tau; j < d; ++j) {
    const auto t = static_cast<std::size_t>(uniform_below(rng, j + 1));
    if (std::find(out.indices.begin(), out.indices.end(), t) == out.indices.end()) {
      out.indices.push_back(t);
    } else {
      out.indices.push_back(j);
    }
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

SymmetricMatrix expected_moment(const SketchDistribution& s, const SymmetricMatrix& w) {
  if (w.dim() != s.dim()) throw DimError("expected_moment: dimension mismatch");
  const std::size_t d = s.dim();
  if (s.kind() == SketchDistribution::Kind::kIdentity || d == 1) return w;

  const double dd = static_cast<double>(d);
  const double tau = static_cast<double>(s.tau());
  const double lead = dd / tau;
  const double diag_coef = lead * (dd - tau) / (dd - 1.0);
  const double full_coef = lead * (tau - 1.0) / (dd - 1.0);

  std::vector<double> m(w.entries().begin(), w.entries().end());
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      m[i * d + j] *= full_coef;
    }
    m[i * d + i] += diag_coef * w(i, i);
  }
  return SymmetricMatrix(d, std::move(m));
}

double lambda_ws(const SketchDistribution& s, const SymmetricMatrix& w) {
  if (s.kind() == SketchDistribution::Kind::kIdentity) return 0.0;
  return std::max(0.0, (expected_moment(s, w) - w).lambda_max());
}

double omega_w(const SketchDistribution& s, const SymmetricMatrix& w) {
  require_positive_definite(w, "omega_w weight");
  return lambda_ws(s, w) / w.lambda_min();
}

double omega(const SketchDistribution& s) {
  return static_cast<double>(s.dim()) / static_cast<double>(s.tau()) - 1.0;
}

std::size_t expected_density(const SketchDistribution& s) { return s.tau(); }

SketchDistribution sketch_from_json(const nlohmann::json& j, std::size_t dim) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "identity") return SketchDistribution::identity(dim);
  if (kind == "rand_tau") {
    const auto tau = j.at("tau").get<long long>();
    if (tau < 1) throw ConfigError("rand_tau needs tau >= 1");
    return SketchDistribution::rand_tau(dim, static_cast<std::size_t>(tau));
  }
  throw ConfigError("unknown sketch kind '" + kind + "'");
}

void to_json(nlohmann::json& j, const SketchDistribution& s) {
  if (s.kind() == SketchDistribution::Kind::kIdentity) {
    j = nlohmann::json{{"kind", "identity"}};
  } else {
    j = nlohmann::json{{"kind", "rand_tau"}, {"tau", s.tau()}};
  }
}

}  // namespace detvr
