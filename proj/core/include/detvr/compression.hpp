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
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "detvr/linalg.hpp"
#include "detvr/rng.hpp"

namespace detvr {

/// Law of a random sketch S with E[S] = I. Rand-tau keeps tau coordinates
/// chosen uniformly without replacement and scales them by d / tau.
class SketchDistribution {
 public:
  enum class Kind { kIdentity, kRandTau };

  static SketchDistribution identity(std::size_t dim);
  static SketchDistribution rand_tau(std::size_t dim, std::size_t tau);

  Kind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  /// Number of kept coordinates; equals dim for the identity.
  std::size_t tau() const { return tau_; }

  bool operator==(const SketchDistribution&) const = default;

 private:
  SketchDistribution(Kind kind, std::size_t dim, std::size_t tau)
      : kind_(kind), dim_(dim), tau_(tau) {}

  Kind kind_;
  std::size_t dim_;
  std::size_t tau_;
};

/// One realized sketch: a sorted index subset and a common scale. Never
/// materialized as a d x d matrix.
struct Sketch {
  std::size_t dim = 0;
  bool identity = true;
  std::vector<std::size_t> indices;
  double scale = 1.0;

  /// Number of coordinates a sketched message carries.
  std::size_t nnz() const { return identity ? dim : indices.size(); }

  Vector apply(std::span<const double> x) const;
  void apply_into(std::span<const double> x, std::span<double> out) const;
};

Sketch sample(const SketchDistribution& s, Rng& rng);

/// E[S W S]. For Rand-tau:
///   (d/tau) * ((d - tau)/(d - 1) * diag(W) + (tau - 1)/(d - 1) * W),
/// and W itself when d = 1.
SymmetricMatrix expected_moment(const SketchDistribution& s, const SymmetricMatrix& w);

/// lambda_max(E[S W S] - W).
double lambda_ws(const SketchDistribution& s, const SymmetricMatrix& w);

/// lambda_max(W^{-1}) * lambda_ws(s, W); invariant under W -> cW.
double omega_w(const SketchDistribution& s, const SymmetricMatrix& w);

/// Scalar variance parameter, omega_w at W = I (d/tau - 1 for Rand-tau).
double omega(const SketchDistribution& s);

/// Expected number of nonzeros in a sketched vector.
std::size_t expected_density(const SketchDistribution& s);

/// {"kind": "rand_tau", "tau": N} or {"kind": "identity"}.
SketchDistribution sketch_from_json(const nlohmann::json& j, std::size_t dim);
void to_json(nlohmann::json& j, const SketchDistribution& s);

}  // namespace detvr
