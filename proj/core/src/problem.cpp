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
#include "detvr/problem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "detvr/errors.hpp"

namespace detvr {

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

SmoothnessBounds smoothness_bounds(std::span<const Dataset> clients, double lambda_reg) {
  if (clients.empty()) throw Error("smoothness_bounds: no clients");
  if (!(lambda_reg >= 0.0)) throw Error("smoothness_bounds: lambda must be nonnegative");
  const std::size_t d = clients.front().dim;

  SmoothnessBounds out;
  const SymmetricMatrix shift = SymmetricMatrix::identity(d, 2.0 * lambda_reg);
  std::vector<double> pooled(d * d, 0.0);
  std::size_t total_rows = 0;

  for (const Dataset& c : clients) {
    const double w = c.empty() ? 0.0 : 0.25 / static_cast<double>(c.size());
    SymmetricMatrix data_part = SymmetricMatrix::outer_sum(d, c.features, w);
    out.local.push_back(data_part + shift);
    for (const Vector& a : c.features) {
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) pooled[i * d + j] += 0.25 * a[i] * a[j];
    }
    total_rows += c.size();
  }
  if (total_rows > 0) {
    for (double& v : pooled) v /= static_cast<double>(total_rows);
  }
  out.global = SymmetricMatrix(d, std::move(pooled)) + shift;

  out.rank_deficient = !is_positive_definite(out.global);
  for (const auto& li : out.local) {
    if (!is_positive_definite(li)) out.rank_deficient = true;
  }
  return out;
}

SmoothnessBounds smoothness_bounds(const Problem& problem) {
  return smoothness_bounds(problem.clients(), problem.lambda_reg());
}

Problem::Problem(std::vector<Dataset> clients, double lambda_reg)
    : clients_(std::move(clients)), dim_(0), lambda_(lambda_reg) {
  if (clients_.empty()) throw Error("problem needs at least one client");
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) {
    throw Error("regularization coefficient must be finite and nonnegative");
  }
  dim_ = clients_.front().dim;
  if (dim_ == 0) throw DimError("problem dimension must be positive");
  for (const Dataset& c : clients_) {
    if (c.dim != dim_) {
      throw DimError("clients disagree on feature dimension: " + std::to_string(c.dim) +
                     " vs " + std::to_string(dim_));
    }
    for (const Vector& a : c.features) {
      if (a.size() != dim_) throw DimError("feature vector length mismatch");
    }
    for (double b : c.labels) {
      if (b != 1.0 && b != -1.0) throw Error("labels must be -1 or +1");
    }
  }
  bounds_ = smoothness_bounds(clients_, lambda_);
}

void Problem::check_x(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw DimError("point has length " + std::to_string(x.size()) + ", expected " +
                   std::to_string(dim_));
  }
}

double Problem::client_loss(std::size_t client, std::span<const double> x) const {
  check_x(x);
  const Dataset& data = clients_.at(client);
  double data_term = 0.0;
  if (!data.empty()) {
    for (std::size_t j = 0; j < data.size(); ++j) {
      data_term += softplus(-data.labels[j] * dot(data.features[j], x));
    }
    data_term /= static_cast<double>(data.size());
  }
  double reg = 0.0;
  for (double xt : x) reg += xt * xt / (1.0 + xt * xt);
  return data_term + lambda_ * reg;
}

double Problem::loss(std::span<const double> x) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < clients_.size(); ++i) acc += client_loss(i, x);
  return acc / static_cast<double>(clients_.size());
}

void Problem::client_grad_into(std::size_t client, std::span<const double> x,
                               std::span<double> out) const {
  check_x(x);
  if (out.size() != dim_) throw DimError("gradient buffer length mismatch");
  const Dataset& data = clients_.at(client);
  std::fill(out.begin(), out.end(), 0.0);
  if (!data.empty()) {
    const double inv_m = 1.0 / static_cast<double>(data.size());
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double b = data.labels[j];
      const Vector& a = data.features[j];
      const double coef = -b * logistic(-b * dot(a, x)) * inv_m;
      for (std::size_t t = 0; t < dim_; ++t) out[t] += coef * a[t];
    }
  }
  for (std::size_t t = 0; t < dim_; ++t) {
    const double q = 1.0 + x[t] * x[t];
    out[t] += lambda_ * 2.0 * x[t] / (q * q);
  }
}

Vector Problem::client_grad(std::size_t client, std::span<const double> x) const {
  Vector out(dim_);
  client_grad_into(client, x, out);
  return out;
}

Vector Problem::grad(std::span<const double> x) const {
  Vector acc(dim_, 0.0);
  Vector gi(dim_);
  for (std::size_t i = 0; i < clients_.size(); ++i) {
    client_grad_into(i, x, gi);
    for (std::size_t t = 0; t < dim_; ++t) acc[t] += gi[t];
  }
  const double inv_n = 1.0 / static_cast<double>(clients_.size());
  for (double& v : acc) v *= inv_n;
  return acc;
}

SymmetricMatrix global_L_implicit(std::span<const SymmetricMatrix> local,
                                  GlobalLVariant variant) {
  if (local.empty()) throw Error("global_L_implicit: no local matrices");
  const std::size_t d = local.front().dim();
  for (const auto& li : local) require_positive_definite(li, "local smoothness matrix");

  std::vector<double> m(d * d, 0.0);
  for (const auto& li : local) {
    const double w = li.lambda_max() / static_cast<double>(local.size());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += w * li.entries()[k];
  }
  const SymmetricMatrix avg(d, std::move(m));

  if (variant == GlobalLVariant::kMinEigenScaled) {
    return avg.scaled(1.0 / std::sqrt(avg.lambda_min()));
  }

  // L = c * Mbar with Mbar = M / lambda_max(M); the averaged-product sum is
  // decreasing in c, so bisect for the root of sum(c) = 1 in log space.
  const SymmetricMatrix mbar = avg.scaled(1.0 / avg.lambda_max());
  const SymmetricMatrix mbar_inv_sqrt = inv_sqrt_psd(mbar);
  double s0 = 0.0;
  for (const auto& li : local) {
    s0 += li.lambda_max() * congruence(mbar_inv_sqrt, li).lambda_max();
  }
  s0 /= static_cast<double>(local.size()) * mbar.lambda_min();
  auto sum_at = [&](double c) { return s0 / (c * c); };

  double lo = 1.0;
  double hi = 1.0;
  while (sum_at(lo) < 1.0) lo *= 0.5;
  while (sum_at(hi) > 1.0) hi *= 2.0;
  double c = std::sqrt(lo * hi);
  for (int it = 0; it < 400; ++it) {
    c = std::sqrt(lo * hi);
    const double s = sum_at(c);
    if (std::abs(s - 1.0) <= 1e-12) break;
    if (s > 1.0) {
      lo = c;
    } else {
      hi = c;
    }
  }
  return mbar.scaled(c);
}

}  // namespace detvr
