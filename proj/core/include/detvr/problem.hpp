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

#include "detvr/dataset.hpp"
#include "detvr/linalg.hpp"

namespace detvr {

/// Hessian upper bounds of the logistic objective: one matrix per client and
/// the pooled bound for the average.
struct SmoothnessBounds {
  std::vector<SymmetricMatrix> local;
  SymmetricMatrix global;
  /// Set when some bound is only PSD (lambda = 0 with rank-deficient data).
  bool rank_deficient = false;
};

/// Finite-sum objective f = (1/n) sum_i f_i with
///   f_i(x) = (1/m_i) sum_j log(1 + exp(-b_ij <a_ij, x>))
///            + lambda * sum_t x_t^2 / (1 + x_t^2).
/// Immutable after construction; evaluations are safe to run concurrently.
class Problem {
 public:
  Problem(std::vector<Dataset> clients, double lambda_reg);

  std::size_t num_clients() const { return clients_.size(); }
  std::size_t dim() const { return dim_; }
  double lambda_reg() const { return lambda_; }
  const std::vector<Dataset>& clients() const { return clients_; }
  const SmoothnessBounds& smoothness() const { return bounds_; }

  double client_loss(std::size_t client, std::span<const double> x) const;
  double loss(std::span<const double> x) const;

  void client_grad_into(std::size_t client, std::span<const double> x,
                        std::span<double> out) const;
  Vector client_grad(std::size_t client, std::span<const double> x) const;
  /// (1/n) sum_i grad f_i(x), summed in client order.
  Vector grad(std::span<const double> x) const;

 private:
  void check_x(std::span<const double> x) const;

  std::vector<Dataset> clients_;
  std::size_t dim_;
  double lambda_;
  SmoothnessBounds bounds_;
};

/// log(1 + exp(t)) without overflow.
double softplus(double t);
/// 1 / (1 + exp(-t)) without overflow.
double logistic(double t);

/// L_i = (1/m_i) sum_j a a^T / 4 + 2 lambda I and the pooled
/// L = (1 / sum_i m_i) sum_ij a a^T / 4 + 2 lambda I.
SmoothnessBounds smoothness_bounds(std::span<const Dataset> clients, double lambda_reg);
SmoothnessBounds smoothness_bounds(const Problem& problem);

enum class GlobalLVariant {
  /// lambda_max(L^{-1}) (1/n) sum_i lambda_max(L_i) lambda_max(L_i L^{-1}) = 1.
  kAveragedProduct,
  /// lambda_min(L) L = (1/n) sum_i lambda_max(L_i) L_i.
  kMinEigenScaled,
};

/// Smoothness matrix of the average implied by the local ones. Both variants
/// return a positive multiple of M = (1/n) sum_i lambda_max(L_i) L_i.
SymmetricMatrix global_L_implicit(std::span<const SymmetricMatrix> local,
                                  GlobalLVariant variant);

}  // namespace detvr
