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

// Independent reference computations used only by the tests. None of them
// reuse the library's eigensolver or closed forms.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "detvr/compression.hpp"
#include "detvr/linalg.hpp"
#include "detvr/problem.hpp"
#include "detvr/rng.hpp"

namespace detvr::testing {

using Dense = std::vector<double>;  // row-major d x d

/// Number of eigenvalues of A below x: Householder tridiagonalization
/// followed by a Sturm sequence count.
std::size_t count_below(std::size_t d, const Dense& a, double x);

/// All eigenvalues, ascending, by bisection on count_below.
Vector bisection_eigenvalues(std::size_t d, const Dense& a, double tol = 1e-13);

/// Determinant by LU with partial pivoting.
double lu_determinant(std::size_t d, Dense a);

/// E[S W S] by summing over all C(d, tau) index subsets.
Dense enumerate_moment(std::size_t d, std::size_t tau, const Dense& w);

Dense matmul(std::size_t d, const Dense& a, const Dense& b);

SymmetricMatrix random_symmetric(std::size_t d, Rng& rng);
/// Q diag(eigs) Q^T with eigenvalues log-uniform in [lo, hi].
SymmetricMatrix random_pd(std::size_t d, Rng& rng, double lo = 0.1, double hi = 10.0);
Vector random_vector(std::size_t d, Rng& rng, double scale = 1.0);

/// Central differences of a scalar function.
Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                   double h = 1e-5);
/// Symmetrized central differences of a gradient.
SymmetricMatrix fd_hessian(const std::function<Vector(const Vector&)>& g, const Vector& x,
                           double h = 1e-5);

/// Small clients with Gaussian features, for fast tests.
std::vector<Dataset> random_clients(std::size_t n, std::size_t rows, std::size_t d,
                                    std::uint64_t seed);

}  // namespace detvr::testing
