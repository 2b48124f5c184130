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

// Dense symmetric linear algebra used by every stepsize and smoothness
// formula: a symmetric matrix type with an eigendecomposition computed at
// construction, PSD ordering, weighted norms and determinant normalization.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace detvr {

using Vector = std::vector<double>;

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors,
/// stored row-major so that column k of `vectors` belongs to `values[k]`.
struct EigenDecomposition {
  Vector values;
  std::vector<double> vectors;
};

/// Dense d x d symmetric matrix, row-major. Construction symmetrizes the
/// input as (A + A^T) / 2, rejects non-finite entries and caches the
/// eigendecomposition; instances are immutable afterwards.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  SymmetricMatrix(std::size_t dim, std::vector<double> row_major);

  static SymmetricMatrix identity(std::size_t dim, double scale = 1.0);
  static SymmetricMatrix zero(std::size_t dim);
  static SymmetricMatrix diagonal(std::span<const double> diag);
  /// Sum of weighted outer products: sum_k w_k v_k v_k^T.
  static SymmetricMatrix outer_sum(std::size_t dim,
                                   std::span<const Vector> vectors,
                                   double weight);

  std::size_t dim() const { return dim_; }
  double operator()(std::size_t i, std::size_t j) const {
    return a_[i * dim_ + j];
  }
  std::span<const double> entries() const { return a_; }

  const EigenDecomposition& eigen() const { return eig_; }
  const Vector& eigenvalues() const { return eig_.values; }
  double lambda_max() const;
  double lambda_min() const;

  Vector apply(std::span<const double> x) const;
  void apply_into(std::span<const double> x, std::span<double> out) const;

  SymmetricMatrix scaled(double c) const;
  /// diag(A) as a matrix, off-diagonal entries zeroed.
  SymmetricMatrix diag_part() const;
  /// V f(Lambda) V^T, reusing the cached eigenvectors.
  SymmetricMatrix spectral_map(const std::function<double(double)>& f) const;

  friend SymmetricMatrix operator+(const SymmetricMatrix& a,
                                   const SymmetricMatrix& b);
  friend SymmetricMatrix operator-(const SymmetricMatrix& a,
                                   const SymmetricMatrix& b);

 private:
  struct Trusted {};
  SymmetricMatrix(Trusted, std::size_t dim, std::vector<double> a,
                  EigenDecomposition eig);

  std::size_t dim_ = 0;
  std::vector<double> a_;
  EigenDecomposition eig_;
};

/// Cyclic Jacobi eigensolver on a row-major symmetric array.
EigenDecomposition jacobi_eigen(std::size_t dim, std::vector<double> a);

EigenDecomposition eig_sym(const SymmetricMatrix& a);

/// True iff lambda_min(A - B) >= -tol.
bool psd_geq(const SymmetricMatrix& a, const SymmetricMatrix& b,
             double tol = 0.0);

/// x^T Q x for positive definite Q.
double weighted_norm_sq(std::span<const double> x, const SymmetricMatrix& q);

struct DetNormalized {
  double normalizer;           // det(D)^{1/d}
  SymmetricMatrix normalized;  // D / det(D)^{1/d}
};

DetNormalized det_normalized(const SymmetricMatrix& d);
double log_det(const SymmetricMatrix& d);

/// Relative threshold below which an eigenvalue is treated as zero when a
/// positive definite matrix is required.
inline constexpr double kPdRelTol = 1e-12;

bool is_positive_definite(const SymmetricMatrix& a);
void require_positive_definite(const SymmetricMatrix& a, const char* what);

SymmetricMatrix inv_psd(const SymmetricMatrix& a);
/// Principal square root of a PSD matrix; tiny negative eigenvalues from
/// round-off are clamped to zero.
SymmetricMatrix sqrt_psd(const SymmetricMatrix& a);
SymmetricMatrix inv_sqrt_psd(const SymmetricMatrix& a);

/// outer * inner * outer, symmetric whenever both factors are.
SymmetricMatrix congruence(const SymmetricMatrix& outer,
                           const SymmetricMatrix& inner);

/// lambda_max(A B) for PSD A, evaluated as lambda_max(A^{1/2} B A^{1/2}).
double lambda_max_product(const SymmetricMatrix& a, const SymmetricMatrix& b);

double max_abs_diff(const SymmetricMatrix& a, const SymmetricMatrix& b);
double dot(std::span<const double> x, std::span<const double> y);

void to_json(nlohmann::json& j, const SymmetricMatrix& m);
void from_json(const nlohmann::json& j, SymmetricMatrix& m);

}  // namespace detvr
