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
#include "detvr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "detvr/errors.hpp"

namespace detvr {

namespace {

void check_same_dim(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  if (a.dim() != b.dim()) {
    throw DimError("matrix dimension mismatch: " + std::to_string(a.dim()) +
                   " vs " + std::to_string(b.dim()));
  }
}

// Row-major product of two square arrays.
std::vector<double> matmul(std::size_t n, std::span<const double> a,
                           std::span<const double> b) {
  std::vector<double> c(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a[i * n + k];
      if (aik == 0.0) continue;
      const double* brow = &b[k * n];
      double* crow = &c[i * n];
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

}  // namespace

EigenDecomposition jacobi_eigen(std::size_t n, std::vector<double> a) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  double fro2 = 0.0;
  for (double x : a) fro2 += x * x;

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off <= 1e-32 * fro2) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = std::copysign(1.0, theta) /
              (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a[i * n + i] < a[j * n + j];
  });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors.resize(n * n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.values[k] = a[src * n + src];
    for (std::size_t i = 0; i < n; ++i) out.vectors[i * n + k] = v[i * n + src];
  }
  return out;
}

SymmetricMatrix::SymmetricMatrix(std::size_t dim, std::vector<double> row_major)
    : dim_(dim), a_(std::move(row_major)) {
  if (dim_ == 0) throw InvalidMatrix("matrix dimension must be positive");
  if (a_.size() != dim_ * dim_) {
    throw DimError("expected " + std::to_string(dim_ * dim_) + " entries, got " +
                   std::to_string(a_.size()));
  }
  for (double x : a_) {
    if (!std::isfinite(x)) throw InvalidMatrix("non-finite matrix entry");
  }
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = i + 1; j < dim_; ++j) {
      const double s = 0.5 * (a_[i * dim_ + j] + a_[j * dim_ + i]);
      a_[i * dim_ + j] = s;
      a_[j * dim_ + i] = s;
    }
  }
  eig_ = jacobi_eigen(dim_, a_);
}

SymmetricMatrix::SymmetricMatrix(Trusted, std::size_t dim, std::vector<double> a,
                                 EigenDecomposition eig)
    : dim_(dim), a_(std::move(a)), eig_(std::move(eig)) {}

SymmetricMatrix SymmetricMatrix::identity(std::size_t dim, double scale) {
  std::vector<double> a(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) a[i * dim + i] = scale;
  return SymmetricMatrix(dim, std::move(a));
}

SymmetricMatrix SymmetricMatrix::zero(std::size_t dim) {
  return SymmetricMatrix(dim, std::vector<double>(dim * dim, 0.0));
}

SymmetricMatrix SymmetricMatrix::diagonal(std::span<const double> diag) {
  const std::size_t n = diag.size();
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) a[i * n + i] = diag[i];
  return SymmetricMatrix(n, std::move(a));
}

SymmetricMatrix SymmetricMatrix::outer_sum(std::size_t dim,
                                           std::span<const Vector> vectors,
                                           double weight) {
  std::vector<double> a(dim * dim, 0.0);
  for (const Vector& v : vectors) {
    if (v.size() != dim) throw DimError("outer_sum: vector length mismatch");
    for (std::size_t i = 0; i < dim; ++i) {
      if (v[i] == 0.0) continue;
      const double wi = weight * v[i];
      for (std::size_t j = i; j < dim; ++j) a[i * dim + j] += wi * v[j];
    }
  }
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < i; ++j) a[i * dim + j] = a[j * dim + i];
  return SymmetricMatrix(dim, std::move(a));
}

double SymmetricMatrix::lambda_max() const { return eig_.values.back(); }
double SymmetricMatrix::lambda_min() const { return eig_.values.front(); }

Vector SymmetricMatrix::apply(std::span<const double> x) const {
  Vector out(dim_);
  apply_into(x, out);
  return out;
}

void SymmetricMatrix::apply_into(std::span<const double> x,
                                 std::span<double> out) const {
  if (x.size() != dim_ || out.size() != dim_) {
    throw DimError("matrix-vector dimension mismatch");
  }
  for (std::size_t i = 0; i < dim_; ++i) {
    const double* row = &a_[i * dim_];
    double acc = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
}

SymmetricMatrix SymmetricMatrix::scaled(double c) const {
  if (!std::isfinite(c)) throw InvalidMatrix("non-finite scale factor");
  std::vector<double> a(a_);
  for (double& x : a) x *= c;
  EigenDecomposition eig = eig_;
  for (double& lam : eig.values) lam *= c;
  if (c < 0.0) {
    std::reverse(eig.values.begin(), eig.values.end());
    for (std::size_t i = 0; i < dim_; ++i) {
      std::reverse(eig.vectors.begin() + static_cast<std::ptrdiff_t>(i * dim_),
                   eig.vectors.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim_));
    }
  }
  return SymmetricMatrix(Trusted{}, dim_, std::move(a), std::move(eig));
}

SymmetricMatrix SymmetricMatrix::diag_part() const {
  Vector d(dim_);
  for (std::size_t i = 0; i < dim_; ++i) d[i] = a_[i * dim_ + i];
  return diagonal(d);
}

SymmetricMatrix SymmetricMatrix::spectral_map(
    const std::function<double(double)>& f) const {
  const std::size_t n = dim_;
  Vector mapped(n);
  for (std::size_t k = 0; k < n; ++k) mapped[k] = f(eig_.values[k]);

  std::vector<double> a(n * n, 0.0);
  const auto& v = eig_.vectors;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += v[i * n + k] * mapped[k] * v[j * n + k];
      a[i * n + j] = acc;
      a[j * n + i] = acc;
    }
  }
  for (double x : a) {
    if (!std::isfinite(x)) throw InvalidMatrix("spectral map produced non-finite entry");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return mapped[i] < mapped[j]; });
  EigenDecomposition eig;
  eig.values.resize(n);
  eig.vectors.resize(n * n);
  for (std::size_t k = 0; k < n; ++k) {
    eig.values[k] = mapped[order[k]];
    for (std::size_t i = 0; i < n; ++i) eig.vectors[i * n + k] = v[i * n + order[k]];
  }
  return SymmetricMatrix(Trusted{}, n, std::move(a), std::move(eig));
}

SymmetricMatrix operator+(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  check_same_dim(a, b);
  std::vector<double> c(a.a_);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b.a_[i];
  return SymmetricMatrix(a.dim_, std::move(c));
}

SymmetricMatrix operator-(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  check_same_dim(a, b);
  std::vector<double> c(a.a_);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b.a_[i];
  return SymmetricMatrix(a.dim_, std::move(c));
}

EigenDecomposition eig_sym(const SymmetricMatrix& a) { return a.eigen(); }

bool psd_geq(const SymmetricMatrix& a, const SymmetricMatrix& b, double tol) {
  check_same_dim(a, b);
  return (a - b).lambda_min() >= -tol;
}

bool is_positive_definite(const SymmetricMatrix& a) {
  const double hi = a.lambda_max();
  return hi > 0.0 && a.lambda_min() > kPdRelTol * hi;
}

void require_positive_definite(const SymmetricMatrix& a, const char* what) {
  if (!is_positive_definite(a)) {
    throw NotPositiveDefinite(std::string(what) +
                              " is not positive definite (lambda_min = " +
                              std::to_string(a.lambda_min()) + ")");
  }
}

double weighted_norm_sq(std::span<const double> x, const SymmetricMatrix& q) {
  if (x.size() != q.dim()) throw DimError("weighted_norm_sq: dimension mismatch");
  require_positive_definite(q, "weight matrix");
  const std::size_t n = q.dim();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += q(i, j) * x[j];
    acc += x[i] * row;
  }
  return acc;
}

double log_det(const SymmetricMatrix& d) {
  double acc = 0.0;
  for (double lam : d.eigenvalues()) {
    if (!(lam > 0.0)) throw NotPositiveDefinite("log_det: non-positive eigenvalue");
    acc += std::log(lam);
  }
  return acc;
}

DetNormalized det_normalized(const SymmetricMatrix& d) {
  const double normalizer = std::exp(log_det(d) / static_cast<double>(d.dim()));
  return {normalizer, d.scaled(1.0 / normalizer)};
}

SymmetricMatrix inv_psd(const SymmetricMatrix& a) {
  require_positive_definite(a, "inv_psd argument");
  return a.spectral_map([](double lam) { return 1.0 / lam; });
}

SymmetricMatrix sqrt_psd(const SymmetricMatrix& a) {
  return a.spectral_map([](double lam) { return std::sqrt(std::max(lam, 0.0)); });
}

SymmetricMatrix inv_sqrt_psd(const SymmetricMatrix& a) {
  require_positive_definite(a, "inv_sqrt_psd argument");
  return a.spectral_map([](double lam) { return 1.0 / std::sqrt(lam); });
}

SymmetricMatrix congruence(const SymmetricMatrix& outer, const SymmetricMatrix& inner) {
  check_same_dim(outer, inner);
  const std::size_t n = outer.dim();
  auto tmp = matmul(n, outer.entries(), inner.entries());
  return SymmetricMatrix(n, matmul(n, tmp, outer.entries()));
}

double lambda_max_product(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  return congruence(sqrt_psd(a), b).lambda_max();
}

double max_abs_diff(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  check_same_dim(a, b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.entries().size(); ++i)
    m = std::max(m, std::abs(a.entries()[i] - b.entries()[i]));
  return m;
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

void to_json(nlohmann::json& j, const SymmetricMatrix& m) {
  j = nlohmann::json{{"dim", m.dim()},
                     {"entries", std::vector<double>(m.entries().begin(),
                                                     m.entries().end())}};
}

void from_json(const nlohmann::json& j, SymmetricMatrix& m) {
  m = SymmetricMatrix(j.at("dim").get<std::size_t>(),
                      j.at("entries").get<std::vector<double>>());
}

}  // namespace detvr
