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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "detvr/compression.hpp"
#include "detvr/linalg.hpp"

namespace detvr {

enum class Method {
  kDetMarina,
  kDetDasha,
  kDetCgd,
  kDetCgd2Vr,
  kMarina,
  kDasha,
  kDcgd,
};

std::string_view to_string(Method m);
Method method_from_string(std::string_view name);
/// MARINA, DASHA and DCGD: D = gamma * I with a scalar-derived gamma.
bool is_scalar_baseline(Method m);

enum class WKind { kIdentity, kDiagInverse, kLInverse };

std::string_view to_string(WKind w);
WKind w_kind_from_string(std::string_view name);
/// I, diag(L)^{-1} or L^{-1}.
SymmetricMatrix structure_matrix(WKind w, const SymmetricMatrix& L);

struct AlphaBeta {
  double alpha;
  double beta;
};

/// alpha = (1 - p) / (n p);
/// beta = (1/n) sum_i lambda_max(L_i) lambda_max(L^{-1/2} L_i L^{-1/2}).
AlphaBeta alpha_beta(double p, std::size_t n, std::span<const SymmetricMatrix> local,
                     const SymmetricMatrix& L);
double beta_coefficient(std::span<const SymmetricMatrix> local, const SymmetricMatrix& L);

/// 1 / lambda_max(W^{1/2} L W^{1/2}).
double lambda_w(const SymmetricMatrix& W, const SymmetricMatrix& L);

/// Largest root of a x^2 + x - c = 0 for a >= 0, c > 0, written as
/// 2c / (1 + sqrt(1 + 4ac)) so that a = 0 is exact.
double positive_root(double a, double c);

// ---- det-MARINA -----------------------------------------------------------

struct MarinaScaling {
  double gamma;
  double alpha;
  double beta;
  double lambda_ws;  // Lambda_{W,S}
  double lambda_w;
};

/// gamma = 2 lambda_W / (1 + sqrt(1 + 4 alpha beta Lambda_{W,S} lambda_W)).
MarinaScaling gamma_det_marina(const SymmetricMatrix& W, const SymmetricMatrix& L,
                               std::span<const SymmetricMatrix> local,
                               const SketchDistribution& s, double p, std::size_t n);

/// R(D, S) = beta * lambda_max(E[S D S] - D).
double marina_r(const SymmetricMatrix& D, const SymmetricMatrix& L,
                std::span<const SymmetricMatrix> local, const SketchDistribution& s);

/// D^{-1} >= (alpha R(D, S) + 1) L, with absolute tolerance tol.
bool det_marina_condition(const SymmetricMatrix& D, const SymmetricMatrix& L,
                          std::span<const SymmetricMatrix> local,
                          const SketchDistribution& s, double p, std::size_t n, double tol);

// ---- det-DASHA ------------------------------------------------------------

struct DashaScaling {
  double gamma;
  double momentum;
  double omega_w;
  double c_w;
  double lambda_w;
  double lambda_min_l;
};

/// gamma = 2 lambda_W / (1 + sqrt(1 + 16 C_W lambda_min(L) lambda_W)),
/// C_W = lambda_max(W) omega_W (4 omega_W + 1) / n, a = 1 / (2 omega_W + 1).
DashaScaling gamma_det_dasha(const SymmetricMatrix& W, const SymmetricMatrix& L,
                             const SketchDistribution& s, std::size_t n);

/// D^{-1} >= L + 4 lambda_max(D) omega_D (4 omega_D + 1) / n^2
///            * sum_i lambda_max(L_i) L_i.
bool det_dasha_condition(const SymmetricMatrix& D, const SymmetricMatrix& L,
                         std::span<const SymmetricMatrix> local,
                         const SketchDistribution& s, std::size_t n, double tol);

/// 1 / (2 omega_D + 1); omega_D is invariant under D -> cD.
double dasha_momentum(const SketchDistribution& s, const SymmetricMatrix& D);

// ---- scalar baselines -----------------------------------------------------

double gamma_marina_scalar(double L, double omega, double p, std::size_t n);
/// min{1/L, sqrt(n / (omega L L_max K)), n eps^2 / (4 L L_max omega Delta*)};
/// terms with a zero denominator drop out.
double gamma_dcgd_scalar(double L, double L_max, double omega, std::size_t n,
                         std::size_t K, double eps, double delta_star);
double gamma_dasha_scalar(double L, double L_hat, double omega, std::size_t n);

// ---- distributed det-CGD --------------------------------------------------

struct DetCgdCheck {
  bool admissible;
  double lambda_d;
  bool dld_ok;
  double lambda_bound;  // min{n/K, n eps^2 det(D)^{1/d} / (4 Delta*)}
};

/// lambda_D = max_i lambda_max(L_i^{1/2} (E[S M S] - M) L_i^{1/2}), M = D L D.
double det_cgd_lambda(const SymmetricMatrix& D, const SymmetricMatrix& L,
                      std::span<const SymmetricMatrix> local, const SketchDistribution& s);

DetCgdCheck check_det_cgd(const SymmetricMatrix& D, const SymmetricMatrix& L,
                          std::span<const SymmetricMatrix> local,
                          const SketchDistribution& s, std::size_t n, std::size_t K,
                          double eps, double delta_star);

/// Largest gamma with check_det_cgd(gamma W) admissible, by bisection on
/// (0, lambda_W]. Returns 0 when no tested gamma passes.
double gamma_det_cgd_search(const SymmetricMatrix& W, const SymmetricMatrix& L,
                            std::span<const SymmetricMatrix> local,
                            const SketchDistribution& s, std::size_t n, std::size_t K,
                            double eps, double delta_star);

// ---- det-CGD2-VR ----------------------------------------------------------

struct Cgd2VrCheck {
  bool admissible;
  double r_prime;
};

/// R'(D, S) = (1/n) sum_i lambda_max(D E[T D^{-1} T] D - D) lambda_max(L_i)
///            lambda_max(L^{-1/2} L_i L^{-1/2}).
double cgd2_vr_r_prime(const SymmetricMatrix& D, const SymmetricMatrix& L,
                       std::span<const SymmetricMatrix> local, const SketchDistribution& s);

/// D^{-1} >= (1 + (1 - p) R'(D, S) / (n p)) L.
Cgd2VrCheck gamma_det_cgd2_vr(const SymmetricMatrix& D, const SymmetricMatrix& L,
                              std::span<const SymmetricMatrix> local,
                              const SketchDistribution& s, double p, std::size_t n);

/// R' is linear in gamma, so the condition for D = gamma W is the quadratic
/// alpha R'(W) gamma^2 + gamma - lambda_W <= 0.
double gamma_det_cgd2_vr_scaling(const SymmetricMatrix& W, const SymmetricMatrix& L,
                                 std::span<const SymmetricMatrix> local,
                                 const SketchDistribution& s, double p, std::size_t n);

// ---- assembled stepsizes --------------------------------------------------

/// Problem-level constants every rule may need.
struct ProblemConstants {
  SymmetricMatrix L;
  std::vector<SymmetricMatrix> local;
  std::size_t n = 1;
  double delta0 = 0.0;      // f(x^0) - f*
  double delta_star = 0.0;  // f* - (1/n) sum_i f_i*
};

struct MethodParams {
  Method method = Method::kDetMarina;
  WKind w = WKind::kLInverse;
  SketchDistribution sketch = SketchDistribution::identity(1);
  double p = 1.0;
  std::size_t K = 1;
  double eps = 0.1;
  /// Multiplies the certified gamma; values above 1 make runs inadmissible.
  double gamma_scale = 1.0;
};

struct Certificate {
  std::optional<double> alpha, beta, lambda_ws, lambda_w, omega_w, c_w, lambda_d,
      lambda_bound, r_prime, omega, l_scalar, l_max, l_hat;
  /// Full matrix condition, reported for det-DASHA where runs certify the
  /// reduced scalar quadratic.
  std::optional<bool> matrix_condition;
};

struct StepsizeSpec {
  Method method = Method::kDetMarina;
  WKind w_kind = WKind::kIdentity;
  SymmetricMatrix W;
  double gamma = 0.0;
  SymmetricMatrix D;
  double p = 1.0;
  double momentum = 1.0;
  Certificate cert;
  bool admissible = false;
  std::string reason;  // why admissibility failed, empty otherwise
};

StepsizeSpec make_stepsize(const MethodParams& params, const ProblemConstants& pc);

/// Expected floats sent by all clients over K iterations, initialization
/// included: n (d + K (p d + (1 - p) zeta)) for the coin-flip methods,
/// n (d + K zeta) for DASHA-type and n K zeta for det-CGD / DCGD.
double account_floats(Method m, double p, const SketchDistribution& s, std::size_t n,
                      double K);

struct Complexity {
  double iterations;
  double floats_transmitted;
};

/// Iterations to reach eps^2 stationarity and the expected floats for that
/// many iterations. Throws InadmissibleStepsize for an inadmissible spec.
Complexity predict_complexity(const StepsizeSpec& spec, const ProblemConstants& pc,
                              const SketchDistribution& s, double eps);

void to_json(nlohmann::json& j, const Certificate& c);

}  // namespace detvr
