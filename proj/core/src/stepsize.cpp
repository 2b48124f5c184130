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
#include "detvr/stepsize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "detvr/errors.hpp"

namespace detvr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Relative slack for every admissibility test.
constexpr double kAdmitRel = 1e-10;

void check_locals(std::span<const SymmetricMatrix> local, const SymmetricMatrix& L) {
  if (local.empty()) throw Error("no local smoothness matrices");
  for (const auto& li : local) {
    if (li.dim() != L.dim()) throw DimError("local smoothness matrix dimension mismatch");
  }
}

void check_probability(double p) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw InvalidProbability("p must lie in (0, 1], got " + std::to_string(p));
  }
}

// (1/n) sum_i lambda_max(L_i) L_i.
SymmetricMatrix averaged_product(std::span<const SymmetricMatrix> local) {
  const std::size_t d = local.front().dim();
  std::vector<double> m(d * d, 0.0);
  for (const auto& li : local) {
    const double w = li.lambda_max() / static_cast<double>(local.size());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += w * li.entries()[k];
  }
  return SymmetricMatrix(d, std::move(m));
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kDetMarina: return "det_marina";
    case Method::kDetDasha: return "det_dasha";
    case Method::kDetCgd: return "det_cgd";
    case Method::kDetCgd2Vr: return "det_cgd2_vr";
    case Method::kMarina: return "marina";
    case Method::kDasha: return "dasha";
    case Method::kDcgd: return "dcgd";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  for (Method m : {Method::kDetMarina, Method::kDetDasha, Method::kDetCgd, Method::kDetCgd2Vr,
                   Method::kMarina, Method::kDasha, Method::kDcgd}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

bool is_scalar_baseline(Method m) {
  return m == Method::kMarina || m == Method::kDasha || m == Method::kDcgd;
}

std::string_view to_string(WKind w) {
  switch (w) {
    case WKind::kIdentity: return "I";
    case WKind::kDiagInverse: return "diag_inv";
    case WKind::kLInverse: return "L_inv";
  }
  return "unknown";
}

WKind w_kind_from_string(std::string_view name) {
  if (name == "I" || name == "identity") return WKind::kIdentity;
  if (name == "diag_inv") return WKind::kDiagInverse;
  if (name == "L_inv") return WKind::kLInverse;
  throw ConfigError("unknown W kind '" + std::string(name) + "'");
}

SymmetricMatrix structure_matrix(WKind w, const SymmetricMatrix& L) {
  switch (w) {
    case WKind::kIdentity:
      return SymmetricMatrix::identity(L.dim());
    case WKind::kDiagInverse: {
      Vector diag(L.dim());
      for (std::size_t i = 0; i < L.dim(); ++i) {
        if (!(L(i, i) > 0.0)) throw NotPositiveDefinite("diag(L) has a nonpositive entry");
        diag[i] = 1.0 / L(i, i);
      }
      return SymmetricMatrix::diagonal(diag);
    }
    case WKind::kLInverse:
      return inv_psd(L);
  }
  throw ConfigError("unknown W kind");
}

double beta_coefficient(std::span<const SymmetricMatrix> local, const SymmetricMatrix& L) {
  check_locals(local, L);
  require_positive_definite(L, "L");
  const SymmetricMatrix l_inv_sqrt = inv_sqrt_psd(L);
  double acc = 0.0;
  for (const auto& li : local) {
    acc += li.lambda_max() * congruence(l_inv_sqrt, li).lambda_max();
  }
  return acc / static_cast<double>(local.size());
}

AlphaBeta alpha_beta(double p, std::size_t n, std::span<const SymmetricMatrix> local,
                     const SymmetricMatrix& L) {
  check_probability(p);
  if (n == 0) throw Error("n must be positive");
  return {(1.0 - p) / (static_cast<double>(n) * p), beta_coefficient(local, L)};
}

double lambda_w(const SymmetricMatrix& W, const SymmetricMatrix& L) {
  require_positive_definite(W, "W");
  require_positive_definite(L, "L");
  return 1.0 / lambda_max_product(W, L);
}

double positive_root(double a, double c) { return 2.0 * c / (1.0 + std::sqrt(1.0 + 4.0 * a * c)); }

MarinaScaling gamma_det_marina(const SymmetricMatrix& W, const SymmetricMatrix& L,
                               std::span<const SymmetricMatrix> local,
                               const SketchDistribution& s, double p, std::size_t n) {
  const AlphaBeta ab = alpha_beta(p, n, local, L);
  const double lw = lambda_w(W, L);
  const double lam = lambda_ws(s, W);
  return {positive_root(ab.alpha * ab.beta * lam, lw), ab.alpha, ab.beta, lam, lw};
}

double marina_r(const SymmetricMatrix& D, const SymmetricMatrix& L,
                std::span<const SymmetricMatrix> local, const SketchDistribution& s) {
  return beta_coefficient(local, L) * lambda_ws(s, D);
}

bool det_marina_condition(const SymmetricMatrix& D, const SymmetricMatrix& L,
                          std::span<const SymmetricMatrix> local,
                          const SketchDistribution& s, double p, std::size_t n, double tol) {
  require_positive_definite(D, "D");
  const AlphaBeta ab = alpha_beta(p, n, local, L);
  const double r = ab.beta * lambda_ws(s, D);
  return psd_geq(inv_psd(D), L.scaled(ab.alpha * r + 1.0), tol);
}

DashaScaling gamma_det_dasha(const SymmetricMatrix& W, const SymmetricMatrix& L,
                             const SketchDistribution& s, std::size_t n) {
  if (n == 0) throw Error("n must be positive");
  const double lw = lambda_w(W, L);
  const double om = omega_w(s, W);
  const double c = W.lambda_max() * om * (4.0 * om + 1.0) / static_cast<double>(n);
  const double lmin = L.lambda_min();
  return {positive_root(4.0 * c * lmin, lw), 1.0 / (2.0 * om + 1.0), om, c, lw, lmin};
}

bool det_dasha_condition(const SymmetricMatrix& D, const SymmetricMatrix& L,
                         std::span<const SymmetricMatrix> local,
                         const SketchDistribution& s, std::size_t n, double tol) {
  check_locals(local, L);
  const double om = omega_w(s, D);
  const double coef =
      4.0 * D.lambda_max() * om * (4.0 * om + 1.0) / static_cast<double>(n);
  return psd_geq(inv_psd(D), L + averaged_product(local).scaled(coef), tol);
}

double dasha_momentum(const SketchDistribution& s, const SymmetricMatrix& D) {
  return 1.0 / (2.0 * omega_w(s, D) + 1.0);
}

double gamma_marina_scalar(double L, double omega, double p, std::size_t n) {
  check_probability(p);
  return 1.0 / (L * (1.0 + std::sqrt((1.0 - p) * omega / (p * static_cast<double>(n)))));
}

double gamma_dcgd_scalar(double L, double L_max, double omega, std::size_t n, std::size_t K,
                         double eps, double delta_star) {
  const double nn = static_cast<double>(n);
  double g = 1.0 / L;
  if (omega > 0.0) {
    g = std::min(g, std::sqrt(nn / (omega * L * L_max * static_cast<double>(K))));
    if (delta_star > 0.0) {
      g = std::min(g, nn * eps * eps / (4.0 * L * L_max * omega * delta_star));
    }
  }
  return g;
}

double gamma_dasha_scalar(double L, double L_hat, double omega, std::size_t n) {
  return 1.0 /
         (L + std::sqrt(16.0 * omega * (2.0 * omega + 1.0) / static_cast<double>(n)) * L_hat);
}

double det_cgd_lambda(const SymmetricMatrix& D, const SymmetricMatrix& L,
                      std::span<const SymmetricMatrix> local, const SketchDistribution& s) {
  check_locals(local, L);
  if (s.kind() == SketchDistribution::Kind::kIdentity) return 0.0;
  const SymmetricMatrix m = congruence(D, L);
  const SymmetricMatrix excess = expected_moment(s, m) - m;
  double out = 0.0;
  for (const auto& li : local) {
    out = std::max(out, congruence(sqrt_psd(li), excess).lambda_max());
  }
  return out;
}

DetCgdCheck check_det_cgd(const SymmetricMatrix& D, const SymmetricMatrix& L,
                          std::span<const SymmetricMatrix> local,
                          const SketchDistribution& s, std::size_t n, std::size_t K,
                          double eps, double delta_star) {
  require_positive_definite(D, "D");
  if (K == 0) throw ConfigError("K must be positive");
  const double nn = static_cast<double>(n);
  DetCgdCheck out{};
  out.lambda_d = det_cgd_lambda(D, L, local, s);
  out.dld_ok = psd_geq(D, congruence(D, L), kAdmitRel * D.lambda_max());
  double bound = nn / static_cast<double>(K);
  if (delta_star > 0.0) {
    bound = std::min(bound, nn * eps * eps * det_normalized(D).normalizer / (4.0 * delta_star));
  }
  out.lambda_bound = bound;
  out.admissible = out.dld_ok && out.lambda_d <= bound * (1.0 + kAdmitRel);
  return out;
}

double gamma_det_cgd_search(const SymmetricMatrix& W, const SymmetricMatrix& L,
                            std::span<const SymmetricMatrix> local,
                            const SketchDistribution& s, std::size_t n, std::size_t K,
                            double eps, double delta_star) {
  auto ok = [&](double g) {
    return check_det_cgd(W.scaled(g), L, local, s, n, K, eps, delta_star).admissible;
  };
  double hi = lambda_w(W, L);
  if (ok(hi)) return hi;
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ok(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double cgd2_vr_r_prime(const SymmetricMatrix& D, const SymmetricMatrix& L,
                       std::span<const SymmetricMatrix> local, const SketchDistribution& s) {
  check_locals(local, L);
  require_positive_definite(D, "D");
  double sketch_term = 0.0;
  if (s.kind() != SketchDistribution::Kind::kIdentity) {
    const SymmetricMatrix outer = congruence(D, expected_moment(s, inv_psd(D)));
    sketch_term = std::max(0.0, (outer - D).lambda_max());
  }
  const SymmetricMatrix l_inv_sqrt = inv_sqrt_psd(L);
  double acc = 0.0;
  for (const auto& li : local) {
    acc += li.lambda_max() * congruence(l_inv_sqrt, li).lambda_max();
  }
  return sketch_term * acc / static_cast<double>(local.size());
}

Cgd2VrCheck gamma_det_cgd2_vr(const SymmetricMatrix& D, const SymmetricMatrix& L,
                              std::span<const SymmetricMatrix> local,
                              const SketchDistribution& s, double p, std::size_t n) {
  check_probability(p);
  const double alpha = (1.0 - p) / (static_cast<double>(n) * p);
  const double r = cgd2_vr_r_prime(D, L, local, s);
  const bool ok =
      psd_geq(inv_psd(D), L.scaled(1.0 + alpha * r), kAdmitRel * L.lambda_max());
  return {ok, r};
}

double gamma_det_cgd2_vr_scaling(const SymmetricMatrix& W, const SymmetricMatrix& L,
                                 std::span<const SymmetricMatrix> local,
                                 const SketchDistribution& s, double p, std::size_t n) {
  check_probability(p);
  const double alpha = (1.0 - p) / (static_cast<double>(n) * p);
  return positive_root(alpha * cgd2_vr_r_prime(W, L, local, s), lambda_w(W, L));
}

double account_floats(Method m, double p, const SketchDistribution& s, std::size_t n,
                      double K) {
  const double d = static_cast<double>(s.dim());
  const double zeta = static_cast<double>(expected_density(s));
  const double nn = static_cast<double>(n);
  switch (m) {
    case Method::kDetMarina:
    case Method::kMarina:
    case Method::kDetCgd2Vr:
      return nn * (d + K * (p * d + (1.0 - p) * zeta));
    case Method::kDetDasha:
    case Method::kDasha:
      return nn * (d + K * zeta);
    case Method::kDetCgd:
    case Method::kDcgd:
      return nn * K * zeta;
  }
  return 0.0;
}

StepsizeSpec make_stepsize(const MethodParams& mp, const ProblemConstants& pc) {
  const SymmetricMatrix& L = pc.L;
  const std::span<const SymmetricMatrix> local = pc.local;
  check_locals(local, L);
  require_positive_definite(L, "L");
  if (mp.sketch.dim() != L.dim()) throw DimError("sketch dimension does not match problem");
  if (!(mp.gamma_scale > 0.0)) throw ConfigError("gamma_scale must be positive");
  if (mp.K == 0) throw ConfigError("K must be positive");

  StepsizeSpec spec;
  spec.method = mp.method;
  spec.p = mp.p;
  const double psd_tol = kAdmitRel * L.lambda_max();
  const std::size_t n = pc.n;
  Certificate& cert = spec.cert;

  if (is_scalar_baseline(mp.method)) {
    spec.w_kind = WKind::kIdentity;
    spec.W = SymmetricMatrix::identity(L.dim());
    const double om = omega(mp.sketch);
    const double l_scalar = L.lambda_max();
    cert.omega = om;
    cert.l_scalar = l_scalar;
    double certified = 0.0;
    if (mp.method == Method::kMarina) {
      certified = gamma_marina_scalar(l_scalar, om, mp.p, n);
      cert.alpha = (1.0 - mp.p) / (static_cast<double>(n) * mp.p);
    } else if (mp.method == Method::kDasha) {
      double sq = 0.0;
      for (const auto& li : local) sq += li.lambda_max() * li.lambda_max();
      const double l_hat = std::sqrt(sq / static_cast<double>(local.size()));
      cert.l_hat = l_hat;
      certified = gamma_dasha_scalar(l_scalar, l_hat, om, n);
      spec.momentum = 1.0 / (2.0 * om + 1.0);
    } else {
      double l_max = 0.0;
      for (const auto& li : local) l_max = std::max(l_max, li.lambda_max());
      cert.l_max = l_max;
      certified = gamma_dcgd_scalar(l_scalar, l_max, om, n, mp.K, mp.eps, pc.delta_star);
    }
    spec.gamma = certified * mp.gamma_scale;
    spec.D = spec.W.scaled(spec.gamma);
    spec.admissible = spec.gamma <= certified * (1.0 + 1e-12);
    if (!spec.admissible) spec.reason = "gamma exceeds the scalar stepsize bound";
    return spec;
  }

  spec.w_kind = mp.w;
  spec.W = structure_matrix(mp.w, L);

  switch (mp.method) {
    case Method::kDetMarina: {
      const MarinaScaling ms = gamma_det_marina(spec.W, L, local, mp.sketch, mp.p, n);
      cert.alpha = ms.alpha;
      cert.beta = ms.beta;
      cert.lambda_ws = ms.lambda_ws;
      cert.lambda_w = ms.lambda_w;
      spec.gamma = ms.gamma * mp.gamma_scale;
      spec.D = spec.W.scaled(spec.gamma);
      spec.admissible = det_marina_condition(spec.D, L, local, mp.sketch, mp.p, n, psd_tol);
      if (!spec.admissible) spec.reason = "D^{-1} >= (alpha R(D,S) + 1) L fails";
      break;
    }
    case Method::kDetDasha: {
      const DashaScaling ds = gamma_det_dasha(spec.W, L, mp.sketch, n);
      cert.omega_w = ds.omega_w;
      cert.c_w = ds.c_w;
      cert.lambda_w = ds.lambda_w;
      cert.lambda_ws = lambda_ws(mp.sketch, spec.W);
      spec.gamma = ds.gamma * mp.gamma_scale;
      spec.D = spec.W.scaled(spec.gamma);
      spec.momentum = ds.momentum;
      const double g = spec.gamma;
      const double quad = 4.0 * ds.c_w * ds.lambda_min_l * g * g + g;
      spec.admissible = quad <= ds.lambda_w * (1.0 + kAdmitRel);
      cert.matrix_condition =
          det_dasha_condition(spec.D, L, local, mp.sketch, n, psd_tol);
      if (!spec.admissible) spec.reason = "gamma exceeds the det-DASHA scaling root";
      break;
    }
    case Method::kDetCgd: {
      const double g0 =
          gamma_det_cgd_search(spec.W, L, local, mp.sketch, n, mp.K, mp.eps, pc.delta_star);
      if (!(g0 > 0.0)) {
        spec.gamma = 0.0;
        spec.D = SymmetricMatrix::zero(L.dim());
        spec.admissible = false;
        spec.reason = "no positive gamma passes the det-CGD condition";
        break;
      }
      spec.gamma = g0 * mp.gamma_scale;
      spec.D = spec.W.scaled(spec.gamma);
      const DetCgdCheck chk =
          check_det_cgd(spec.D, L, local, mp.sketch, n, mp.K, mp.eps, pc.delta_star);
      cert.lambda_d = chk.lambda_d;
      cert.lambda_bound = chk.lambda_bound;
      cert.lambda_w = lambda_w(spec.W, L);
      spec.admissible = chk.admissible;
      if (!spec.admissible) {
        spec.reason = chk.dld_ok ? "lambda_D exceeds its bound" : "DLD <= D fails";
      }
      break;
    }
    case Method::kDetCgd2Vr: {
      const double g0 = gamma_det_cgd2_vr_scaling(spec.W, L, local, mp.sketch, mp.p, n);
      spec.gamma = g0 * mp.gamma_scale;
      spec.D = spec.W.scaled(spec.gamma);
      const Cgd2VrCheck chk = gamma_det_cgd2_vr(spec.D, L, local, mp.sketch, mp.p, n);
      cert.alpha = (1.0 - mp.p) / (static_cast<double>(n) * mp.p);
      cert.r_prime = chk.r_prime;
      cert.lambda_w = lambda_w(spec.W, L);
      spec.admissible = chk.admissible;
      if (!spec.admissible) spec.reason = "D^{-1} >= (1 + alpha R'(D,S)) L fails";
      break;
    }
    default:
      break;
  }
  return spec;
}

Complexity predict_complexity(const StepsizeSpec& spec, const ProblemConstants& pc,
                              const SketchDistribution& s, double eps) {
  if (!spec.admissible) {
    throw InadmissibleStepsize(std::string(to_string(spec.method)) + ": " +
                               (spec.reason.empty() ? "inadmissible" : spec.reason));
  }
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  const double det_root = det_normalized(spec.D).normalizer;
  const bool cgd = spec.method == Method::kDetCgd || spec.method == Method::kDcgd;
  const double lead = cgd ? 12.0 : 2.0;
  const double k = lead * std::max(pc.delta0, 0.0) / (det_root * eps * eps);
  return {k, account_floats(spec.method, spec.p, s, pc.n, k)};
}

void to_json(nlohmann::json& j, const Certificate& c) {
  j = nlohmann::json::object();
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("alpha", c.alpha);
  put("beta", c.beta);
  put("Lambda", c.lambda_ws);
  put("lambda_W", c.lambda_w);
  put("omega_W", c.omega_w);
  put("C_W", c.c_w);
  put("lambda_D", c.lambda_d);
  put("lambda_D_bound", c.lambda_bound);
  put("R_prime", c.r_prime);
  put("omega", c.omega);
  put("L", c.l_scalar);
  put("L_max", c.l_max);
  put("L_hat", c.l_hat);
  if (c.matrix_condition) j["matrix_condition"] = *c.matrix_condition;
}

}  // namespace detvr
