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
#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "detvr/compression.hpp"
#include "detvr/errors.hpp"
#include "detvr/problem.hpp"
#include "detvr/stepsize.hpp"
#include "oracles.hpp"

namespace detvr {
namespace {

std::vector<SymmetricMatrix> scalar_locals(std::size_t d, std::initializer_list<double> c) {
  std::vector<SymmetricMatrix> out;
  for (double v : c) out.push_back(SymmetricMatrix::identity(d, v));
  return out;
}

struct Instance {
  std::vector<SymmetricMatrix> local;
  SymmetricMatrix L;
};

Instance random_instance(std::size_t d, std::size_t n, Rng& rng, GlobalLVariant v) {
  Instance out;
  for (std::size_t i = 0; i < n; ++i) out.local.push_back(testing::random_pd(d, rng));
  out.L = global_L_implicit(out.local, v);
  return out;
}

TEST(AlphaBeta, Examples) {
  const auto local = scalar_locals(2, {1.0, 3.0});
  const auto L = SymmetricMatrix::identity(2, 2.0);
  const AlphaBeta one = alpha_beta(1.0, 2, local, L);
  EXPECT_EQ(one.alpha, 0.0);
  EXPECT_NEAR(one.beta, (1.0 * 0.5 + 3.0 * 1.5) / 2.0, 1e-14);
  EXPECT_NEAR(alpha_beta(0.25, 3, local, L).alpha, 1.0, 1e-15);

  Rng rng(1);
  const auto l = testing::random_pd(3, rng);
  const std::vector<SymmetricMatrix> same = {l, l};
  EXPECT_NEAR(beta_coefficient(same, l), l.lambda_max(), 1e-10 * l.lambda_max());

  EXPECT_THROW(alpha_beta(0.0, 1, local, L), InvalidProbability);
  EXPECT_THROW(alpha_beta(1.5, 1, local, L), InvalidProbability);
}

TEST(PositiveRoot, SolvesTheQuadratic) {
  EXPECT_EQ(positive_root(0.0, 3.0), 3.0);
  for (double a : {0.1, 1.0, 50.0}) {
    for (double c : {0.01, 1.0, 9.0}) {
      const double x = positive_root(a, c);
      EXPECT_NEAR(a * x * x + x, c, 1e-13 * c);
    }
  }
}

TEST(DetMarina, IdentitySketchGivesLambdaW) {
  Rng rng(2);
  const Instance in = random_instance(4, 3, rng, GlobalLVariant::kAveragedProduct);
  const auto W = inv_psd(in.L);
  const auto ms = gamma_det_marina(W, in.L, in.local, SketchDistribution::identity(4), 0.2, 3);
  EXPECT_EQ(ms.lambda_ws, 0.0);
  EXPECT_NEAR(ms.gamma, 1.0, 1e-10);
  EXPECT_NEAR(ms.lambda_w, 1.0, 1e-10);
}

TEST(DetMarina, IsotropicExample) {
  const double ell = 3.0;
  const auto local = scalar_locals(2, {ell});
  const auto L = SymmetricMatrix::identity(2, ell);
  const auto ms = gamma_det_marina(SymmetricMatrix::identity(2), L, local,
                                   SketchDistribution::rand_tau(2, 1), 0.5, 1);
  EXPECT_NEAR(ms.alpha, 1.0, 1e-15);
  EXPECT_NEAR(ms.beta, ell, 1e-13);
  EXPECT_NEAR(ms.lambda_ws, 1.0, 1e-14);
  EXPECT_NEAR(ms.gamma, (std::sqrt(5.0) - 1.0) / (2.0 * ell), 1e-14);
  // The scalar rule is never larger in the isotropic case.
  EXPECT_LE(gamma_marina_scalar(ell, 1.0, 0.5, 1), ms.gamma);
}

TEST(DetMarina, ConditionIsTightAtTheRoot) {
  Rng rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const Instance in = random_instance(4, 3, rng, GlobalLVariant::kAveragedProduct);
    const auto s = SketchDistribution::rand_tau(4, 1 + rep % 3);
    for (WKind wk : {WKind::kIdentity, WKind::kDiagInverse, WKind::kLInverse}) {
      const auto W = structure_matrix(wk, in.L);
      const double g = gamma_det_marina(W, in.L, in.local, s, 0.3, 3).gamma;
      const double tol = 1e-8 * in.L.lambda_max();
      EXPECT_TRUE(det_marina_condition(W.scaled(g), in.L, in.local, s, 0.3, 3, tol));
      EXPECT_TRUE(det_marina_condition(W.scaled(0.999 * g), in.L, in.local, s, 0.3, 3, 0.0));
      EXPECT_FALSE(det_marina_condition(W.scaled(1.001 * g), in.L, in.local, s, 0.3, 3, 0.0));
    }
  }
}

TEST(DetDasha, IdentitySketch) {
  Rng rng(4);
  const Instance in = random_instance(3, 2, rng, GlobalLVariant::kMinEigenScaled);
  const auto ds = gamma_det_dasha(inv_psd(in.L), in.L, SketchDistribution::identity(3), 2);
  EXPECT_NEAR(ds.gamma, 1.0, 1e-10);
  EXPECT_EQ(ds.momentum, 1.0);
}

TEST(DetDasha, IsotropicExample) {
  // W = I, L = I, Rand-1 in d = 2: omega = 1, C = 5 / n, root of
  // 4 C gamma^2 + gamma = 1.
  const auto L = SymmetricMatrix::identity(2);
  const auto ds = gamma_det_dasha(L, L, SketchDistribution::rand_tau(2, 1), 5);
  EXPECT_NEAR(ds.omega_w, 1.0, 1e-14);
  EXPECT_NEAR(ds.c_w, 1.0, 1e-14);
  EXPECT_NEAR(ds.gamma, (std::sqrt(17.0) - 1.0) / 8.0, 1e-14);
  EXPECT_NEAR(ds.momentum, 1.0 / 3.0, 1e-15);
}

TEST(DetDasha, MatrixConditionTightWithMinEigenL) {
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const Instance in = random_instance(4, 3, rng, GlobalLVariant::kMinEigenScaled);
    const auto s = SketchDistribution::rand_tau(4, 1 + rep % 4);
    const auto W = structure_matrix(rep % 2 ? WKind::kLInverse : WKind::kDiagInverse, in.L);
    const double g = gamma_det_dasha(W, in.L, s, 3).gamma;
    EXPECT_TRUE(det_dasha_condition(W.scaled(g), in.L, in.local, s, 3, 1e-8 * in.L.lambda_max()));
    EXPECT_TRUE(det_dasha_condition(W.scaled(0.999 * g), in.L, in.local, s, 3, 0.0));
    if (s.tau() < 4) {
      EXPECT_FALSE(det_dasha_condition(W.scaled(1.001 * g), in.L, in.local, s, 3, 0.0));
    }
  }
}

TEST(DetDasha, MomentumScaleInvariant) {
  Rng rng(6);
  const auto w = testing::random_pd(5, rng);
  const auto s = SketchDistribution::rand_tau(5, 2);
  EXPECT_NEAR(dasha_momentum(s, w), dasha_momentum(s, w.scaled(40.0)), 1e-12);
}

TEST(ScalarRules, Examples) {
  EXPECT_NEAR(gamma_marina_scalar(2.0, 1.0, 0.5, 1), 0.25, 1e-15);
  EXPECT_NEAR(gamma_marina_scalar(2.0, 5.0, 1.0, 1), 0.5, 1e-15);
  EXPECT_NEAR(gamma_dcgd_scalar(4.0, 9.0, 0.0, 3, 10, 0.1, 1.0), 0.25, 1e-15);
  EXPECT_NEAR(gamma_dcgd_scalar(1.0, 1.0, 1.0, 1, 1, 2.0, 1.0), 1.0, 1e-15);
  EXPECT_GT(gamma_dcgd_scalar(1.0, 2.0, 3.0, 1, 10, 0.1, 0.0),
            gamma_dcgd_scalar(1.0, 2.0, 3.0, 1, 1000, 0.1, 0.0));
  EXPECT_NEAR(gamma_dasha_scalar(2.0, 7.0, 0.0, 4), 0.5, 1e-15);
  EXPECT_NEAR(gamma_dasha_scalar(1.0, 1.0, 1.0, 48), 0.5, 1e-15);
}

TEST(DetCgd, DldCondition) {
  Rng rng(7);
  const Instance in = random_instance(3, 2, rng, GlobalLVariant::kAveragedProduct);
  const auto id = SketchDistribution::identity(3);
  const auto linv = inv_psd(in.L);
  const auto ok = check_det_cgd(linv, in.L, in.local, id, 2, 100, 0.1, 0.0);
  EXPECT_EQ(ok.lambda_d, 0.0);
  EXPECT_TRUE(ok.dld_ok);
  EXPECT_TRUE(ok.admissible);
  EXPECT_FALSE(check_det_cgd(linv.scaled(2.0), in.L, in.local, id, 2, 100, 0.1, 0.0).dld_ok);
}

TEST(DetCgd, LambdaMatchesMonteCarlo) {
  Rng rng(8);
  const std::size_t d = 4;
  const Instance in = random_instance(d, 2, rng, GlobalLVariant::kAveragedProduct);
  const auto s = SketchDistribution::rand_tau(d, 2);
  const auto D = inv_psd(in.L).scaled(0.3);
  const double closed = det_cgd_lambda(D, in.L, in.local, s);

  // Find the maximizing client and its top eigenvector, then estimate the
  // Rayleigh quotient u^T L_i^{1/2} E[(S - I) M (S - I)] L_i^{1/2} u.
  const auto M = congruence(D, in.L);
  const auto excess = expected_moment(s, M) - M;
  std::size_t best = 0;
  double best_val = -1.0;
  for (std::size_t i = 0; i < in.local.size(); ++i) {
    const double v = congruence(sqrt_psd(in.local[i]), excess).lambda_max();
    if (v > best_val) best_val = v, best = i;
  }
  const auto root = sqrt_psd(in.local[best]);
  const auto top = congruence(root, excess).eigen();
  Vector u(d);
  for (std::size_t r = 0; r < d; ++r) u[r] = top.vectors[r * d + (d - 1)];
  const Vector v = root.apply(u);

  const int draws = 100000;
  double sum = 0.0, sum_sq = 0.0;
  Rng mc(9);
  for (int k = 0; k < draws; ++k) {
    const Vector sv = sample(s, mc).apply(v);
    Vector w(d);
    for (std::size_t t = 0; t < d; ++t) w[t] = sv[t] - v[t];
    const double q = weighted_norm_sq(w, M);
    sum += q;
    sum_sq += q * q;
  }
  const double mean = sum / draws;
  const double sd = std::sqrt(sum_sq / draws - mean * mean);
  EXPECT_NEAR(mean, closed, 3.0 * sd / std::sqrt(draws));
}

double d3_closed_form(const SymmetricMatrix& W, const Instance& in, const SketchDistribution& s,
                      std::size_t n, std::size_t K, double eps, double delta_star) {
  const double lw = lambda_w(W, in.L);
  const double lp = det_cgd_lambda(W, in.L, in.local, s);
  const double det_root = det_normalized(W).normalizer;
  return std::min({lw, std::sqrt(n / (K * lp)), n * eps * eps * det_root / (4.0 * delta_star * lp)});
}

TEST(DetCgd, SearchMatchesClosedForm) {
  Rng rng(10);
  const Instance in = random_instance(4, 3, rng, GlobalLVariant::kAveragedProduct);
  const auto s = SketchDistribution::rand_tau(4, 1);
  const auto W = structure_matrix(WKind::kDiagInverse, in.L);
  struct Case {
    std::size_t K;
    double eps;
    double delta_star;
  };
  // Each case makes a different term of the minimum binding.
  for (const Case& c : {Case{1, 10.0, 1e-3}, Case{100000, 10.0, 1e-3}, Case{10, 1e-3, 10.0}}) {
    const double expected = d3_closed_form(W, in, s, 3, c.K, c.eps, c.delta_star);
    const double got = gamma_det_cgd_search(W, in.L, in.local, s, 3, c.K, c.eps, c.delta_star);
    EXPECT_NEAR(got, expected, 1e-9 * expected) << "K=" << c.K;
  }
}

TEST(DetCgd2Vr, IsotropicCorrectedScalarCondition) {
  const double ell = 2.0;
  const auto local = scalar_locals(2, {ell});
  const auto L = SymmetricMatrix::identity(2, ell);
  const auto s = SketchDistribution::rand_tau(2, 1);  // omega = 1
  const double p = 0.5;                                // alpha = 1 with n = 1
  const double a = 1.0;                                // sqrt(alpha omega)
  const double gamma1 = 1.0 / (ell * (1.0 + a));
  const double lhs = a * a * ell * ell * gamma1 + ell - 1.0 / gamma1;
  EXPECT_NEAR(lhs, -a * ell / (1.0 + a), 1e-14);

  const auto chk = gamma_det_cgd2_vr(SymmetricMatrix::identity(2, gamma1), L, local, s, p, 1);
  EXPECT_TRUE(chk.admissible);
  EXPECT_NEAR(chk.r_prime, gamma1 * 1.0 * ell, 1e-14);

  const double g = gamma_det_cgd2_vr_scaling(SymmetricMatrix::identity(2), L, local, s, p, 1);
  EXPECT_NEAR(g, (std::sqrt(5.0) - 1.0) / (2.0 * ell), 1e-14);
}

TEST(DetCgd2Vr, RPrimeIsLinearInScale) {
  Rng rng(11);
  const Instance in = random_instance(4, 2, rng, GlobalLVariant::kAveragedProduct);
  const auto s = SketchDistribution::rand_tau(4, 2);
  const auto W = inv_psd(in.L);
  const double base = cgd2_vr_r_prime(W, in.L, in.local, s);
  EXPECT_NEAR(cgd2_vr_r_prime(W.scaled(0.37), in.L, in.local, s), 0.37 * base, 1e-10 * base);
  EXPECT_EQ(cgd2_vr_r_prime(W, in.L, in.local, SketchDistribution::identity(4)), 0.0);
}

TEST(DetCgd2Vr, ConditionIsTightAtTheRoot) {
  Rng rng(12);
  for (int rep = 0; rep < 10; ++rep) {
    const Instance in = random_instance(3, 2, rng, GlobalLVariant::kAveragedProduct);
    const auto s = SketchDistribution::rand_tau(3, 1);
    const auto W = structure_matrix(WKind::kDiagInverse, in.L);
    const double g = gamma_det_cgd2_vr_scaling(W, in.L, in.local, s, 0.2, 2);
    EXPECT_TRUE(gamma_det_cgd2_vr(W.scaled(g), in.L, in.local, s, 0.2, 2).admissible);
    EXPECT_TRUE(gamma_det_cgd2_vr(W.scaled(0.999 * g), in.L, in.local, s, 0.2, 2).admissible);
    EXPECT_FALSE(gamma_det_cgd2_vr(W.scaled(1.001 * g), in.L, in.local, s, 0.2, 2).admissible);
  }
}

ProblemConstants constants(const Instance& in, double delta0) {
  ProblemConstants pc;
  pc.L = in.L;
  pc.local = in.local;
  pc.n = in.local.size();
  pc.delta0 = delta0;
  pc.delta_star = 0.1;
  return pc;
}

TEST(MakeStepsize, DEqualsGammaW) {
  Rng rng(13);
  const Instance in = random_instance(4, 3, rng, GlobalLVariant::kAveragedProduct);
  const auto pc = constants(in, 1.0);
  for (Method m : {Method::kDetMarina, Method::kDetDasha, Method::kDetCgd, Method::kDetCgd2Vr,
                   Method::kMarina, Method::kDasha, Method::kDcgd}) {
    MethodParams mp;
    mp.method = m;
    mp.sketch = SketchDistribution::rand_tau(4, 1);
    mp.p = 0.25;
    mp.K = 50;
    const auto spec = make_stepsize(mp, pc);
    EXPECT_TRUE(spec.admissible) << to_string(m) << ": " << spec.reason;
    EXPECT_LE(max_abs_diff(spec.D, spec.W.scaled(spec.gamma)), 1e-14) << to_string(m);
    if (is_scalar_baseline(m)) EXPECT_EQ(spec.w_kind, WKind::kIdentity);
  }
}

TEST(MakeStepsize, ScaleAboveOneIsInadmissible) {
  Rng rng(14);
  const Instance in = random_instance(4, 3, rng, GlobalLVariant::kAveragedProduct);
  const auto pc = constants(in, 1.0);
  for (Method m : {Method::kDetMarina, Method::kDetCgd, Method::kDetCgd2Vr, Method::kMarina,
                   Method::kDcgd}) {
    MethodParams mp;
    mp.method = m;
    mp.sketch = SketchDistribution::rand_tau(4, 1);
    mp.p = 0.25;
    mp.K = 50;
    mp.gamma_scale = 1.05;
    const auto spec = make_stepsize(mp, pc);
    EXPECT_FALSE(spec.admissible) << to_string(m);
    EXPECT_FALSE(spec.reason.empty());
    EXPECT_THROW(predict_complexity(spec, pc, mp.sketch, 0.1), InadmissibleStepsize);
  }
}

TEST(PredictComplexity, ScalesWithInitialGap) {
  Rng rng(15);
  const Instance in = random_instance(3, 2, rng, GlobalLVariant::kAveragedProduct);
  MethodParams mp;
  mp.sketch = SketchDistribution::rand_tau(3, 1);
  mp.p = 1.0;
  const auto pc1 = constants(in, 1.0);
  const auto pc2 = constants(in, 2.0);
  const auto spec = make_stepsize(mp, pc1);
  const auto c1 = predict_complexity(spec, pc1, mp.sketch, 0.1);
  const auto c2 = predict_complexity(spec, pc2, mp.sketch, 0.1);
  EXPECT_NEAR(c2.iterations, 2.0 * c1.iterations, 1e-9 * c1.iterations);
  EXPECT_NEAR(c1.floats_transmitted, 2.0 * (3.0 + c1.iterations * 3.0), 1e-9 * c1.floats_transmitted);
  EXPECT_NEAR(c1.iterations, 2.0 / (det_normalized(spec.D).normalizer * 0.01), 1e-9 * c1.iterations);
}

TEST(AccountFloats, Examples) {
  const auto s1 = SketchDistribution::rand_tau(10, 1);
  EXPECT_DOUBLE_EQ(account_floats(Method::kDetDasha, 1.0, s1, 2, 100), 220.0);
  EXPECT_DOUBLE_EQ(account_floats(Method::kDetMarina, 1.0, s1, 2, 100), 2.0 * (10 + 1000));
  EXPECT_DOUBLE_EQ(account_floats(Method::kDetMarina, 0.1, s1, 1, 100), 10 + 100 * (1.0 + 0.9));
  EXPECT_DOUBLE_EQ(account_floats(Method::kDetCgd, 1.0, s1, 3, 7), 21.0);
}

TEST(Certificate, JsonKeys) {
  Certificate c;
  c.alpha = 0.5;
  c.lambda_ws = 2.0;
  c.matrix_condition = false;
  const nlohmann::json j = c;
  EXPECT_EQ(j.at("alpha").get<double>(), 0.5);
  EXPECT_EQ(j.at("Lambda").get<double>(), 2.0);
  EXPECT_FALSE(j.at("matrix_condition").get<bool>());
  EXPECT_FALSE(j.contains("beta"));
}

TEST(Names, RoundTrip) {
  for (Method m : {Method::kDetMarina, Method::kDetDasha, Method::kDetCgd, Method::kDetCgd2Vr,
                   Method::kMarina, Method::kDasha, Method::kDcgd}) {
    EXPECT_EQ(method_from_string(to_string(m)), m);
  }
  EXPECT_THROW(method_from_string("sgd"), ConfigError);
  EXPECT_EQ(w_kind_from_string("diag_inv"), WKind::kDiagInverse);
  EXPECT_THROW(w_kind_from_string("foo"), ConfigError);
}

}  // namespace
}  // namespace detvr
