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
#include <sstream>

#include <gtest/gtest.h>

#include "detvr/algorithms.hpp"
#include "detvr/harness.hpp"
#include "oracles.hpp"
#include "scalar_reference.hpp"

namespace detvr {
namespace {

Problem small_problem(std::size_t n = 3, std::size_t d = 5, std::uint64_t seed = 101) {
  return Problem(testing::random_clients(n, 8, d, seed), 0.2);
}

double max_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) m = std::max(m, std::abs(a[t] - b[t]));
  return m;
}

Vector gd_step(const Problem& p, const SymmetricMatrix& D, const Vector& x) {
  const Vector step = D.apply(p.grad(x));
  Vector out = x;
  for (std::size_t t = 0; t < x.size(); ++t) out[t] -= step[t];
  return out;
}

TEST(ParallelFor, VisitsEveryIndexOnceAndRethrows) {
  std::vector<int> hits(37, 0);
  parallel_for(37, 4, [&](std::size_t i) { ++hits[i]; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(8, 3, [](std::size_t i) {
                 if (i == 5) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(DetMarina, PEqualsOneIsGradientDescent) {
  const Problem p = small_problem();
  const auto D = inv_psd(p.smoothness().global).scaled(0.8);
  const auto s = SketchDistribution::rand_tau(5, 1);
  AlgoState st = init_det_marina(p, Vector{}, 7);
  Vector x(5, 0.0);
  for (int k = 0; k < 30; ++k) {
    step_det_marina(st, D, 1.0, p, s);
    x = gd_step(p, D, x);
    EXPECT_LE(max_diff(st.x, x), 1e-12) << "k=" << k;
    EXPECT_TRUE(st.last_coin);
  }
}

TEST(DetMarina, IdentitySketchIsGradientDescent) {
  const Problem p = small_problem();
  const auto D = inv_psd(p.smoothness().global).scaled(0.5);
  const auto s = SketchDistribution::identity(5);
  AlgoState st = init_det_marina(p, Vector{}, 8);
  Vector x(5, 0.0);
  for (int k = 0; k < 30; ++k) {
    step_det_marina(st, D, 0.3, p, s);
    x = gd_step(p, D, x);
    EXPECT_LE(max_diff(st.x, x), 1e-10);
  }
}

TEST(DetMarina, ScalarInstanceMatchesReference) {
  const Problem p = small_problem(3, 6, 102);
  const double gamma = 0.05;
  const auto s = SketchDistribution::rand_tau(6, 2);
  const Vector x0 = {0.1, -0.2, 0.3, 0.0, 0.5, -0.1};
  const auto ref = testing::scalar_marina(p, gamma, 0.3, s, 40, 9, x0);
  AlgoState st = init_det_marina(p, x0, 9);
  const auto D = SymmetricMatrix::identity(6, gamma);
  for (std::size_t k = 1; k <= 40; ++k) {
    step_det_marina(st, D, 0.3, p, s);
    EXPECT_LE(max_diff(st.x, ref[k]), 1e-12) << "k=" << k;
  }
}

TEST(DetMarina, CoinIsSharedAndFloatsMatch) {
  const Problem p = small_problem(4, 6, 103);
  const auto D = inv_psd(p.smoothness().global).scaled(0.3);
  const auto s = SketchDistribution::rand_tau(6, 2);
  AlgoState st = init_det_marina(p, Vector{}, 10);
  EXPECT_EQ(st.floats_cum, 24.0);
  int heads = 0;
  for (int k = 0; k < 100; ++k) {
    Rng coin_rng = make_stream(10, kServerStream, st.iteration);
    const bool expected = bernoulli(coin_rng, 0.4);
    step_det_marina(st, D, 0.4, p, s);
    EXPECT_EQ(st.last_coin, expected);
    EXPECT_EQ(st.last_floats, st.last_coin ? 24.0 : 8.0);
    heads += st.last_coin;
  }
  EXPECT_GT(heads, 0);
  EXPECT_LT(heads, 100);
}

TEST(DetDasha, ScalarInstanceMatchesReference) {
  const Problem p = small_problem(2, 5, 104);
  const auto s = SketchDistribution::rand_tau(5, 1);
  const Vector x0 = {0.2, 0.2, -0.3, 0.1, 0.0};
  const auto ref = testing::scalar_dasha(p, 0.02, 0.25, s, 40, 11, x0);
  AlgoState st = init_det_dasha(p, x0, 11);
  const auto D = SymmetricMatrix::identity(5, 0.02);
  for (std::size_t k = 1; k <= 40; ++k) {
    step_det_dasha(st, D, 0.25, p, s);
    EXPECT_LE(max_diff(st.x, ref[k]), 1e-12) << "k=" << k;
  }
}

TEST(DetDasha, Invariants) {
  const Problem p = small_problem(3, 5, 105);
  const auto D = inv_psd(p.smoothness().global).scaled(0.1);
  const auto s = SketchDistribution::rand_tau(5, 2);
  AlgoState st = init_det_dasha(p, Vector{}, 12);
  for (int k = 0; k < 50; ++k) {
    step_det_dasha(st, D, 0.4, p, s);
    Vector mean(5, 0.0);
    for (const auto& gi : st.g_i)
      for (std::size_t t = 0; t < 5; ++t) mean[t] += gi[t] / 3.0;
    EXPECT_LE(max_diff(st.g, mean), 1e-12);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(st.h_i[i], p.client_grad(i, st.x));
    EXPECT_EQ(st.last_floats, 6.0);
  }
}

TEST(DetDasha, FullMomentumIdentitySketchIsGradientDescent) {
  const Problem p = small_problem();
  const auto D = inv_psd(p.smoothness().global).scaled(0.7);
  AlgoState st = init_det_dasha(p, Vector{}, 13);
  Vector x(5, 0.0);
  for (int k = 0; k < 20; ++k) {
    step_det_dasha(st, D, 1.0, p, SketchDistribution::identity(5));
    x = gd_step(p, D, x);
    EXPECT_LE(max_diff(st.x, x), 1e-10);
  }
}

TEST(DetCgd, IdentitySketchIsGradientDescent) {
  const Problem p = small_problem();
  const auto D = inv_psd(p.smoothness().global).scaled(0.9);
  AlgoState st = init_det_cgd(p, Vector{}, 14);
  EXPECT_EQ(st.floats_cum, 0.0);
  Vector x(5, 0.0);
  for (int k = 0; k < 20; ++k) {
    step_det_cgd(st, D, p, SketchDistribution::identity(5));
    x = gd_step(p, D, x);
    EXPECT_LE(max_diff(st.x, x), 1e-12);
  }
}

TEST(DetCgd, EstimatorIsUnbiased) {
  const Problem p = small_problem(2, 4, 106);
  const Vector x = {0.3, -0.2, 0.5, 0.1};
  const Vector g = p.grad(x);
  const auto zero = SymmetricMatrix::zero(4);
  const auto s = SketchDistribution::rand_tau(4, 1);
  AlgoState st = init_det_cgd(p, x, 15);
  const int draws = 100000;
  Vector sum(4, 0.0), sum_sq(4, 0.0);
  for (int k = 0; k < draws; ++k) {
    step_det_cgd(st, zero, p, s);
    for (std::size_t t = 0; t < 4; ++t) {
      sum[t] += st.g[t];
      sum_sq[t] += st.g[t] * st.g[t];
    }
  }
  EXPECT_EQ(st.x, x);
  for (std::size_t t = 0; t < 4; ++t) {
    const double mean = sum[t] / draws;
    const double sd = std::sqrt(sum_sq[t] / draws - mean * mean);
    EXPECT_NEAR(mean, g[t], 5.0 * sd / std::sqrt(draws));
  }
}

TEST(DetCgd2Vr, PEqualsOneIsGradientDescent) {
  const Problem p = small_problem();
  const auto D = inv_psd(p.smoothness().global).scaled(0.6);
  AlgoState st = init_det_cgd2_vr(p, D, Vector{}, 16);
  Vector x(5, 0.0);
  for (int k = 0; k < 20; ++k) {
    step_det_cgd2_vr(st, D, 1.0, p, SketchDistribution::rand_tau(5, 1));
    x = gd_step(p, D, x);
    EXPECT_LE(max_diff(st.x, x), 1e-12);
  }
}

TEST(DetCgd2Vr, ScalarInstanceTracksMarina) {
  // With D = gamma I the two estimators differ only by the factor gamma.
  const Problem p = small_problem(3, 5, 107);
  const double gamma = 0.05;
  const auto s = SketchDistribution::rand_tau(5, 2);
  const auto D = SymmetricMatrix::identity(5, gamma);
  const auto ref = testing::scalar_marina(p, gamma, 0.5, s, 30, 17, Vector(5, 0.0));
  AlgoState st = init_det_cgd2_vr(p, D, Vector{}, 17);
  for (std::size_t k = 1; k <= 30; ++k) {
    step_det_cgd2_vr(st, D, 0.5, p, s);
    EXPECT_LE(max_diff(st.x, ref[k]), 1e-10) << "k=" << k;
  }
}

TEST(DetMarina, DescentWithPEqualsOne) {
  const Problem p = small_problem(2, 6, 108);
  const auto D = inv_psd(p.smoothness().global);
  AlgoState st = init_det_marina(p, Vector(6, 1.0), 18);
  double prev = p.loss(st.x);
  for (int k = 0; k < 100; ++k) {
    step_det_marina(st, D, 1.0, p, SketchDistribution::identity(6));
    const double cur = p.loss(st.x);
    EXPECT_LE(cur, prev + 1e-12);
    prev = cur;
  }
}

TEST(RunSingle, ThreadCountDoesNotChangeTraces) {
  const auto clients = testing::random_clients(5, 10, 6, 109);
  const Instance inst = build_instance(clients, 0.2, 200);
  const auto s = SketchDistribution::rand_tau(6, 2);
  for (Method m : {Method::kDetMarina, Method::kDetDasha, Method::kDetCgd, Method::kDetCgd2Vr,
                   Method::kMarina, Method::kDasha, Method::kDcgd}) {
    MethodParams mp;
    mp.method = m;
    mp.sketch = s;
    mp.p = 0.3;
    mp.K = 60;
    const auto spec = make_stepsize(mp, inst.constants);
    ASSERT_TRUE(spec.admissible) << to_string(m);
    const auto a = run_single(inst.problem, spec, s, 60, 19, inst.x0, 1);
    const auto b = run_single(inst.problem, spec, s, 60, 19, inst.x0, 4);
    std::ostringstream oa, ob;
    write_trace_csv(oa, a);
    write_trace_csv(ob, b);
    EXPECT_EQ(oa.str(), ob.str()) << to_string(m);
    ASSERT_EQ(a.rows.size(), 61u);
    for (std::size_t k = 1; k < a.rows.size(); ++k) {
      EXPECT_GE(a.rows[k].floats_cum, a.rows[k - 1].floats_cum);
    }
  }
}

TEST(RunSingle, MetricUsesNormalizedStepsize) {
  const Instance inst = build_instance(testing::random_clients(2, 10, 4, 110), 0.2, 100);
  MethodParams mp;
  mp.sketch = SketchDistribution::rand_tau(4, 1);
  mp.p = 0.5;
  const auto spec = make_stepsize(mp, inst.constants);
  const auto t = run_single(inst.problem, spec, mp.sketch, 3, 20, inst.x0);
  const Vector g = inst.problem.grad(inst.x0);
  const double expected = weighted_norm_sq(g, det_normalized(spec.D).normalized);
  EXPECT_NEAR(t.rows[0].grad_metric, expected, 1e-14 * expected);
  EXPECT_EQ(t.rows[0].f, inst.problem.loss(inst.x0));
}

}  // namespace
}  // namespace detvr
