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
#include <benchmark/benchmark.h>

#include "detvr/algorithms.hpp"
#include "detvr/compression.hpp"
#include "detvr/dataset.hpp"
#include "detvr/problem.hpp"
#include "detvr/stepsize.hpp"

namespace {

using namespace detvr;

SymmetricMatrix gram(std::size_t d, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.dim = d;
  spec.rows = 4 * d;
  spec.seed = seed;
  return smoothness_bounds(std::vector<Dataset>{make_synthetic(spec)}, 0.1).global;
}

void BM_EigSym(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto a = gram(d, 1);
  const std::vector<double> raw(a.entries().begin(), a.entries().end());
  for (auto _ : state) benchmark::DoNotOptimize(jacobi_eigen(d, raw));
}
BENCHMARK(BM_EigSym)->Arg(10)->Arg(20)->Arg(50)->Arg(100);

void BM_ExpectedMoment(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto w = inv_psd(gram(d, 2));
  const auto s = SketchDistribution::rand_tau(d, 1);
  for (auto _ : state) benchmark::DoNotOptimize(expected_moment(s, w));
}
BENCHMARK(BM_ExpectedMoment)->Arg(20)->Arg(100);

void BM_DetMarinaStep(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  SyntheticSpec spec;
  spec.dim = d;
  spec.rows = 200;
  const Problem p(partition(make_synthetic(spec), 5), 0.3);
  const auto D = inv_psd(p.smoothness().global).scaled(0.05);
  const auto s = SketchDistribution::rand_tau(d, 1);
  AlgoState st = init_det_marina(p, Vector{}, 3);
  for (auto _ : state) step_det_marina(st, D, 0.1, p, s);
}
BENCHMARK(BM_DetMarinaStep)->Arg(20)->Arg(100);

void BM_CheckDetCgd(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  SyntheticSpec spec;
  spec.dim = d;
  spec.rows = 200;
  const Problem p(partition(make_synthetic(spec), 5), 0.3);
  const auto& b = p.smoothness();
  const auto D = structure_matrix(WKind::kDiagInverse, b.global).scaled(0.01);
  const auto s = SketchDistribution::rand_tau(d, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(check_det_cgd(D, b.global, b.local, s, 5, 2000, 0.1, 0.01));
  }
}
BENCHMARK(BM_CheckDetCgd)->Arg(20)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
