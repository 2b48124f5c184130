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
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "detvr/compression.hpp"
#include "detvr/linalg.hpp"
#include "detvr/problem.hpp"

namespace detvr {

/// Iterate and estimator state of one run. Which per-client vectors are
/// populated depends on the method:
///   det-MARINA   g, h_i = grad f_i(x^k)
///   det-DASHA    g, g_i, h_i = grad f_i(x^k)
///   det-CGD      nothing beyond x
///   det-CGD2-VR  g (already multiplied by D), h_i = grad f_i(x^k)
struct AlgoState {
  Vector x;
  Vector g;
  std::vector<Vector> g_i;
  std::vector<Vector> h_i;
  std::size_t iteration = 0;
  std::uint64_t rng_root = 0;

  /// Coin of the last step (true on initialization and for coinless methods).
  bool last_coin = true;
  /// Floats sent by all clients in the last step, and since initialization.
  double last_floats = 0.0;
  double floats_cum = 0.0;

  /// Worker threads for the per-client loop; 1 runs inline.
  std::size_t threads = 1;
};

/// Runs body(i) for i in [0, count) on up to `threads` threads. Each index is
/// visited exactly once; callers reduce results afterwards in index order.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

AlgoState init_det_marina(const Problem& problem, std::span<const double> x0,
                          std::uint64_t seed, std::size_t threads = 1);
AlgoState init_det_dasha(const Problem& problem, std::span<const double> x0,
                         std::uint64_t seed, std::size_t threads = 1);
AlgoState init_det_cgd(const Problem& problem, std::span<const double> x0,
                       std::uint64_t seed, std::size_t threads = 1);
AlgoState init_det_cgd2_vr(const Problem& problem, const SymmetricMatrix& D,
                           std::span<const double> x0, std::uint64_t seed,
                           std::size_t threads = 1);

/// x <- x - D g; one server coin c ~ Be(p) shared by all clients; heads send
/// grad f_i(x'), tails send S_i (grad f_i(x') - grad f_i(x)) added to g.
void step_det_marina(AlgoState& state, const SymmetricMatrix& D, double p,
                     const Problem& problem, const SketchDistribution& s);

/// x <- x - D g; m_i = S_i (h_i' - h_i - a (g_i - h_i)); g_i += m_i;
/// g += mean(m_i).
void step_det_dasha(AlgoState& state, const SymmetricMatrix& D, double a,
                    const Problem& problem, const SketchDistribution& s);

/// g = mean_i S_i grad f_i(x); x <- x - D g.
void step_det_cgd(AlgoState& state, const SymmetricMatrix& D, const Problem& problem,
                  const SketchDistribution& s);

/// x <- x - g; heads: g_i = D grad f_i(x'); tails: g_i = g + T_i D (grad
/// f_i(x') - grad f_i(x)).
void step_det_cgd2_vr(AlgoState& state, const SymmetricMatrix& D, double p,
                      const Problem& problem, const SketchDistribution& s);

}  // namespace detvr
