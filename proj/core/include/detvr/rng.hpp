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

#include <cstdint>
#include <random>

namespace detvr {

using Rng = std::mt19937_64;

/// Stream id reserved for the server-side Bernoulli coin.
inline constexpr std::uint64_t kServerStream = ~std::uint64_t{0};

/// Seed for the stream owned by (root seed, stream id, iteration). Client
/// sketches use the client index as stream id, so the random draws of a run
/// do not depend on the order in which clients are processed.
std::uint64_t stream_seed(std::uint64_t root, std::uint64_t stream,
                          std::uint64_t iteration);

Rng make_stream(std::uint64_t root, std::uint64_t stream, std::uint64_t iteration);

/// Uniform integer in [0, bound) by rejection; portable across standard
/// library implementations, unlike std::uniform_int_distribution.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);

/// Uniform double in [0, 1) built from the top 53 bits.
double uniform_unit(Rng& rng);

/// Standard normal via Box-Muller on uniform_unit.
double standard_normal(Rng& rng);

bool bernoulli(Rng& rng, double p);

}  // namespace detvr
