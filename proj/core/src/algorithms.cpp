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
#include "detvr/algorithms.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>

#include "detvr/errors.hpp"
#include "detvr/rng.hpp"

namespace detvr {

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

Vector start_point(const Problem& problem, std::span<const double> x0) {
  if (x0.empty()) return Vector(problem.dim(), 0.0);
  if (x0.size() != problem.dim()) throw DimError("x0 has the wrong length");
  return Vector(x0.begin(), x0.end());
}

// Mean over clients, summed in client order.
void client_mean(const std::vector<Vector>& v, Vector& out) {
  const std::size_t d = out.size();
  std::fill(out.begin(), out.end(), 0.0);
  for (const Vector& vi : v) {
    for (std::size_t t = 0; t < d; ++t) out[t] += vi[t];
  }
  const double inv_n = 1.0 / static_cast<double>(v.size());
  for (double& o : out) o *= inv_n;
}

void all_client_grads(const Problem& problem, std::span<const double> x,
                      std::size_t threads, std::vector<Vector>& out) {
  out.assign(problem.num_clients(), Vector(problem.dim()));
  parallel_for(problem.num_clients(), threads,
               [&](std::size_t i) { problem.client_grad_into(i, x, out[i]); });
}

void descend(Vector& x, const SymmetricMatrix& D, const Vector& g) {
  const Vector step = D.apply(g);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] -= step[t];
}

double total(const std::vector<std::size_t>& sent) {
  double acc = 0.0;
  for (std::size_t s : sent) acc += static_cast<double>(s);
  return acc;
}

void account(AlgoState& state, double floats) {
  state.last_floats = floats;
  state.floats_cum += floats;
}

bool server_coin(const AlgoState& state, double p) {
  Rng rng = make_stream(state.rng_root, kServerStream, state.iteration);
  return bernoulli(rng, p);
}

Sketch client_sketch(const AlgoState& state, std::size_t client, const SketchDistribution& s) {
  Rng rng = make_stream(state.rng_root, client, state.iteration);
  return sample(s, rng);
}

AlgoState base_state(const Problem& problem, std::span<const double> x0, std::uint64_t seed,
                     std::size_t threads) {
  AlgoState st;
  st.x = start_point(problem, x0);
  st.g.assign(problem.dim(), 0.0);
  st.rng_root = seed;
  st.threads = std::max<std::size_t>(threads, 1);
  return st;
}

double full_round(const Problem& problem) {
  return static_cast<double>(problem.num_clients() * problem.dim());
}

}  // namespace

AlgoState init_det_marina(const Problem& problem, std::span<const double> x0,
                          std::uint64_t seed, std::size_t threads) {
  AlgoState st = base_state(problem, x0, seed, threads);
  all_client_grads(problem, st.x, st.threads, st.h_i);
  st.g_i = st.h_i;
  client_mean(st.h_i, st.g);
  account(st, full_round(problem));
  return st;
}

AlgoState init_det_dasha(const Problem& problem, std::span<const double> x0,
                         std::uint64_t seed, std::size_t threads) {
  return init_det_marina(problem, x0, seed, threads);
}

AlgoState init_det_cgd(const Problem& problem, std::span<const double> x0,
                       std::uint64_t seed, std::size_t threads) {
  return base_state(problem, x0, seed, threads);
}

AlgoState init_det_cgd2_vr(const Problem& problem, const SymmetricMatrix& D,
                           std::span<const double> x0, std::uint64_t seed,
                           std::size_t threads) {
  if (D.dim() != problem.dim()) throw DimError("stepsize matrix dimension mismatch");
  AlgoState st = base_state(problem, x0, seed, threads);
  all_client_grads(problem, st.x, st.threads, st.h_i);
  Vector grad(problem.dim());
  client_mean(st.h_i, grad);
  st.g = D.apply(grad);
  account(st, full_round(problem));
  return st;
}

void step_det_marina(AlgoState& st, const SymmetricMatrix& D, double p,
                     const Problem& problem, const SketchDistribution& s) {
  const std::size_t n = problem.num_clients();
  const std::size_t d = problem.dim();
  descend(st.x, D, st.g);
  const bool coin = server_coin(st, p);
  st.g_i.resize(n);
  std::vector<std::size_t> sent(n, 0);

  parallel_for(n, st.threads, [&](std::size_t i) {
    Vector grad = problem.client_grad(i, st.x);
    Vector& gi = st.g_i[i];
    if (coin) {
      gi = grad;
      sent[i] = d;
    } else {
      Vector diff(d);
      for (std::size_t t = 0; t < d; ++t) diff[t] = grad[t] - st.h_i[i][t];
      const Sketch sk = client_sketch(st, i, s);
      const Vector comp = sk.apply(diff);
      gi.resize(d);
      for (std::size_t t = 0; t < d; ++t) gi[t] = st.g[t] + comp[t];
      sent[i] = sk.nnz();
    }
    st.h_i[i] = std::move(grad);
  });

  client_mean(st.g_i, st.g);
  st.last_coin = coin;
  account(st, total(sent));
  ++st.iteration;
}

void step_det_dasha(AlgoState& st, const SymmetricMatrix& D, double a,
                    const Problem& problem, const SketchDistribution& s) {
  const std::size_t n = problem.num_clients();
  const std::size_t d = problem.dim();
  descend(st.x, D, st.g);
  std::vector<Vector> m(n);
  std::vector<std::size_t> sent(n, 0);

  parallel_for(n, st.threads, [&](std::size_t i) {
    Vector grad = problem.client_grad(i, st.x);
    Vector& gi = st.g_i[i];
    Vector& hi = st.h_i[i];
    Vector diff(d);
    for (std::size_t t = 0; t < d; ++t) diff[t] = grad[t] - hi[t] - a * (gi[t] - hi[t]);
    const Sketch sk = client_sketch(st, i, s);
    m[i] = sk.apply(diff);
    for (std::size_t t = 0; t < d; ++t) gi[t] += m[i][t];
    hi = std::move(grad);
    sent[i] = sk.nnz();
  });

  Vector avg(d);
  client_mean(m, avg);
  for (std::size_t t = 0; t < d; ++t) st.g[t] += avg[t];
  st.last_coin = true;
  account(st, total(sent));
  ++st.iteration;
}

void step_det_cgd(AlgoState& st, const SymmetricMatrix& D, const Problem& problem,
                  const SketchDistribution& s) {
  const std::size_t n = problem.num_clients();
  std::vector<Vector> m(n);
  std::vector<std::size_t> sent(n, 0);

  parallel_for(n, st.threads, [&](std::size_t i) {
    const Vector grad = problem.client_grad(i, st.x);
    const Sketch sk = client_sketch(st, i, s);
    m[i] = sk.apply(grad);
    sent[i] = sk.nnz();
  });

  client_mean(m, st.g);
  descend(st.x, D, st.g);
  st.last_coin = true;
  account(st, total(sent));
  ++st.iteration;
}

void step_det_cgd2_vr(AlgoState& st, const SymmetricMatrix& D, double p,
                      const Problem& problem, const SketchDistribution& s) {
  const std::size_t n = problem.num_clients();
  const std::size_t d = problem.dim();
  for (std::size_t t = 0; t < d; ++t) st.x[t] -= st.g[t];
  const bool coin = server_coin(st, p);
  st.g_i.resize(n);
  std::vector<std::size_t> sent(n, 0);

  parallel_for(n, st.threads, [&](std::size_t i) {
    Vector grad = problem.client_grad(i, st.x);
    Vector& gi = st.g_i[i];
    if (coin) {
      gi = D.apply(grad);
      sent[i] = d;
    } else {
      Vector diff(d);
      for (std::size_t t = 0; t < d; ++t) diff[t] = grad[t] - st.h_i[i][t];
      const Sketch sk = client_sketch(st, i, s);
      const Vector comp = sk.apply(D.apply(diff));
      gi.resize(d);
      for (std::size_t t = 0; t < d; ++t) gi[t] = st.g[t] + comp[t];
      sent[i] = sk.nnz();
    }
    st.h_i[i] = std::move(grad);
  });

  client_mean(st.g_i, st.g);
  st.last_coin = coin;
  account(st, total(sent));
  ++st.iteration;
}

}  // namespace detvr
