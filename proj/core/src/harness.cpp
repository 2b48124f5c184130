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
#include "detvr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "detvr/algorithms.hpp"
#include "detvr/errors.hpp"
#include "detvr/rng.hpp"

namespace detvr {

double estimate_minimum(const std::function<double(std::span<const double>)>& f,
                        const std::function<Vector(std::span<const double>)>& grad,
                        const SymmetricMatrix& L, std::span<const double> x0,
                        std::size_t iterations) {
  const SymmetricMatrix step = inv_psd(L);
  Vector x(x0.begin(), x0.end());
  double best = f(x);
  for (std::size_t k = 0; k < iterations; ++k) {
    const Vector dx = step.apply(grad(x));
    for (std::size_t t = 0; t < x.size(); ++t) x[t] -= dx[t];
    best = std::min(best, f(x));
  }
  return best;
}

Instance build_instance(std::vector<Dataset> clients, double lambda_reg,
                        std::size_t f_star_iterations, Vector x0) {
  Problem problem(std::move(clients), lambda_reg);
  if (x0.empty()) x0.assign(problem.dim(), 0.0);
  if (x0.size() != problem.dim()) throw DimError("x0 has the wrong length");
  const SmoothnessBounds& b = problem.smoothness();
  if (b.rank_deficient) {
    throw ConfigError("smoothness matrix is singular; use lambda > 0 or full-rank data");
  }

  const double f_star = estimate_minimum([&](std::span<const double> x) { return problem.loss(x); },
                                         [&](std::span<const double> x) { return problem.grad(x); },
                                         b.global, x0, f_star_iterations);
  std::vector<double> f_i_star(problem.num_clients());
  for (std::size_t i = 0; i < problem.num_clients(); ++i) {
    f_i_star[i] = estimate_minimum(
        [&](std::span<const double> x) { return problem.client_loss(i, x); },
        [&](std::span<const double> x) { return problem.client_grad(i, x); }, b.local[i], x0,
        f_star_iterations);
  }
  double mean_local = 0.0;
  for (double v : f_i_star) mean_local += v;
  mean_local /= static_cast<double>(f_i_star.size());

  ProblemConstants pc;
  pc.L = b.global;
  pc.local = b.local;
  pc.n = problem.num_clients();
  pc.delta0 = problem.loss(x0) - f_star;
  pc.delta_star = std::max(0.0, f_star - mean_local);
  return Instance{std::move(problem), std::move(x0), f_star, std::move(f_i_star), std::move(pc)};
}

Instance build_instance(const ExperimentConfig& cfg) {
  Dataset data = cfg.data.synthetic ? make_synthetic(*cfg.data.synthetic)
                                    : load_libsvm(*cfg.data.path, cfg.data.d_hint);
  if (data.empty()) throw ConfigError("dataset has no rows");
  return build_instance(partition(data, cfg.n_clients, cfg.partition), cfg.lambda_reg,
                        cfg.f_star_iterations);
}

std::uint64_t run_seed(std::uint64_t root, std::size_t repetition) {
  return stream_seed(root, 0x72756eULL, repetition);
}

namespace {

enum class Family { kMarina, kDasha, kCgd, kCgd2Vr };

Family family_of(Method m) {
  switch (m) {
    case Method::kDetMarina:
    case Method::kMarina:
      return Family::kMarina;
    case Method::kDetDasha:
    case Method::kDasha:
      return Family::kDasha;
    case Method::kDetCgd:
    case Method::kDcgd:
      return Family::kCgd;
    case Method::kDetCgd2Vr:
      return Family::kCgd2Vr;
  }
  return Family::kMarina;
}

}  // namespace

RunTrace run_single(const Problem& problem, const StepsizeSpec& spec,
                    const SketchDistribution& s, std::size_t K, std::uint64_t seed,
                    std::span<const double> x0, std::size_t client_threads) {
  const Family fam = family_of(spec.method);
  const SymmetricMatrix& D = spec.D;
  const SymmetricMatrix metric = det_normalized(D).normalized;

  AlgoState st;
  switch (fam) {
    case Family::kMarina: st = init_det_marina(problem, x0, seed, client_threads); break;
    case Family::kDasha: st = init_det_dasha(problem, x0, seed, client_threads); break;
    case Family::kCgd: st = init_det_cgd(problem, x0, seed, client_threads); break;
    case Family::kCgd2Vr: st = init_det_cgd2_vr(problem, D, x0, seed, client_threads); break;
  }

  RunTrace trace;
  trace.method = spec.method;
  trace.seed = seed;
  trace.spec = spec;
  trace.rows.reserve(K + 1);
  auto record = [&] {
    double aux = 0.0;
    if (fam == Family::kMarina || fam == Family::kCgd2Vr) aux = st.last_coin ? 1.0 : 0.0;
    if (fam == Family::kDasha) aux = spec.momentum;
    trace.rows.push_back({st.iteration, problem.loss(st.x),
                          weighted_norm_sq(problem.grad(st.x), metric), st.floats_cum, aux});
  };

  record();
  for (std::size_t k = 0; k < K; ++k) {
    switch (fam) {
      case Family::kMarina: step_det_marina(st, D, spec.p, problem, s); break;
      case Family::kDasha: step_det_dasha(st, D, spec.momentum, problem, s); break;
      case Family::kCgd: step_det_cgd(st, D, problem, s); break;
      case Family::kCgd2Vr: step_det_cgd2_vr(st, D, spec.p, problem, s); break;
    }
    record();
  }
  return trace;
}

std::vector<StepsizeSpec> build_stepsizes(const ExperimentConfig& cfg, const Instance& inst) {
  std::vector<StepsizeSpec> out;
  for (const MethodConfig& mc : cfg.methods) {
    MethodParams mp;
    mp.method = mc.method;
    mp.w = mc.w;
    mp.sketch = mc.sketch.resolve(inst.problem.dim());
    mp.p = mc.p;
    mp.K = mc.K;
    mp.eps = mc.eps;
    mp.gamma_scale = mc.gamma_scale;
    out.push_back(make_stepsize(mp, inst.constants));
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(cfg, build_instance(cfg));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Instance& inst) {
  const std::vector<StepsizeSpec> specs = build_stepsizes(cfg, inst);

  ExperimentResult res;
  res.config_hash = cfg.hash;
  res.f_star = inst.f_star;
  res.delta0 = inst.constants.delta0;
  res.delta_star = inst.constants.delta_star;
  res.dim = inst.problem.dim();
  res.n = inst.problem.num_clients();
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    const MethodConfig& mc = cfg.methods[m];
    const SketchDistribution s = mc.sketch.resolve(res.dim);
    nlohmann::json cert = stepsize_json(specs[m], mc, inst.constants, s);
    if (!specs[m].admissible) {
      throw InadmissibleStepsize("method '" + mc.label + "': " + specs[m].reason + "\n" +
                                 cert.dump(2));
    }
    res.methods.push_back({mc, s, specs[m], std::move(cert), {}});
    res.methods.back().traces.resize(cfg.seeds);
  }

  const std::size_t tasks = res.methods.size() * cfg.seeds;
  parallel_for(tasks, cfg.threads, [&](std::size_t t) {
    MethodResult& mr = res.methods[t / cfg.seeds];
    const std::size_t rep = t % cfg.seeds;
    RunTrace tr = run_single(inst.problem, mr.spec, mr.sketch, mr.config.K,
                             run_seed(cfg.seed, rep), inst.x0);
    tr.label = mr.config.label;
    tr.config_hash = cfg.hash;
    mr.traces[rep] = std::move(tr);
  });
  return res;
}

Summary aggregate(std::span<const RunTrace> traces) {
  if (traces.empty()) throw AggregateError("no traces to aggregate");
  const std::size_t rows = traces.front().rows.size();
  for (const RunTrace& t : traces) {
    if (t.rows.size() != rows) throw AggregateError("traces have different lengths");
    if (t.method != traces.front().method || t.label != traces.front().label) {
      throw AggregateError("traces belong to different methods");
    }
  }
  const double s = static_cast<double>(traces.size());
  auto mean_std = [&](auto field, std::size_t k) {
    double mean = 0.0;
    for (const RunTrace& t : traces) mean += field(t.rows[k]);
    mean /= s;
    double var = 0.0;
    if (traces.size() > 1) {
      for (const RunTrace& t : traces) {
        const double e = field(t.rows[k]) - mean;
        var += e * e;
      }
      var /= s - 1.0;
    }
    return std::pair{mean, std::sqrt(var)};
  };

  Summary out;
  out.seeds = traces.size();
  out.rows.reserve(rows);
  for (std::size_t k = 0; k < rows; ++k) {
    const auto [fm, fs] = mean_std([](const TraceRow& r) { return r.f; }, k);
    const auto [gm, gs] = mean_std([](const TraceRow& r) { return r.grad_metric; }, k);
    const auto [cm, cs] = mean_std([](const TraceRow& r) { return r.floats_cum; }, k);
    out.rows.push_back({traces.front().rows[k].k, fm, fs, gm, gs, cm, cs});
  }

  double min_acc = 0.0;
  double uni_acc = 0.0;
  for (const RunTrace& t : traces) {
    double mn = std::numeric_limits<double>::infinity();
    for (const TraceRow& r : t.rows) mn = std::min(mn, r.grad_metric);
    min_acc += mn;
    // Iterates 0..K-1; a trace holding only the initial row averages that row.
    const std::size_t upto = rows > 1 ? rows - 1 : rows;
    double avg = 0.0;
    for (std::size_t k = 0; k < upto; ++k) avg += t.rows[k].grad_metric;
    uni_acc += avg / static_cast<double>(upto);
  }
  out.min_over_k = min_acc / s;
  out.uniform_average = uni_acc / s;
  return out;
}

double trailing_mean(std::span<const RunTrace> traces, std::size_t window) {
  if (traces.empty()) throw AggregateError("no traces to aggregate");
  double acc = 0.0;
  for (const RunTrace& t : traces) {
    const std::size_t w = std::min(window, t.rows.size());
    if (w == 0) throw AggregateError("empty trace");
    double m = 0.0;
    for (std::size_t k = t.rows.size() - w; k < t.rows.size(); ++k) m += t.rows[k].grad_metric;
    acc += m / static_cast<double>(w);
  }
  return acc / static_cast<double>(traces.size());
}

}  // namespace detvr
