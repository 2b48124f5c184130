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
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "detvr/config.hpp"
#include "detvr/problem.hpp"
#include "detvr/stepsize.hpp"

namespace detvr {

/// Problem built from a config together with the proxy constants the
/// stepsize rules need.
struct Instance {
  Problem problem;
  Vector x0;
  double f_star;                // best f seen by preconditioned GD
  std::vector<double> f_i_star; // same, per client
  ProblemConstants constants;   // pooled L, L_i, n, Delta_0, Delta*
};

/// Minimizes f by x <- x - L^{-1} grad f(x) and returns the smallest value
/// seen; with D = L^{-1} every step is a descent step.
double estimate_minimum(const std::function<double(std::span<const double>)>& f,
                        const std::function<Vector(std::span<const double>)>& grad,
                        const SymmetricMatrix& L, std::span<const double> x0,
                        std::size_t iterations);

Instance build_instance(const ExperimentConfig& cfg);
Instance build_instance(std::vector<Dataset> clients, double lambda_reg,
                        std::size_t f_star_iterations, Vector x0 = {});

struct TraceRow {
  std::size_t k;
  double f;
  double grad_metric;  // ||grad f(x^k)||^2 at D / det(D)^{1/d}
  double floats_cum;
  double aux;          // coin for coin-flip methods, momentum for DASHA-type
};

struct RunTrace {
  std::string label;
  Method method = Method::kDetMarina;
  std::uint64_t seed = 0;
  std::string config_hash;
  StepsizeSpec spec;
  std::vector<TraceRow> rows;
};

/// Seed of the s-th repetition; methods share it so that they see common
/// random numbers.
std::uint64_t run_seed(std::uint64_t root, std::size_t repetition);

/// K steps of the method from x0. Row 0 is the initialization.
RunTrace run_single(const Problem& problem, const StepsizeSpec& spec,
                    const SketchDistribution& s, std::size_t K, std::uint64_t seed,
                    std::span<const double> x0, std::size_t client_threads = 1);

struct MethodResult {
  MethodConfig config;
  SketchDistribution sketch;
  StepsizeSpec spec;
  nlohmann::json certificate;  // stepsize_json of spec
  std::vector<RunTrace> traces;
};

struct ExperimentResult {
  std::string config_hash;
  double f_star = 0.0;
  double delta0 = 0.0;
  double delta_star = 0.0;
  std::size_t dim = 0;
  std::size_t n = 0;
  std::vector<MethodResult> methods;
};

/// Stepsizes for every method, computed before anything runs.
std::vector<StepsizeSpec> build_stepsizes(const ExperimentConfig& cfg, const Instance& inst);

/// Throws InadmissibleStepsize naming the first failing method and its
/// certificate before any run starts.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Instance& inst);

struct SummaryRow {
  std::size_t k;
  double f_mean, f_std;
  double metric_mean, metric_std;
  double floats_mean, floats_std;
};

struct Summary {
  std::vector<SummaryRow> rows;
  std::size_t seeds = 0;
  /// Seed mean of min_k metric.
  double min_over_k = 0.0;
  /// Seed mean of the metric averaged over k = 0..K-1 (the uniformly drawn
  /// iterate the convergence bounds are stated for).
  double uniform_average = 0.0;
};

/// Per-iteration seed mean and sample standard deviation. Throws
/// AggregateError on empty or mismatched input.
Summary aggregate(std::span<const RunTrace> traces);

/// Mean over seeds of the metric averaged over the last `window` rows.
double trailing_mean(std::span<const RunTrace> traces, std::size_t window);

void write_trace_csv(std::ostream& out, const RunTrace& trace);
void write_summary_csv(std::ostream& out, const Summary& summary);
nlohmann::json summary_json(const ExperimentResult& result);
nlohmann::json stepsize_json(const StepsizeSpec& spec, const MethodConfig& mc,
                             const ProblemConstants& pc, const SketchDistribution& s);

/// Writes <label>_seed<s>.csv, <label>_summary.csv and summary.json.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace detvr
