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
#include <charconv>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "detvr/errors.hpp"
#include "detvr/harness.hpp"

namespace detvr {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << "k,f,grad_metric,floats_cum,aux\n";
  for (const TraceRow& r : trace.rows) {
    out << r.k << ',' << format_double(r.f) << ',' << format_double(r.grad_metric) << ','
        << format_double(r.floats_cum) << ',' << format_double(r.aux) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const Summary& summary) {
  out << "k,f_mean,f_std,grad_metric_mean,grad_metric_std,floats_cum_mean,floats_cum_std\n";
  for (const SummaryRow& r : summary.rows) {
    out << r.k << ',' << format_double(r.f_mean) << ',' << format_double(r.f_std) << ','
        << format_double(r.metric_mean) << ',' << format_double(r.metric_std) << ','
        << format_double(r.floats_mean) << ',' << format_double(r.floats_std) << '\n';
  }
}

nlohmann::json stepsize_json(const StepsizeSpec& spec, const MethodConfig& mc,
                             const ProblemConstants& pc, const SketchDistribution& s) {
  nlohmann::json j;
  j["method"] = std::string(to_string(spec.method));
  j["label"] = mc.label;
  j["W"] = std::string(to_string(spec.w_kind));
  j["sketch"] = s;
  j["gamma"] = spec.gamma;
  j["p"] = spec.p;
  j["momentum"] = spec.momentum;
  j["omega"] = omega(s);
  nlohmann::json cert = spec.cert;
  j["alpha"] = cert.value("alpha", nlohmann::json());
  j["beta"] = cert.value("beta", nlohmann::json());
  j["Lambda"] = cert.value("Lambda", nlohmann::json());
  j["certificate"] = cert;
  j["admissible"] = spec.admissible;
  if (!spec.admissible) {
    j["reason"] = spec.reason;
    j["predicted_K"] = nullptr;
    j["predicted_floats"] = nullptr;
  } else {
    const Complexity c = predict_complexity(spec, pc, s, mc.eps);
    j["eps"] = mc.eps;
    j["predicted_K"] = c.iterations;
    j["predicted_floats"] = c.floats_transmitted;
  }
  return j;
}

nlohmann::json summary_json(const ExperimentResult& result) {
  nlohmann::json j;
  j["config_hash"] = result.config_hash;
  j["dim"] = result.dim;
  j["n_clients"] = result.n;
  j["f_star_proxy"] = result.f_star;
  j["delta0"] = result.delta0;
  j["delta_star"] = result.delta_star;
  j["methods"] = nlohmann::json::array();
  for (const MethodResult& mr : result.methods) {
    const Summary s = aggregate(mr.traces);
    nlohmann::json m;
    m["label"] = mr.config.label;
    m["K"] = mr.config.K;
    m["seeds"] = s.seeds;
    m["stepsize"] = mr.certificate;
    m["min_over_k"] = s.min_over_k;
    m["uniform_average"] = s.uniform_average;
    m["final_grad_metric_mean"] = s.rows.back().metric_mean;
    m["final_floats_mean"] = s.rows.back().floats_mean;
    m["expected_floats"] =
        account_floats(mr.spec.method, mr.spec.p, mr.sketch, result.n,
                       static_cast<double>(mr.config.K));
    nlohmann::json runs = nlohmann::json::array();
    for (const RunTrace& t : mr.traces) {
      runs.push_back({{"seed", t.seed},
                      {"config_hash", t.config_hash},
                      {"floats_total", t.rows.back().floats_cum}});
    }
    m["runs"] = std::move(runs);
    j["methods"].push_back(std::move(m));
  }
  return j;
}

void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    return out;
  };
  for (const MethodResult& mr : result.methods) {
    for (std::size_t s = 0; s < mr.traces.size(); ++s) {
      auto out = open(dir / (mr.config.label + "_seed" + std::to_string(s) + ".csv"));
      write_trace_csv(out, mr.traces[s]);
    }
    auto out = open(dir / (mr.config.label + "_summary.csv"));
    write_summary_csv(out, aggregate(mr.traces));
  }
  auto out = open(dir / "summary.json");
  out << summary_json(result).dump(2) << '\n';
}

}  // namespace detvr
