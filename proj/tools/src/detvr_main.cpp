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
// detvr command line: validate, stepsize and run an experiment file.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 config error, 3 inadmissible
// stepsize.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "detvr/config.hpp"
#include "detvr/errors.hpp"
#include "detvr/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInadmissible = 3;

int cmd_validate(const std::string& path) {
  const detvr::ExperimentConfig cfg = detvr::load_config(path);
  const detvr::Dataset data = cfg.data.synthetic ? detvr::make_synthetic(*cfg.data.synthetic)
                                                 : detvr::load_libsvm(*cfg.data.path,
                                                                      cfg.data.d_hint);
  const auto shards = detvr::partition(data, cfg.n_clients, cfg.partition);
  const detvr::Problem problem(shards, cfg.lambda_reg);
  for (const auto& m : cfg.methods) m.sketch.resolve(problem.dim());
  if (problem.smoothness().rank_deficient) {
    throw detvr::ConfigError("smoothness matrix is singular; use lambda > 0");
  }
  std::cout << "ok config_hash=" << cfg.hash << " d=" << problem.dim()
            << " n=" << problem.num_clients() << " rows=" << data.size()
            << " methods=" << cfg.methods.size() << '\n';
  return kExitOk;
}

int cmd_stepsize(const std::string& path) {
  const detvr::ExperimentConfig cfg = detvr::load_config(path);
  const detvr::Instance inst = detvr::build_instance(cfg);
  const auto specs = detvr::build_stepsizes(cfg, inst);
  nlohmann::json out = nlohmann::json::array();
  bool all_ok = true;
  for (std::size_t m = 0; m < specs.size(); ++m) {
    const auto& mc = cfg.methods[m];
    out.push_back(detvr::stepsize_json(specs[m], mc, inst.constants,
                                       mc.sketch.resolve(inst.problem.dim())));
    all_ok = all_ok && specs[m].admissible;
  }
  std::cout << out.dump(2) << '\n';
  return all_ok ? kExitOk : kExitInadmissible;
}

int cmd_run(const std::string& path, const std::optional<std::string>& output,
            std::optional<std::size_t> threads) {
  detvr::ExperimentConfig cfg = detvr::load_config(path);
  if (output) cfg.output_dir = *output;
  if (threads) cfg.threads = std::max<std::size_t>(*threads, 1);
  const detvr::ExperimentResult res = detvr::run_experiment(cfg);
  detvr::write_outputs(res, cfg.output_dir);
  for (const auto& mr : res.methods) {
    const detvr::Summary s = detvr::aggregate(mr.traces);
    std::cout << mr.config.label << " gamma=" << detvr::format_double(mr.spec.gamma)
              << " final_grad_metric=" << detvr::format_double(s.rows.back().metric_mean)
              << " floats=" << detvr::format_double(s.rows.back().floats_mean) << '\n';
  }
  std::cout << "wrote " << cfg.output_dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix-stepsize compressed gradient methods simulator"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> output;
  std::optional<std::size_t> threads;

  auto* validate = app.add_subcommand("validate", "Check a config and its data");
  validate->add_option("config", config, "Experiment JSON")->required();
  auto* stepsize = app.add_subcommand("stepsize", "Print stepsize certificates as JSON");
  stepsize->add_option("config", config, "Experiment JSON")->required();
  auto* run = app.add_subcommand("run", "Run all methods and seeds, write traces");
  run->add_option("config", config, "Experiment JSON")->required();
  run->add_option("-o,--output", output, "Output directory (overrides the config)");
  run->add_option("-j,--threads", threads, "Parallel runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*validate) return cmd_validate(config);
    if (*stepsize) return cmd_stepsize(config);
    if (*run) return cmd_run(config, output, threads);
  } catch (const detvr::InadmissibleStepsize& e) {
    std::cerr << "inadmissible stepsize: " << e.what() << '\n';
    return kExitInadmissible;
  } catch (const detvr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const detvr::ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const detvr::PartitionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const detvr::DimError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const detvr::NotPositiveDefinite& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
