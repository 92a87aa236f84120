// Copyright 2026 The dmsim Authors
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

// Command-line front end: one subcommand per experiment kind.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dmsim/config.hpp"
#include "dmsim/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"dmsim - density-matrix quantum dynamics simulator and verification harness"};
  app.set_version_flag("--version", std::string(dmsim::kVersion));
  bool print_schema = false;
  app.add_flag("--schema", print_schema, "Print the JSON Schema of the config file and exit");
  app.require_subcommand(0, 1);

  struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
  };
  Options opts;

  const std::pair<const char*, const char*> commands[] = {
      {"evolve", "Exact von Neumann evolution with observables and mass density"},
      {"bohm", "W-Bohmian ensemble and equivariance report"},
      {"grw", "W-GRW / Psi-GRW collapse runs with flash logs"},
      {"entropy", "Branch weights and Boltzmann entropy from the IPH state"},
      {"equiv", "W-BM versus Psi-BM empirical-equivalence experiment"},
      {"iph", "Initial Projection Hypothesis state and its algebra"},
  };
  for (const auto& [name, description] : commands) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", opts.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "Output directory (overrides output_dir in the config)");
    sub->add_option("--seed", opts.seed, "Master seed (overrides seed in the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dmsim::kExitConfigError;
  }

  if (print_schema) {
    std::cout << dmsim::config_schema();
    return 0;
  }
  const auto chosen = app.get_subcommands();
  if (chosen.empty()) {
    std::cerr << app.help();
    return dmsim::kExitConfigError;
  }

  dmsim::RunRequest request{*dmsim::parse_experiment_kind(chosen.front()->get_name()), opts.config,
                            std::nullopt, opts.seed};
  if (!opts.out.empty()) request.output_dir = opts.out;
  return dmsim::run_experiment(request);
}
