// Copyright 2026 The kpi Authors
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

// kpi <mode> <config.json> [--seed N] [--out DIR]

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "kpi/dynamics.hpp"
#include "kpi/run_config.hpp"
#include "kpi/runner.hpp"

namespace {

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

CLI::App* AddMode(CLI::App& app, const std::string& name,
                  const std::string& help, Args& args) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->add_option("config", args.config, "JSON run configuration")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", args.seed, "override the configured seed");
  sub->add_option("--out", args.out, "override the output directory");
  return sub;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel policy iteration for multi-agent optimal control"};
  app.require_subcommand(1);
  Args args;
  AddMode(app, "offline", "offline policy iteration from sampled states", args);
  AddMode(app, "online", "identification then receding-horizon control", args);
  AddMode(app, "oracle-compare", "compare against the Riccati solution", args);
  AddMode(app, "complexity-probe", "time outer iterations over a grid", args);
  CLI11_PARSE(app, argc, argv);

  try {
    kpi::RunConfig cfg = kpi::LoadConfig(args.config);
    const std::string mode = app.get_subcommands().front()->get_name();
    const kpi::RunMode requested = kpi::ParseRunMode(mode);
    if (requested != cfg.mode) {
      std::cerr << "note: config mode is " << kpi::RunModeName(cfg.mode)
                << ", running " << mode << "\n";
      cfg.mode = requested;
    }
    if (args.seed) cfg.seed = *args.seed;
    if (args.out) cfg.output_dir = *args.out;
    cfg.PropagateSeed();
    cfg.Validate();
    return kpi::ExecuteRun(cfg, cfg.output_dir, std::cout);
  } catch (const kpi::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
