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

// Run configuration: loading, validation and serialization.

#ifndef KPI_RUN_CONFIG_HPP_
#define KPI_RUN_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "kpi/kernel.hpp"
#include "kpi/online.hpp"
#include "kpi/policy_iteration.hpp"
#include "kpi/scenario.hpp"

namespace kpi {

enum class RunMode { kOffline, kOnline, kOracleCompare, kComplexityProbe };

std::string_view RunModeName(RunMode mode);
RunMode ParseRunMode(std::string_view name);

enum class ProblemKind { kIntersection, kLinear };

// Explicit linear-quadratic instance without penalties.
struct LinearProblem {
  Matrix A;
  Matrix B;
  Matrix Q;
  Matrix R;
  Matrix QF;
  Vector x0_min;  // initial states are uniform in [x0_min, x0_max]
  Vector x0_max;
};

struct ProbeConfig {
  std::vector<int> samples{25, 50};
  std::vector<int> dict_sizes{10};
  std::vector<int> horizons{10, 20};
  int iterations = 3;
};

struct RunConfig {
  RunMode mode = RunMode::kOffline;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  int horizon = 50;
  ProblemKind problem = ProblemKind::kIntersection;
  ScenarioParams scenario;
  LinearProblem linear;
  KernelSpec kernel;  // rbf length_scale <= 0 means median heuristic
  SolverConfig solver;
  OnlineConfig online;
  bool online_true_model = false;  // start RLS at the true plant matrices
  ProbeConfig probe;

  // Throws std::invalid_argument naming the offending field path.
  void Validate() const;
  // Copies the global seed into the solver configs.
  void PropagateSeed();
};

// Parse errors report the line; validation errors report the field path.
RunConfig ParseConfig(std::string_view text, const std::string& source = "config");
RunConfig LoadConfig(const std::string& path);
std::string SerializeConfig(const RunConfig& cfg);

}  // namespace kpi

#endif  // KPI_RUN_CONFIG_HPP_
