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

// Mode runners shared by the command-line tool and the acceptance tests.

#ifndef KPI_RUNNER_HPP_
#define KPI_RUNNER_HPP_

#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "kpi/online.hpp"
#include "kpi/policy_iteration.hpp"
#include "kpi/riccati.hpp"
#include "kpi/run_config.hpp"
#include "kpi/scenario.hpp"

namespace kpi {

struct ProblemSetup {
  LinearSystem learner;
  LinearSystem plant;
  CostSpec cost;
  std::optional<Scenario> scenario;
  InitialStateSampler sampler;
};

ProblemSetup BuildProblem(const RunConfig& cfg);

struct OfflineRun {
  PolicyIterationResult result;
  TrajectoryBatch final_batch;  // empty when the run diverged
};

OfflineRun RunOffline(const RunConfig& cfg, const ProblemSetup& setup,
                      const IterationCallback& on_iteration = {});

struct OnlineRun {
  OnlineLog log;
  Vector x0;
  Matrix truth;  // [A B] of the plant
  double closed_loop_cost = 0.0;
  double max_state_norm = 0.0;
  // Over observed states of the control phase; +inf with < 2 vehicles.
  double control_min_distance = 0.0;
};

OnlineRun RunOnlineMode(const RunConfig& cfg, const ProblemSetup& setup);

// u = -K x for a linear-kernel stage.
Matrix LinearKernelGain(const KernelPolicy& policy, int t);

struct OracleReport {
  OfflineRun run;
  RiccatiSolution riccati;
  double learned_cost = 0.0;
  double riccati_cost = 0.0;
  double relative_gap = 0.0;
  std::vector<double> gain_errors;  // Frobenius, by stage
};

// Refuses problems with penalties or a nonlinear kernel.
OracleReport OracleCompare(const RunConfig& cfg, const ProblemSetup& setup);

std::vector<ProbePoint> RunComplexityProbe(const RunConfig& cfg);

// Runs cfg.mode, writes all tables under `out_dir`, and returns the process
// exit status (0 ok, 2 divergence).
int ExecuteRun(const RunConfig& cfg, const std::filesystem::path& out_dir,
               std::ostream& log);

}  // namespace kpi

#endif  // KPI_RUNNER_HPP_
