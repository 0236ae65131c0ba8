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

#include "kpi/runner.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "kpi/export.hpp"

namespace kpi {
namespace {

using json = nlohmann::ordered_json;

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
      .count();
}

json NumberOrNull(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

ProblemSetup BuildProblem(const RunConfig& cfg) {
  ProblemSetup setup;
  if (cfg.problem == ProblemKind::kLinear) {
    const auto& lp = cfg.linear;
    setup.learner = LinearSystem{lp.A, lp.B, {static_cast<int>(lp.B.cols())}};
    setup.plant = setup.learner;
    setup.cost = CostSpec{lp.Q, lp.R, lp.QF, {}, {}};
    setup.sampler = [lo = lp.x0_min, hi = lp.x0_max](Rng& rng, int count) {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      std::vector<Vector> out;
      for (int i = 0; i < count; ++i) {
        Vector x(lo.size());
        for (Eigen::Index k = 0; k < x.size(); ++k) {
          x(k) = lo(k) + (hi(k) - lo(k)) * unit(rng);
        }
        out.push_back(x);
      }
      return out;
    };
    return setup;
  }
  IntersectionModel model = BuildIntersection(cfg.scenario);
  setup.learner = std::move(model.learner);
  setup.plant = std::move(model.plant);
  setup.cost = std::move(model.cost);
  setup.scenario = model.scenario;
  setup.sampler = [scenario = model.scenario](Rng& rng, int count) {
    return SampleInitialStates(scenario, rng, count);
  };
  return setup;
}

OfflineRun RunOffline(const RunConfig& cfg, const ProblemSetup& setup,
                      const IterationCallback& on_iteration) {
  OfflineRun run;
  run.result = PolicyIteration(setup.learner, setup.cost, cfg.horizon,
                               setup.sampler, cfg.kernel, cfg.solver,
                               on_iteration);
  if (!run.result.diverged) {
    run.final_batch =
        Rollout(setup.learner, run.result.policy, run.result.x0_batch);
  }
  return run;
}

OnlineRun RunOnlineMode(const RunConfig& cfg, const ProblemSetup& setup) {
  OnlineRun run;
  Rng rng = MakeStream(cfg.seed, RandomStream::kSampling);
  run.x0 = setup.sampler(rng, 1).front();
  run.truth.resize(setup.plant.state_dim(),
                   setup.plant.state_dim() + setup.plant.input_dim());
  run.truth << setup.plant.A, setup.plant.B;
  OnlineConfig oc = cfg.online;
  oc.horizon = cfg.horizon;
  if (cfg.online_true_model) oc.theta0 = run.truth;
  OnlineProblem problem;
  problem.state_dim = setup.learner.state_dim();
  problem.input_dim = setup.learner.input_dim();
  problem.cost = setup.cost;
  problem.truth = run.truth;
  if (setup.scenario) problem.positions = setup.scenario->position_map();
  LinearPlant plant(setup.plant, run.x0);
  run.log = RunOnline(plant, problem, oc);
  const Matrix& xs = run.log.states;
  const Matrix& us = run.log.controls;
  run.closed_loop_cost =
      us.cols() == oc.horizon ? ForwardTrajectoryCost(xs, us, 0, setup.cost)
                              : std::numeric_limits<double>::infinity();
  run.max_state_norm = xs.colwise().norm().maxCoeff();
  run.control_min_distance = std::numeric_limits<double>::infinity();
  for (const auto& st : run.log.steps) {
    if (!st.identification && std::isfinite(st.min_distance)) {
      run.control_min_distance = std::min(run.control_min_distance, st.min_distance);
    }
  }
  return run;
}

Matrix LinearKernelGain(const KernelPolicy& policy, int t) {
  if (policy.kernel().family != KernelFamily::kLinear) {
    throw std::invalid_argument("gain extraction needs the linear kernel");
  }
  const auto& s = policy.stage(t);
  if (s.dictionary.empty()) {
    return Matrix::Zero(policy.input_dim(), policy.state_dim());
  }
  return -(s.coefficients.transpose() * s.dictionary.points.transpose());
}

OracleReport OracleCompare(const RunConfig& cfg, const ProblemSetup& setup) {
  if (setup.cost.HasPenalty()) {
    throw std::invalid_argument(
        "oracle-compare refuses problems with collision penalties");
  }
  if (cfg.kernel.family != KernelFamily::kLinear) {
    throw std::invalid_argument("oracle-compare needs the linear kernel");
  }
  OracleReport report;
  report.run = RunOffline(cfg, setup);
  report.riccati = RiccatiBackward(setup.learner, setup.cost.Q, setup.cost.R,
                                   setup.cost.QF, cfg.horizon);
  report.learned_cost = report.run.result.final_cost;
  report.riccati_cost = LqrCost(report.riccati, report.run.result.x0_batch);
  const double gap = report.learned_cost - report.riccati_cost;
  report.relative_gap =
      gap == 0.0 ? 0.0 : gap / std::max(std::abs(report.riccati_cost), 1e-300);
  for (int t = 0; t < cfg.horizon; ++t) {
    report.gain_errors.push_back(
        (LinearKernelGain(report.run.result.policy, t) -
         report.riccati.K[static_cast<std::size_t>(t)])
            .norm());
  }
  return report;
}

std::vector<ProbePoint> RunComplexityProbe(const RunConfig& cfg) {
  const ProblemSetup setup = BuildProblem(cfg);
  return ComplexityProbe(
      [&](int) { return ProbeProblem{setup.learner, setup.cost, setup.sampler}; },
      cfg.probe.samples, cfg.probe.dict_sizes, cfg.probe.horizons, cfg.kernel,
      cfg.solver, cfg.probe.iterations);
}

int ExecuteRun(const RunConfig& cfg, const std::filesystem::path& out_dir,
               std::ostream& log) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create '" + out_dir.string() +
                             "': " + ec.message());
  }
  const auto start = std::chrono::steady_clock::now();
  RunConfig resolved = cfg;
  json summary{{"mode", std::string(RunModeName(cfg.mode))}};
  json timing = json::object();
  int status = 0;

  switch (cfg.mode) {
    case RunMode::kOffline: {
      const ProblemSetup setup = BuildProblem(cfg);
      const OfflineRun run = RunOffline(cfg, setup, [&](const IterationRecord& r) {
        if (r.iteration % 10 == 0) {
          log << "iter " << r.iteration << " cost " << FormatDouble(r.cost)
              << " sum_dpi_sq " << FormatDouble(r.sum_step_sq) << "\n";
        }
      });
      resolved.kernel = run.result.policy.kernel();
      ExportCostHistory(out_dir / "costs.csv", run.result.history);
      ExportTrajectories(out_dir / "trajectories.csv", run.final_batch,
                         setup.scenario ? &*setup.scenario : nullptr);
      if (setup.scenario) {
        ExportDistances(out_dir / "distances.csv", run.final_batch, *setup.scenario);
      }
      summary["iterations"] = run.result.history.size();
      summary["initial_cost"] = NumberOrNull(run.result.initial_cost);
      summary["final_cost"] = NumberOrNull(run.result.final_cost);
      summary["diverged"] = run.result.diverged;
      summary["message"] = run.result.message;
      json per_iter = json::array();
      for (const auto& r : run.result.history) per_iter.push_back(r.wall_seconds);
      timing["iteration_seconds"] = per_iter;
      log << "offline: " << run.result.history.size() << " iterations, cost "
          << FormatDouble(run.result.initial_cost) << " -> "
          << FormatDouble(run.result.final_cost) << "\n";
      if (run.result.diverged) {
        log << "diverged: " << run.result.message << "\n";
        status = 2;
      }
      break;
    }
    case RunMode::kOnline: {
      const ProblemSetup setup = BuildProblem(cfg);
      const OnlineRun run = RunOnlineMode(cfg, setup);
      ExportOnlineSteps(out_dir / "costs.csv", run.log);
      const TrajectoryBatch batch = BatchFromLog(run.log);
      ExportTrajectories(out_dir / "trajectories.csv", batch,
                         setup.scenario ? &*setup.scenario : nullptr);
      if (setup.scenario) {
        ExportDistances(out_dir / "distances.csv", batch, *setup.scenario);
      }
      double final_id_error = std::numeric_limits<double>::quiet_NaN();
      if (!run.log.steps.empty()) final_id_error = run.log.steps.back().id_error;
      summary["steps"] = run.log.steps.size();
      summary["closed_loop_cost"] = NumberOrNull(run.closed_loop_cost);
      summary["max_state_norm"] = NumberOrNull(run.max_state_norm);
      summary["control_min_distance"] = NumberOrNull(run.control_min_distance);
      summary["final_id_error"] = NumberOrNull(final_id_error);
      summary["aborted"] = run.log.aborted;
      summary["message"] = run.log.message;
      log << "online: " << run.log.steps.size() << " steps, closed-loop cost "
          << FormatDouble(run.closed_loop_cost) << ", min distance "
          << FormatDouble(run.control_min_distance) << "\n";
      if (run.log.aborted) {
        log << run.log.message << "\n";
        status = 2;
      }
      break;
    }
    case RunMode::kOracleCompare: {
      const ProblemSetup setup = BuildProblem(cfg);
      const OracleReport report = OracleCompare(cfg, setup);
      ExportCostHistory(out_dir / "costs.csv", report.run.result.history);
      {
        CsvWriter w(out_dir / "oracle.csv",
                    {"stage", "gain_error", "riccati_gain_norm"});
        for (int t = 0; t < cfg.horizon; ++t) {
          w << t << report.gain_errors[static_cast<std::size_t>(t)]
            << report.riccati.K[static_cast<std::size_t>(t)].norm();
          w.EndRow();
        }
      }
      ExportTrajectories(out_dir / "trajectories.csv", report.run.final_batch,
                         nullptr);
      summary["learned_cost"] = NumberOrNull(report.learned_cost);
      summary["riccati_cost"] = NumberOrNull(report.riccati_cost);
      summary["relative_gap"] = NumberOrNull(report.relative_gap);
      summary["iterations"] = report.run.result.history.size();
      summary["diverged"] = report.run.result.diverged;
      if (cfg.horizon == 1 && report.run.result.policy.state_dim() == 1 &&
          report.run.result.policy.input_dim() == 1) {
        summary["learned_gain"] =
            -LinearKernelGain(report.run.result.policy, 0)(0, 0);
      }
      log << "oracle-compare: learned " << FormatDouble(report.learned_cost)
          << ", riccati " << FormatDouble(report.riccati_cost)
          << ", relative gap " << FormatDouble(report.relative_gap) << "\n";
      if (report.run.result.diverged) status = 2;
      break;
    }
    case RunMode::kComplexityProbe: {
      const auto table = RunComplexityProbe(cfg);
      // Timings are the product here, so this table is not reproducible.
      CsvWriter w(out_dir / "probe.csv", {"samples", "dict_size", "horizon",
                                          "iterations", "seconds_per_iteration"});
      for (const auto& p : table) {
        w << p.samples << p.dict_size << p.horizon << p.iterations
          << p.seconds_per_iteration;
        w.EndRow();
        log << "N=" << p.samples << " M=" << p.dict_size << " T=" << p.horizon
            << " s/iter=" << FormatDouble(p.seconds_per_iteration) << "\n";
      }
      summary["points"] = table.size();
      break;
    }
  }
  WriteTextFile(out_dir / "metadata.json", SerializeConfig(resolved));
  WriteTextFile(out_dir / "summary.json", summary.dump(2) + "\n");
  timing["total_seconds"] = Seconds(start);
  WriteTextFile(out_dir / "timing.json", timing.dump(2) + "\n");
  return status;
}

}  // namespace kpi
