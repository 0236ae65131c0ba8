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

// Comma-separated result tables. Doubles are printed with 17 significant
// digits so that a table read back reproduces the values exactly.

#ifndef KPI_EXPORT_HPP_
#define KPI_EXPORT_HPP_

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "kpi/dynamics.hpp"
#include "kpi/online.hpp"
#include "kpi/policy_iteration.hpp"
#include "kpi/scenario.hpp"

namespace kpi {

std::string FormatDouble(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& file,
            const std::vector<std::string>& header);
  ~CsvWriter();

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(int v);
  CsvWriter& operator<<(const std::string& v);
  void EndRow();

 private:
  void Separate();

  std::filesystem::path file_;
  std::ofstream out_;
  bool row_started_ = false;
};

void WriteTextFile(const std::filesystem::path& file, const std::string& text);

// index, cost_before, cost, sum_dpi_sq, sum_rkhs_sq, fallbacks
void ExportCostHistory(const std::filesystem::path& file,
                       const std::vector<IterationRecord>& history);

// One row per real step of an online run.
void ExportOnlineSteps(const std::filesystem::path& file, const OnlineLog& log);

// With a scenario: sample, stage, time, vehicle, role, x, y, speed, accel.
// Without: sample, stage, x_0.., u_0.. in raw coordinates.
void ExportTrajectories(const std::filesystem::path& file,
                        const TrajectoryBatch& batch, const Scenario* scenario);

// sample, stage, time, i, j, distance
void ExportDistances(const std::filesystem::path& file,
                     const TrajectoryBatch& batch, const Scenario& scenario);

// The closed-loop trajectory of an online run as a one-sample batch.
TrajectoryBatch BatchFromLog(const OnlineLog& log);

}  // namespace kpi

#endif  // KPI_EXPORT_HPP_
