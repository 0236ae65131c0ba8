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

#include "kpi/export.hpp"

#include <cstdio>
#include <limits>
#include <stdexcept>

namespace kpi {
namespace {

void Ensure(const std::ofstream& out, const std::filesystem::path& file) {
  if (!out) throw std::runtime_error("cannot write '" + file.string() + "'");
}

}  // namespace

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& file,
                     const std::vector<std::string>& header)
    : file_(file), out_(file) {
  Ensure(out_, file_);
  for (const auto& h : header) *this << h;
  EndRow();
}

CsvWriter::~CsvWriter() = default;

void CsvWriter::Separate() {
  if (row_started_) out_ << ',';
  row_started_ = true;
}

CsvWriter& CsvWriter::operator<<(double v) {
  Separate();
  out_ << FormatDouble(v);
  return *this;
}

CsvWriter& CsvWriter::operator<<(int v) {
  Separate();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& v) {
  Separate();
  out_ << v;
  return *this;
}

void CsvWriter::EndRow() {
  out_ << '\n';
  row_started_ = false;
  Ensure(out_, file_);
}

void WriteTextFile(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file);
  Ensure(out, file);
  out << text;
  Ensure(out, file);
}

void ExportCostHistory(const std::filesystem::path& file,
                       const std::vector<IterationRecord>& history) {
  CsvWriter w(file, {"index", "cost_before", "cost", "sum_dpi_sq",
                     "sum_rkhs_sq", "fallbacks"});
  for (const auto& rec : history) {
    w << rec.iteration << rec.cost_before << rec.cost << rec.sum_step_sq
      << rec.sum_rkhs_step_sq << rec.fallbacks;
    w.EndRow();
  }
}

void ExportOnlineSteps(const std::filesystem::path& file, const OnlineLog& log) {
  std::vector<std::string> header{"step", "phase", "window_cost_before",
                                  "window_cost_after", "window_iterations",
                                  "residual_norm", "id_error", "min_distance",
                                  "pe_min_eigenvalue"};
  const auto m = log.controls.rows();
  const auto n = log.states.rows();
  for (Eigen::Index k = 0; k < m; ++k) header.push_back("u_" + std::to_string(k));
  for (Eigen::Index k = 0; k < n; ++k) header.push_back("x_" + std::to_string(k));
  CsvWriter w(file, header);
  for (const auto& st : log.steps) {
    w << st.step << std::string(st.identification ? "identification" : "control")
      << st.window_cost_before << st.window_cost_after << st.window_iterations
      << st.residual_norm << st.id_error << st.min_distance
      << st.pe_min_eigenvalue;
    for (Eigen::Index k = 0; k < st.control.size(); ++k) w << st.control(k);
    for (Eigen::Index k = 0; k < st.state.size(); ++k) w << st.state(k);
    w.EndRow();
  }
}

void ExportTrajectories(const std::filesystem::path& file,
                        const TrajectoryBatch& batch, const Scenario* scenario) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  if (scenario) {
    CsvWriter w(file, {"sample", "stage", "time", "vehicle", "role", "x", "y",
                       "speed", "accel"});
    const double dt = scenario->params().dt;
    for (int i = 0; i < batch.sample_count(); ++i) {
      const Matrix& xs = batch.states[static_cast<std::size_t>(i)];
      const Matrix& us = batch.controls[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 0; k < xs.cols(); ++k) {
        const int stage = batch.first_stage + static_cast<int>(k);
        const Vector x = xs.col(k);
        const Matrix p = scenario->Positions(stage, x);
        const Vector v = scenario->Speeds(x);
        Vector a = Vector::Constant(scenario->vehicle_count(), kNaN);
        if (k < us.cols()) a = scenario->Accelerations(x, us.col(k));
        for (int j = 0; j < scenario->vehicle_count(); ++j) {
          w << i << stage << stage * dt << j
            << std::string(VehicleRoleName(scenario->params().vehicles[j].role))
            << p(0, j) << p(1, j) << v(j) << a(j);
          w.EndRow();
        }
      }
    }
    return;
  }
  std::vector<std::string> header{"sample", "stage"};
  const auto n = batch.states.empty() ? 0 : batch.states.front().rows();
  const auto m = batch.controls.empty() ? 0 : batch.controls.front().rows();
  for (Eigen::Index k = 0; k < n; ++k) header.push_back("x_" + std::to_string(k));
  for (Eigen::Index k = 0; k < m; ++k) header.push_back("u_" + std::to_string(k));
  CsvWriter w(file, header);
  for (int i = 0; i < batch.sample_count(); ++i) {
    const Matrix& xs = batch.states[static_cast<std::size_t>(i)];
    const Matrix& us = batch.controls[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < xs.cols(); ++k) {
      w << i << batch.first_stage + static_cast<int>(k);
      for (Eigen::Index r = 0; r < n; ++r) w << xs(r, k);
      for (Eigen::Index r = 0; r < m; ++r) w << (k < us.cols() ? us(r, k) : kNaN);
      w.EndRow();
    }
  }
}

void ExportDistances(const std::filesystem::path& file,
                     const TrajectoryBatch& batch, const Scenario& scenario) {
  CsvWriter w(file, {"sample", "stage", "time", "i", "j", "distance"});
  const auto pairs = scenario.Pairs();
  for (int i = 0; i < batch.sample_count(); ++i) {
    const Matrix d = PairwiseDistances(
        scenario, batch.states[static_cast<std::size_t>(i)], batch.first_stage);
    for (Eigen::Index k = 0; k < d.cols(); ++k) {
      const int stage = batch.first_stage + static_cast<int>(k);
      for (std::size_t r = 0; r < pairs.size(); ++r) {
        w << i << stage << stage * scenario.params().dt << pairs[r].first
          << pairs[r].second << d(static_cast<Eigen::Index>(r), k);
        w.EndRow();
      }
    }
  }
}

TrajectoryBatch BatchFromLog(const OnlineLog& log) {
  TrajectoryBatch b;
  b.states.push_back(log.states);
  b.controls.push_back(log.controls);
  b.first_stage = 0;
  b.horizon = static_cast<int>(log.controls.cols());
  return b;
}

}  // namespace kpi
