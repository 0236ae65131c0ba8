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

#include "kpi/dynamics.hpp"

#include <numeric>

namespace kpi {

void LinearSystem::Validate() const {
  if (A.rows() == 0 || A.rows() != A.cols()) {
    throw std::invalid_argument("A must be square and non-empty");
  }
  if (B.rows() != A.rows()) {
    throw std::invalid_argument("B must have as many rows as A");
  }
  const int blocks = std::accumulate(input_blocks.begin(), input_blocks.end(), 0);
  if (blocks != B.cols()) {
    throw std::invalid_argument("input blocks do not sum to B column count");
  }
  if (!A.allFinite() || !B.allFinite()) {
    throw std::invalid_argument("system matrices must be finite");
  }
}

Matrix TrajectoryBatch::StatesAt(int t) const {
  if (t < first_stage || t > end_stage() || states.empty()) {
    throw std::out_of_range("stage outside trajectory batch");
  }
  Matrix out(states.front().rows(), sample_count());
  for (int i = 0; i < sample_count(); ++i) {
    out.col(i) = states[static_cast<std::size_t>(i)].col(t - first_stage);
  }
  return out;
}

StateSpace DiscretizeDoubleIntegrator(double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  StateSpace s;
  s.A = Matrix{{1.0, dt}, {0.0, 1.0}};
  s.B = Matrix{{0.5 * dt * dt}, {dt}};
  return s;
}

LinearSystem AssembleTeamSystem(const std::vector<StateSpace>& subsystems) {
  if (subsystems.empty()) throw std::invalid_argument("no subsystems");
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  for (const auto& s : subsystems) {
    if (s.A.rows() != s.A.cols() || s.B.rows() != s.A.rows()) {
      throw std::invalid_argument("subsystem dimensions inconsistent");
    }
    n += s.A.rows();
    m += s.B.cols();
  }
  LinearSystem sys;
  sys.A = Matrix::Zero(n, n);
  sys.B = Matrix::Zero(n, m);
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  for (const auto& s : subsystems) {
    const auto ni = s.A.rows();
    const auto mi = s.B.cols();
    sys.A.block(row, row, ni, ni) = s.A;
    sys.B.block(row, col, ni, mi) = s.B;
    sys.input_blocks.push_back(static_cast<int>(mi));
    row += ni;
    col += mi;
  }
  return sys;
}

Vector Step(const LinearSystem& sys, const Vector& x, const Vector& u) {
  if (x.size() != sys.state_dim() || u.size() != sys.input_dim()) {
    throw std::invalid_argument("step: dimension mismatch");
  }
  Vector next = sys.A * x + sys.B * u;
  if (!next.allFinite() || next.norm() > kDivergenceGuard) {
    throw DivergenceError(-1, -1, "state diverged");
  }
  return next;
}

TrajectoryBatch Rollout(const LinearSystem& sys, const FeedbackLaw& law,
                        int first_stage, int horizon,
                        const std::vector<Vector>& x0_batch) {
  TrajectoryBatch batch;
  batch.first_stage = first_stage;
  batch.horizon = horizon;
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  batch.states.reserve(x0_batch.size());
  batch.controls.reserve(x0_batch.size());
  for (std::size_t i = 0; i < x0_batch.size(); ++i) {
    Matrix xs(n, horizon + 1);
    Matrix us(m, horizon);
    xs.col(0) = x0_batch[i];
    for (int k = 0; k < horizon; ++k) {
      const int t = first_stage + k;
      us.col(k) = law(t, xs.col(k));
      try {
        xs.col(k + 1) = Step(sys, xs.col(k), us.col(k));
      } catch (const DivergenceError&) {
        throw DivergenceError(static_cast<int>(i), t,
                              "rollout diverged at sample " +
                                  std::to_string(i) + ", stage " +
                                  std::to_string(t));
      }
    }
    batch.states.push_back(std::move(xs));
    batch.controls.push_back(std::move(us));
  }
  return batch;
}

TrajectoryBatch Rollout(const LinearSystem& sys, const KernelPolicy& policy,
                        const std::vector<Vector>& x0_batch) {
  return Rollout(
      sys,
      [&policy](int t, const Vector& x) { return policy.Evaluate(t, x); },
      policy.first_stage(), policy.num_stages(), x0_batch);
}

}  // namespace kpi
