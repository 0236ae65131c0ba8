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

#ifndef KPI_DYNAMICS_HPP_
#define KPI_DYNAMICS_HPP_

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kpi/kernel.hpp"

namespace kpi {

// States whose norm exceeds this are treated as divergent.
inline constexpr double kDivergenceGuard = 1e6;

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int sample, int stage, const std::string& what)
      : std::runtime_error(what), sample_(sample), stage_(stage) {}
  int sample() const { return sample_; }
  int stage() const { return stage_; }

 private:
  int sample_;
  int stage_;
};

// A single member's discrete-time model.
struct StateSpace {
  Matrix A;
  Matrix B;
};

// x+ = A x + B u with u = col(u_1, ..., u_N).
struct LinearSystem {
  Matrix A;
  Matrix B;
  std::vector<int> input_blocks;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }
  void Validate() const;
};

// Single-step feedback used by rollouts, u = policy(t, x).
using FeedbackLaw = std::function<Vector(int, const Vector&)>;

// states[i] is n x (T + 1), controls[i] is m x T; column k holds stage
// first_stage + k.
struct TrajectoryBatch {
  std::vector<Matrix> states;
  std::vector<Matrix> controls;
  int first_stage = 0;
  int horizon = 0;

  int sample_count() const { return static_cast<int>(states.size()); }
  int end_stage() const { return first_stage + horizon; }

  // n x N matrix of all sample states at absolute stage t.
  Matrix StatesAt(int t) const;
};

// Exact zero-order-hold discretization of p'' = u on (p, v).
StateSpace DiscretizeDoubleIntegrator(double dt);

LinearSystem AssembleTeamSystem(const std::vector<StateSpace>& subsystems);

// Throws DivergenceError when the successor is non-finite or exceeds the
// divergence guard.
Vector Step(const LinearSystem& sys, const Vector& x, const Vector& u);

TrajectoryBatch Rollout(const LinearSystem& sys, const KernelPolicy& policy,
                        const std::vector<Vector>& x0_batch);

TrajectoryBatch Rollout(const LinearSystem& sys, const FeedbackLaw& law,
                        int first_stage, int horizon,
                        const std::vector<Vector>& x0_batch);

}  // namespace kpi

#endif  // KPI_DYNAMICS_HPP_
