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

#ifndef KPI_COST_HPP_
#define KPI_COST_HPP_

#include <functional>
#include <vector>

#include "kpi/dynamics.hpp"
#include "kpi/kernel.hpp"

namespace kpi {

// Nonlinear penalty evaluated at an absolute stage index. Stage enters
// because scenario states are measured relative to a moving reference.
using StatePenalty = std::function<double(int stage, const Vector& x)>;

// Maps a stacked state at a stage to per-vehicle 2-D positions (2 x V).
using PositionExtractor = std::function<Matrix(int stage, const Vector& x)>;

struct CollisionSpec {
  double safety_distance = 2.0;  // d_d, meters
  double softening = 0.1;        // delta, meters^2
  PositionExtractor positions;

  void Validate() const;
};

struct CostSpec {
  Matrix Q;
  Matrix R;
  Matrix QF;
  StatePenalty psi;    // empty means zero
  StatePenalty psi_f;  // empty means zero

  bool HasPenalty() const { return psi || psi_f; }
  // Checks symmetry and positive definiteness. `allow_semidefinite` admits
  // zero state weights, which the oracle tests use.
  void Validate(bool allow_semidefinite = false) const;
};

// values(i, k) = V at stage first_stage + k along sample i.
struct CostToGoTable {
  Matrix values;  // N x (T + 1)
  Vector means;   // T + 1
  int first_stage = 0;

  double InitialMean() const { return means(0); }
};

// sum_{i<j} d_d^2 / (d_ij^2 + delta) over the columns of `positions`.
double CollisionPenalty(const Matrix& positions, const CollisionSpec& spec);

StatePenalty MakeCollisionPenalty(CollisionSpec spec);

double StageCost(int t, const Vector& x, const Vector& u, const CostSpec& spec);
double TerminalCost(int t, const Vector& x, const CostSpec& spec);

CostToGoTable EvaluateCostToGo(const TrajectoryBatch& batch,
                               const CostSpec& spec);

// Cost of a single trajectory summed forward; used to cross-check the
// backward recursion.
double ForwardTrajectoryCost(const Matrix& states, const Matrix& controls,
                             int first_stage, const CostSpec& spec);

// Remaining cost from `x` at stage `t`, continuing under `policy` up to its
// end stage and closing with the terminal cost there.
double TailCost(const LinearSystem& sys, const CostSpec& spec,
                const KernelPolicy& policy, int t, const Vector& x);

// V_{t+1} evaluated at an arbitrary successor state.
using Continuation = std::function<double(const Vector&)>;

Continuation TailContinuation(const LinearSystem& sys, const CostSpec& spec,
                              const KernelPolicy& policy, int next_stage);

// Per-sample terms of the empirical stage objective at stage t given the
// stacked policy values (N x m, row i = pi_t(x_i)). Each term already
// carries the 1/N weight, so the objective is their sum.
Vector StageObjectiveTerms(int t, const Matrix& values,
                           const Matrix& states_at_t,
                           const Continuation& continuation,
                           const LinearSystem& sys, const CostSpec& spec);

// Mean over samples of x'Qx + pi'R pi + psi(x) + V_{t+1}(Ax + B pi), with
// pi = cross * candidate_coeffs.
double EmpiricalStageObjective(int t, const Matrix& candidate_coeffs,
                               const Matrix& states_at_t,
                               const Continuation& continuation,
                               const LinearSystem& sys, const CostSpec& spec,
                               const GramPair& grams);

}  // namespace kpi

#endif  // KPI_COST_HPP_
