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

#include "kpi/cost.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace kpi {
namespace {

void CheckWeight(const Matrix& W, const char* name, bool allow_semidefinite) {
  if (W.rows() != W.cols() || W.rows() == 0) {
    throw std::invalid_argument(std::string(name) + " must be square");
  }
  const double scale = std::max(1.0, W.cwiseAbs().maxCoeff());
  if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument(std::string(name) + " must be symmetric");
  }
  const double min_eig =
      Eigen::SelfAdjointEigenSolver<Matrix>(W, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  if (allow_semidefinite ? min_eig < -1e-12 * scale : min_eig <= 0.0) {
    throw std::invalid_argument(std::string(name) +
                                (allow_semidefinite
                                     ? " must be positive semidefinite"
                                     : " must be positive definite"));
  }
}

}  // namespace

void CollisionSpec::Validate() const {
  if (!(safety_distance > 0.0)) {
    throw std::invalid_argument("safety distance must be positive");
  }
  if (!(softening > 0.0)) {
    throw std::invalid_argument("softening constant must be positive");
  }
}

void CostSpec::Validate(bool allow_semidefinite) const {
  CheckWeight(Q, "Q", allow_semidefinite);
  CheckWeight(R, "R", false);
  CheckWeight(QF, "QF", allow_semidefinite);
  if (QF.rows() != Q.rows()) {
    throw std::invalid_argument("Q and QF dimensions differ");
  }
}

double CollisionPenalty(const Matrix& positions, const CollisionSpec& spec) {
  const double dd2 = spec.safety_distance * spec.safety_distance;
  double total = 0.0;
  for (Eigen::Index i = 0; i < positions.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < positions.cols(); ++j) {
      const double d2 = (positions.col(i) - positions.col(j)).squaredNorm();
      total += dd2 / (d2 + spec.softening);
    }
  }
  return total;
}

StatePenalty MakeCollisionPenalty(CollisionSpec spec) {
  spec.Validate();
  if (!spec.positions) {
    throw std::invalid_argument("collision penalty needs a position map");
  }
  return [spec = std::move(spec)](int t, const Vector& x) {
    return CollisionPenalty(spec.positions(t, x), spec);
  };
}

double StageCost(int t, const Vector& x, const Vector& u,
                 const CostSpec& spec) {
  double c = x.dot(spec.Q * x) + u.dot(spec.R * u);
  if (spec.psi) c += spec.psi(t, x);
  return c;
}

double TerminalCost(int t, const Vector& x, const CostSpec& spec) {
  double c = x.dot(spec.QF * x);
  if (spec.psi_f) c += spec.psi_f(t, x);
  return c;
}

CostToGoTable EvaluateCostToGo(const TrajectoryBatch& batch,
                               const CostSpec& spec) {
  const int n_samples = batch.sample_count();
  const int horizon = batch.horizon;
  CostToGoTable table;
  table.first_stage = batch.first_stage;
  table.values = Matrix::Zero(n_samples, horizon + 1);
  for (int i = 0; i < n_samples; ++i) {
    const auto& xs = batch.states[static_cast<std::size_t>(i)];
    const auto& us = batch.controls[static_cast<std::size_t>(i)];
    table.values(i, horizon) =
        TerminalCost(batch.end_stage(), xs.col(horizon), spec);
    for (int k = horizon - 1; k >= 0; --k) {
      table.values(i, k) =
          StageCost(batch.first_stage + k, xs.col(k), us.col(k), spec) +
          table.values(i, k + 1);
    }
  }
  table.means = Vector::Zero(horizon + 1);
  if (n_samples > 0) {
    // Left-to-right sums keep results bit-reproducible.
    for (int k = 0; k <= horizon; ++k) {
      double s = 0.0;
      for (int i = 0; i < n_samples; ++i) s += table.values(i, k);
      table.means(k) = s / n_samples;
    }
  }
  return table;
}

double ForwardTrajectoryCost(const Matrix& states, const Matrix& controls,
                             int first_stage, const CostSpec& spec) {
  const auto horizon = controls.cols();
  double total = 0.0;
  for (Eigen::Index k = 0; k < horizon; ++k) {
    total += StageCost(first_stage + static_cast<int>(k), states.col(k),
                       controls.col(k), spec);
  }
  return total + TerminalCost(first_stage + static_cast<int>(horizon),
                              states.col(horizon), spec);
}

double TailCost(const LinearSystem& sys, const CostSpec& spec,
                const KernelPolicy& policy, int t, const Vector& x) {
  Vector state = x;
  double total = 0.0;
  for (int tau = t; tau < policy.end_stage(); ++tau) {
    const Vector u = policy.Evaluate(tau, state);
    total += StageCost(tau, state, u, spec);
    state = Step(sys, state, u);
  }
  return total + TerminalCost(policy.end_stage(), state, spec);
}

Continuation TailContinuation(const LinearSystem& sys, const CostSpec& spec,
                              const KernelPolicy& policy, int next_stage) {
  return [&sys, &spec, &policy, next_stage](const Vector& x) {
    return TailCost(sys, spec, policy, next_stage, x);
  };
}

Vector StageObjectiveTerms(int t, const Matrix& values,
                           const Matrix& states_at_t,
                           const Continuation& continuation,
                           const LinearSystem& sys, const CostSpec& spec) {
  const auto n_samples = states_at_t.cols();
  if (values.rows() != n_samples || values.cols() != sys.input_dim()) {
    throw std::invalid_argument("policy values must be N x m");
  }
  const double weight = 1.0 / static_cast<double>(n_samples);
  Vector terms(n_samples);
  for (Eigen::Index i = 0; i < n_samples; ++i) {
    const Vector x = states_at_t.col(i);
    const Vector u = values.row(i).transpose();
    try {
      terms(i) = weight * (StageCost(t, x, u, spec) +
                           continuation(Step(sys, x, u)));
    } catch (const DivergenceError&) {
      throw DivergenceError(static_cast<int>(i), t,
                            "tail simulation diverged for sample " +
                                std::to_string(i) + " at stage " +
                                std::to_string(t));
    }
  }
  return terms;
}

double EmpiricalStageObjective(int t, const Matrix& candidate_coeffs,
                               const Matrix& states_at_t,
                               const Continuation& continuation,
                               const LinearSystem& sys, const CostSpec& spec,
                               const GramPair& grams) {
  const Matrix values = grams.cross * candidate_coeffs;
  return StageObjectiveTerms(t, values, states_at_t, continuation, sys, spec)
      .sum();
}

}  // namespace kpi
