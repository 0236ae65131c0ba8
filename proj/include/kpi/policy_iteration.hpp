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

// Offline kernel policy iteration with implicit discrete-derivative updates.
//
// Each outer iteration rolls the current policy forward from a fixed batch of
// initial states, then sweeps t = T-1, ..., 0. At stage t the coefficients
// are replaced by a solution of
//
//   K_t c_new = K_t c_old - delta K_st' D(c_new, c_old),
//
// where D is the secant derivative of the empirical stage objective in the
// stacked sample-value coordinates. Because D is parallel to the value step,
// nonzero solutions are generalized eigenvectors of the pencil
// (K_st' K_st, K_t), scaled so that J_t(c_new) - J_t(c_old) equals
// -(1/delta) times the squared K_t-norm of the coefficient step. The solver
// picks the eigen-direction with the largest predicted decrease and finds
// the scale by one-dimensional root finding. Each accepted stage step lowers
// the objective, and the stage decreases telescope into a decrease of the
// total empirical cost.

#ifndef KPI_POLICY_ITERATION_HPP_
#define KPI_POLICY_ITERATION_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kpi/cost.hpp"
#include "kpi/dynamics.hpp"
#include "kpi/kernel.hpp"
#include "kpi/random.hpp"

namespace kpi {

struct SolverConfig {
  double learning_rate = 1.0;  // delta
  int max_outer_iters = 250;
  double inner_tol = 1e-8;
  int inner_max_iters = 60;
  int mc_samples = 50;
  int dict_size = 30;
  double ridge = 1e-8;  // relative to the mean Gram diagonal
  // Stop once sum_t ||dpi_t||^2 < convergence_tol * (1 + J0).
  double convergence_tol = 1e-8;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double cost_before = 0.0;  // J0 of the policy entering the sweep
  double cost = 0.0;         // J0 after the sweep
  std::vector<double> step_norms;  // ||dpi_t|| in stacked values, by stage
  double sum_step_sq = 0.0;        // sum_t ||dpi_t||^2, stacked values
  double sum_rkhs_step_sq = 0.0;   // sum_t dc_t' K_t dc_t
  std::vector<int> inner_iterations;
  int fallbacks = 0;
  double wall_seconds = 0.0;
};

// Secant derivative dpi * (j_new - j_old) / ||dpi||^2, zero when dpi = 0.
Vector DiscreteFrechetDerivative(const Vector& pi_new, const Vector& pi_old,
                                 double j_new, double j_old);

// Row-major flattening of N x m sample values into R^{Nm}.
Vector StackValues(const Matrix& values);
Matrix UnstackValues(const Vector& stacked, Eigen::Index rows,
                     Eigen::Index cols);

// The empirical objective at one stage with its tail fixed.
class StageProblem {
 public:
  StageProblem(int stage, const LinearSystem& sys, const CostSpec& cost,
               Matrix states, GramPair grams, Continuation continuation);

  int stage() const { return stage_; }
  const Matrix& states() const { return states_; }
  const GramPair& grams() const { return grams_; }
  const LinearSystem& system() const { return *sys_; }
  const CostSpec& cost() const { return *cost_; }
  int sample_count() const { return static_cast<int>(states_.cols()); }

  Matrix Values(const Matrix& coeffs) const { return grams_.cross * coeffs; }
  // Per-sample objective terms, each weighted by 1/N.
  Vector Terms(const Matrix& values) const;
  double SampleTerm(int i, const Vector& u) const;
  double Objective(const Matrix& coeffs) const { return Terms(Values(coeffs)).sum(); }

 private:
  int stage_;
  const LinearSystem* sys_;
  const CostSpec* cost_;
  Matrix states_;
  GramPair grams_;
  Continuation continuation_;
};

// Builds the stage problem for stage t from the dictionary stored in
// `policy`, continuing under the policy's own tail stages.
StageProblem MakeStageProblem(int t, const LinearSystem& sys,
                              const CostSpec& cost, const KernelPolicy& policy,
                              Matrix states_at_t, double relative_ridge);

// Frobenius norm of K (c_new - c_old) + delta K_st' D(c_new, c_old).
double ImplicitResidual(const StageProblem& problem, const Matrix& c_new,
                        const Matrix& c_old, double j_new, double j_old,
                        double delta);

struct ImplicitUpdate {
  Matrix coefficients;
  double objective_old = 0.0;
  double objective_new = 0.0;
  double residual = 0.0;
  double value_step_sq = 0.0;  // ||K_st dc||_F^2
  double rkhs_step_sq = 0.0;   // trace(dc' K_t dc)
  int evaluations = 0;
  bool moved = false;          // false means coefficients == c_old
  std::string note;
};

ImplicitUpdate SolveImplicitUpdate(const StageProblem& problem,
                                   const Matrix& c_old,
                                   const SolverConfig& cfg);

// Per stage, picks up to `dict_size` distinct sample states uniformly without
// replacement as that stage's dictionary and zeroes its coefficients.
void SelectDictionaries(KernelPolicy& policy, const TrajectoryBatch& batch,
                        int dict_size, Rng& rng);

// One backward sweep over all policy stages using the states in `batch`.
std::vector<ImplicitUpdate> BackwardSweep(const LinearSystem& sys,
                                          const CostSpec& cost,
                                          KernelPolicy& policy,
                                          const TrajectoryBatch& batch,
                                          const SolverConfig& cfg);

struct PolicyIterationResult {
  KernelPolicy policy;
  std::vector<IterationRecord> history;
  std::vector<Vector> x0_batch;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool diverged = false;
  std::string message;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

// Repeats rollout + backward sweep on an already-initialized policy.
PolicyIterationResult ImprovePolicy(const LinearSystem& sys,
                                    const CostSpec& cost, KernelPolicy policy,
                                    const std::vector<Vector>& x0_batch,
                                    const SolverConfig& cfg,
                                    const IterationCallback& on_iteration = {});

// Full offline run from the zero policy over stages [0, horizon).
// A gaussian-rbf kernel with length_scale <= 0 gets the median pairwise
// distance of the initial batch.
PolicyIterationResult PolicyIteration(const LinearSystem& sys,
                                      const CostSpec& cost, int horizon,
                                      const std::vector<Vector>& x0_batch,
                                      KernelSpec kernel,
                                      const SolverConfig& cfg,
                                      const IterationCallback& on_iteration = {});

using InitialStateSampler =
    std::function<std::vector<Vector>(Rng& rng, int count)>;

// Draws cfg.mc_samples initial states from the sampling substream.
PolicyIterationResult PolicyIteration(const LinearSystem& sys,
                                      const CostSpec& cost, int horizon,
                                      const InitialStateSampler& sampler,
                                      KernelSpec kernel,
                                      const SolverConfig& cfg,
                                      const IterationCallback& on_iteration = {});

struct ProbeProblem {
  LinearSystem sys;
  CostSpec cost;
  InitialStateSampler sampler;
};

struct ProbePoint {
  int samples = 0;
  int dict_size = 0;
  int horizon = 0;
  int iterations = 0;
  double seconds_per_iteration = 0.0;
};

// Times `iterations` outer iterations for every grid combination.
std::vector<ProbePoint> ComplexityProbe(
    const std::function<ProbeProblem(int horizon)>& make_problem,
    const std::vector<int>& samples, const std::vector<int>& dict_sizes,
    const std::vector<int>& horizons, const KernelSpec& kernel,
    SolverConfig cfg, int iterations);

}  // namespace kpi

#endif  // KPI_POLICY_ITERATION_HPP_
