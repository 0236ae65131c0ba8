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

// Identification followed by receding-horizon kernel policy improvement.
//
// Steps s < id_steps apply Gaussian excitation and feed RLS. Later steps
// plan over [s, min(T, s + H)) on the identified model from the single
// observed state, apply the first stage, and shift the plan forward.

#ifndef KPI_ONLINE_HPP_
#define KPI_ONLINE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "kpi/cost.hpp"
#include "kpi/dynamics.hpp"
#include "kpi/policy_iteration.hpp"
#include "kpi/random.hpp"
#include "kpi/rls.hpp"

namespace kpi {

struct OnlineConfig {
  int horizon = 100;      // T
  int window = 4;         // H
  int id_steps = 40;      // N_id
  double sigma_exc = 1.5;
  double gamma = 0.5;     // accepted and stored, not used
  double lambda = 1.0;
  double m0_scale = 1e8;
  double pe_alpha = 1e-3;
  int pe_window = 0;      // <= 0 means 2 (n + m)
  KernelSpec kernel;      // window kernel; rbf length scale must be > 0
  SolverConfig solver;
  std::optional<Matrix> theta0;

  void Validate() const;
};

// Something that takes a control and returns the next observed state.
class Plant {
 public:
  virtual ~Plant() = default;
  virtual const Vector& state() const = 0;
  virtual const Vector& Apply(const Vector& u) = 0;
};

class LinearPlant : public Plant {
 public:
  LinearPlant(LinearSystem sys, Vector x0);
  const Vector& state() const override { return x_; }
  const Vector& Apply(const Vector& u) override;

 private:
  LinearSystem sys_;
  Vector x_;
};

// base + N(0, sigma^2) on every channel whose mask entry is true (all
// channels when the mask is empty).
Vector ExcitationInput(Rng& rng, double sigma, const Vector& base,
                       const std::vector<bool>& mask = {});

struct WindowPlan {
  KernelPolicy policy;  // stages [s, window_end)
  double cost_before = 0.0;
  double cost_after = 0.0;
  int iterations = 0;
  bool rejected = false;
  std::string note;
};

// Improves `warm_start` (or a zero policy when absent) on the window
// [s, window_end) of `model` from the single state x_s.
WindowPlan PlanWindow(const Vector& x_s, int s, const LinearSystem& model,
                      const KernelPolicy* warm_start, int window_end,
                      const CostSpec& cost, const KernelSpec& kernel,
                      const SolverConfig& cfg);

// Drops stage s of `plan`, keeps the rest bit-exactly, and appends zero
// stages up to `new_end` whose dictionaries are the states predicted from
// x_next under the kept stages.
KernelPolicy ShiftWarmStart(const KernelPolicy& plan, const Vector& x_next,
                            const LinearSystem& model, int new_end);

struct OnlineStep {
  int step = 0;
  bool identification = false;
  Vector control;
  Vector state;  // observed x_{s+1}
  double window_cost_before = 0.0;
  double window_cost_after = 0.0;
  int window_iterations = 0;
  double residual_norm = 0.0;
  double id_error = 0.0;      // NaN when the truth is unknown
  double min_distance = 0.0;  // at the observed state, NaN without positions
  PeStatus pe = PeStatus::kInsufficientData;
  double pe_min_eigenvalue = 0.0;
  std::string note;
};

struct OnlineLog {
  std::vector<OnlineStep> steps;
  Matrix states;    // n x (steps + 1)
  Matrix controls;  // m x steps
  Estimate model;
  bool aborted = false;
  std::string message;
};

struct OnlineProblem {
  int state_dim = 0;
  int input_dim = 0;
  CostSpec cost;
  PositionExtractor positions;    // optional
  std::optional<Matrix> truth;    // [A B] of the plant, optional
};

OnlineLog RunOnline(Plant& plant, const OnlineProblem& problem,
                    const OnlineConfig& cfg);

}  // namespace kpi

#endif  // KPI_ONLINE_HPP_
