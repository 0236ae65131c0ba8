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

#include "kpi/online.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace kpi {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double MinColumnDistance(const Matrix& positions) {
  double best = kNaN;
  for (Eigen::Index i = 0; i < positions.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < positions.cols(); ++j) {
      const double d = (positions.col(i) - positions.col(j)).norm();
      if (!(d >= best)) best = d;
    }
  }
  return best;
}

Matrix Columns(const std::vector<Vector>& cols, Eigen::Index rows) {
  Matrix out(rows, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = cols[k];
  }
  return out;
}

}  // namespace

void OnlineConfig::Validate() const {
  if (horizon < 1) throw std::invalid_argument("online.horizon must be >= 1");
  if (window < 1 || window > horizon) {
    throw std::invalid_argument("online.window must lie in [1, horizon]");
  }
  if (id_steps < 0 || id_steps >= horizon) {
    throw std::invalid_argument("online.id_steps must lie in [0, horizon)");
  }
  if (!(sigma_exc >= 0.0)) {
    throw std::invalid_argument("online.sigma_exc must be >= 0");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("online.gamma must lie in (0, 1)");
  }
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("online.lambda must lie in (0, 1]");
  }
  if (!(m0_scale > 0.0)) throw std::invalid_argument("online.m0_scale must be > 0");
  if (!(pe_alpha > 0.0)) throw std::invalid_argument("online.pe_alpha must be > 0");
  if (kernel.family == KernelFamily::kGaussianRbf &&
      !(kernel.length_scale > 0.0)) {
    throw std::invalid_argument("online.kernel.length_scale must be > 0");
  }
  kernel.Validate();
  solver.Validate();
  if (id_steps == 0 && !theta0) {
    throw std::invalid_argument("online.id_steps = 0 needs an initial model");
  }
}

LinearPlant::LinearPlant(LinearSystem sys, Vector x0)
    : sys_(std::move(sys)), x_(std::move(x0)) {
  sys_.Validate();
  if (x_.size() != sys_.state_dim()) {
    throw std::invalid_argument("plant initial state has wrong dimension");
  }
}

const Vector& LinearPlant::Apply(const Vector& u) {
  x_ = Step(sys_, x_, u);
  return x_;
}

Vector ExcitationInput(Rng& rng, double sigma, const Vector& base,
                       const std::vector<bool>& mask) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != base.size()) {
    throw std::invalid_argument("excitation mask length mismatch");
  }
  Vector out = base;
  if (sigma == 0.0) return out;
  std::normal_distribution<double> noise(0.0, sigma);
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    if (mask.empty() || mask[static_cast<std::size_t>(k)]) out(k) += noise(rng);
  }
  return out;
}

WindowPlan PlanWindow(const Vector& x_s, int s, const LinearSystem& model,
                      const KernelPolicy* warm_start, int window_end,
                      const CostSpec& cost, const KernelSpec& kernel,
                      const SolverConfig& cfg) {
  const int n = model.state_dim();
  const int m = model.input_dim();
  if (window_end <= s) throw std::invalid_argument("empty planning window");
  if (x_s.size() != n) throw std::invalid_argument("window state dimension");
  WindowPlan plan;
  KernelPolicy start;
  if (warm_start) {
    if (warm_start->first_stage() != s || warm_start->end_stage() != window_end ||
        warm_start->state_dim() != n || warm_start->input_dim() != m) {
      throw std::invalid_argument("warm start does not match the window");
    }
    start = *warm_start;
  } else {
    start = KernelPolicy(kernel, s, n, m, window_end - s);
  }
  // Stages without a dictionary get the state predicted under the others.
  Vector x = x_s;
  for (int t = s; t < window_end; ++t) {
    if (start.stage(t).dictionary.empty()) {
      Dictionary d;
      d.points = x;
      d.stage = t;
      start.SetDictionary(t, std::move(d));
    }
    x = model.A * x + model.B * start.Evaluate(t, x);
  }
  const auto result = ImprovePolicy(model, cost, start, {x_s}, cfg);
  plan.cost_before = result.initial_cost;
  plan.iterations = static_cast<int>(result.history.size());
  if (result.diverged) {
    plan.policy = std::move(start);
    plan.cost_after = plan.cost_before;
    plan.rejected = true;
    plan.note = result.message;
    return plan;
  }
  plan.policy = result.policy;
  plan.cost_after = result.final_cost;
  return plan;
}

KernelPolicy ShiftWarmStart(const KernelPolicy& plan, const Vector& x_next,
                            const LinearSystem& model, int new_end) {
  const int first = plan.first_stage() + 1;
  if (new_end <= first) throw std::invalid_argument("shifted window is empty");
  KernelPolicy out(plan.kernel(), first, plan.state_dim(), plan.input_dim(),
                   new_end - first);
  Vector x = x_next;
  for (int t = first; t < new_end; ++t) {
    if (plan.Covers(t)) {
      out.mutable_stage(t) = plan.stage(t);
    } else {
      Dictionary d;
      d.points = x;
      d.stage = t;
      out.SetDictionary(t, std::move(d));
    }
    x = model.A * x + model.B * out.Evaluate(t, x);
  }
  return out;
}

OnlineLog RunOnline(Plant& plant, const OnlineProblem& problem,
                    const OnlineConfig& cfg) {
  cfg.Validate();
  const int n = problem.state_dim;
  const int m = problem.input_dim;
  if (plant.state().size() != n) {
    throw std::invalid_argument("plant state does not match the problem");
  }
  OnlineLog log;
  Rng rng = MakeStream(cfg.solver.seed, RandomStream::kExcitation);
  RlsState rls = RlsInit(n, m, cfg.lambda, cfg.m0_scale, cfg.theta0);
  PeWindow pe(cfg.pe_window > 0 ? cfg.pe_window : 2 * (n + m), cfg.pe_alpha);
  std::optional<KernelPolicy> warm;
  LinearSystem model;
  std::vector<Vector> states{plant.state()};
  std::vector<Vector> controls;

  for (int s = 0; s < cfg.horizon; ++s) {
    const Vector x = plant.state();
    OnlineStep st;
    st.step = s;
    st.id_error = kNaN;
    st.window_cost_before = kNaN;
    st.window_cost_after = kNaN;
    try {
      if (s < cfg.id_steps) {
        st.identification = true;
        st.control = ExcitationInput(rng, cfg.sigma_exc, Vector::Zero(m));
        st.state = plant.Apply(st.control);
        const RlsStep r = RlsUpdate(rls, x, st.control, st.state);
        rls = r.state;
        st.residual_norm = r.residual.norm();
        Vector phi(n + m);
        phi << x, st.control;
        pe.Push(phi);
        const PeResult check = PeCheck(pe);
        st.pe = check.status;
        st.pe_min_eigenvalue = check.min_eigenvalue;
      } else {
        if (s == cfg.id_steps) {
          const Estimate e = EstimateModel(rls);
          model.A = e.A;
          model.B = e.B;
          model.input_blocks = {m};
        }
        const int window_end = std::min(cfg.horizon, s + cfg.window);
        const WindowPlan plan =
            PlanWindow(x, s, model, warm ? &*warm : nullptr, window_end,
                       problem.cost, cfg.kernel, cfg.solver);
        st.window_cost_before = plan.cost_before;
        st.window_cost_after = plan.cost_after;
        st.window_iterations = plan.iterations;
        st.note = plan.note;
        st.control = plan.policy.Evaluate(s, x);
        st.state = plant.Apply(st.control);
        if (s + 1 < cfg.horizon) {
          warm = ShiftWarmStart(plan.policy, st.state, model,
                                std::min(cfg.horizon, s + 1 + cfg.window));
        }
      }
    } catch (const DivergenceError& e) {
      log.aborted = true;
      log.message = "plant diverged at step " + std::to_string(s) + ": " +
                    e.what();
      break;
    }
    if (problem.truth) st.id_error = (*problem.truth - rls.theta_hat).norm();
    st.min_distance = problem.positions
                          ? MinColumnDistance(problem.positions(s + 1, st.state))
                          : kNaN;
    states.push_back(st.state);
    controls.push_back(st.control);
    log.steps.push_back(std::move(st));
  }
  log.states = Columns(states, n);
  log.controls = Columns(controls, m);
  log.model = EstimateModel(rls);
  return log;
}

}  // namespace kpi
