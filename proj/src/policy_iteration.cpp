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

#include "kpi/policy_iteration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include <boost/math/tools/toms748_solve.hpp>

namespace kpi {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative step for central differences of the per-sample objective.
constexpr double kGradientStep = 1e-5;

// Smallest trial scale before a stage gives up on finding descent.
constexpr int kMaxHalvings = 60;
constexpr int kMaxDoublings = 60;

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since)
      .count();
}

// Generalized eigenvectors of (G, K), normalized so that V' K V = I.
struct Pencil {
  Vector eigenvalues;
  Matrix vectors;
};

Pencil SolvePencil(const Matrix& G, const Matrix& K) {
  Eigen::LLT<Matrix> llt(K);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("Gram matrix is singular after ridge");
  }
  const Matrix L = llt.matrixL();
  const Matrix Linv_G =
      L.triangularView<Eigen::Lower>().solve(G);
  Matrix C = L.triangularView<Eigen::Lower>()
                 .solve(Linv_G.transpose())
                 .transpose();
  C = 0.5 * (C + C.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(C);
  Pencil p;
  p.eigenvalues = eig.eigenvalues();
  p.vectors = L.transpose().triangularView<Eigen::Upper>().solve(
      eig.eigenvectors());
  return p;
}

// Gradient of the stage objective with respect to the N x m sample values.
// Central differences of the per-sample terms. Each sample only moves its
// own term, so `curvature` is the diagonal of the (block-diagonal) Hessian.
Matrix ValueGradient(const StageProblem& problem, const Matrix& values,
                     const Vector& terms, Matrix* curvature,
                     int* evaluations) {
  Matrix grad = Matrix::Zero(values.rows(), values.cols());
  *curvature = Matrix::Zero(values.rows(), values.cols());
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const Vector u = values.row(i).transpose();
    for (Eigen::Index k = 0; k < values.cols(); ++k) {
      const double h = kGradientStep * (1.0 + std::abs(u(k)));
      Vector up = u;
      Vector dn = u;
      up(k) += h;
      dn(k) -= h;
      try {
        const double f_up = problem.SampleTerm(static_cast<int>(i), up);
        const double f_dn = problem.SampleTerm(static_cast<int>(i), dn);
        grad(i, k) = (f_up - f_dn) / (2.0 * h);
        (*curvature)(i, k) = (f_up - 2.0 * terms(i) + f_dn) / (h * h);
      } catch (const DivergenceError&) {
        grad(i, k) = 0.0;
      }
    }
  }
  *evaluations += 2 * static_cast<int>(values.cols());
  return grad;
}

ImplicitUpdate Unmoved(const Matrix& c_old, double j_old, int evaluations,
                       std::string note) {
  ImplicitUpdate out;
  out.coefficients = c_old;
  out.objective_old = j_old;
  out.objective_new = j_old;
  out.evaluations = evaluations;
  out.note = std::move(note);
  return out;
}

}  // namespace

void SolverConfig::Validate() const {
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
  if (max_outer_iters < 0) {
    throw std::invalid_argument("max_outer_iters must be nonnegative");
  }
  if (!(inner_tol > 0.0)) {
    throw std::invalid_argument("inner_tol must be positive");
  }
  if (inner_max_iters < 1) {
    throw std::invalid_argument("inner_max_iters must be positive");
  }
  if (mc_samples < 1) throw std::invalid_argument("mc_samples must be >= 1");
  if (dict_size < 1) throw std::invalid_argument("dict_size must be >= 1");
  if (!(ridge >= 0.0)) throw std::invalid_argument("ridge must be >= 0");
  if (!(convergence_tol >= 0.0)) {
    throw std::invalid_argument("convergence_tol must be >= 0");
  }
}

Vector DiscreteFrechetDerivative(const Vector& pi_new, const Vector& pi_old,
                                 double j_new, double j_old) {
  if (pi_new.size() != pi_old.size()) {
    throw std::invalid_argument("policy value vectors differ in length");
  }
  const Vector delta = pi_new - pi_old;
  const double sq = delta.squaredNorm();
  if (sq == 0.0) return Vector::Zero(delta.size());
  return delta * ((j_new - j_old) / sq);
}

Vector StackValues(const Matrix& values) {
  Vector out(values.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) out(k++) = values(i, j);
  }
  return out;
}

Matrix UnstackValues(const Vector& stacked, Eigen::Index rows,
                     Eigen::Index cols) {
  if (stacked.size() != rows * cols) {
    throw std::invalid_argument("stacked length does not match shape");
  }
  Matrix out(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = stacked(k++);
  }
  return out;
}

StageProblem::StageProblem(int stage, const LinearSystem& sys,
                           const CostSpec& cost, Matrix states, GramPair grams,
                           Continuation continuation)
    : stage_(stage),
      sys_(&sys),
      cost_(&cost),
      states_(std::move(states)),
      grams_(std::move(grams)),
      continuation_(std::move(continuation)) {
  if (grams_.cross.rows() != states_.cols()) {
    throw std::invalid_argument("cross-Gram rows must match sample count");
  }
}

Vector StageProblem::Terms(const Matrix& values) const {
  return StageObjectiveTerms(stage_, values, states_, continuation_, *sys_,
                             *cost_);
}

double StageProblem::SampleTerm(int i, const Vector& u) const {
  const Vector x = states_.col(i);
  return (StageCost(stage_, x, u, *cost_) + continuation_(Step(*sys_, x, u))) /
         static_cast<double>(sample_count());
}

StageProblem MakeStageProblem(int t, const LinearSystem& sys,
                              const CostSpec& cost, const KernelPolicy& policy,
                              Matrix states_at_t, double relative_ridge) {
  const auto& dict = policy.stage(t).dictionary;
  GramPair grams;
  grams.gram = GramMatrix(policy.kernel(), dict, 0.0);
  grams.gram.diagonal().array() += ScaledRidge(grams.gram, relative_ridge);
  grams.cross = CrossGram(policy.kernel(), states_at_t, dict);
  return StageProblem(t, sys, cost, std::move(states_at_t), std::move(grams),
                      TailContinuation(sys, cost, policy, t + 1));
}

double ImplicitResidual(const StageProblem& problem, const Matrix& c_new,
                        const Matrix& c_old, double j_new, double j_old,
                        double delta) {
  const auto& g = problem.grams();
  const Matrix v_new = g.cross * c_new;
  const Matrix v_old = g.cross * c_old;
  const Vector d = DiscreteFrechetDerivative(StackValues(v_new),
                                             StackValues(v_old), j_new, j_old);
  const Matrix D = UnstackValues(d, v_new.rows(), v_new.cols());
  return (g.gram * (c_new - c_old) + delta * g.cross.transpose() * D).norm();
}

ImplicitUpdate SolveImplicitUpdate(const StageProblem& problem,
                                   const Matrix& c_old,
                                   const SolverConfig& cfg) {
  const auto& grams = problem.grams();
  const double delta = cfg.learning_rate;
  int evaluations = 1;
  const Matrix values_old = grams.cross * c_old;
  const Vector terms_old = problem.Terms(values_old);
  const double j_old = terms_old.sum();

  Matrix curvature;
  const Matrix grad_values = ValueGradient(problem, values_old, terms_old,
                                           &curvature, &evaluations);
  const Matrix grad_coeffs = grams.cross.transpose() * grad_values;  // M x m

  const Pencil pencil =
      SolvePencil(grams.cross.transpose() * grams.cross, grams.gram);
  // Column k is the coefficient-space gradient projected on eigen-direction k.
  const Matrix projected = grad_coeffs.transpose() * pencil.vectors;  // m x M
  // Rank directions by the decrease a^2 / delta at the root of the local
  // quadratic model -slope a + (curv / 2 + 1 / delta) a^2.
  Eigen::Index best = -1;
  double best_score = 0.0;
  double model_root = 0.0;
  for (Eigen::Index k = 0; k < projected.cols(); ++k) {
    const double s_k = projected.col(k).norm();
    if (!(s_k > 0.0) || !std::isfinite(s_k)) continue;
    const Matrix w = grams.cross * pencil.vectors.col(k) *
                     (projected.col(k) / s_k).transpose();
    const double curv =
        std::max(0.0, (curvature.array() * w.array().square()).sum());
    const double a = s_k / (0.5 * curv + 1.0 / delta);
    const double score = std::isfinite(a) ? a * a : 0.0;
    if (best < 0 || score > best_score) {
      best = k;
      best_score = score;
      model_root = a;
    }
  }
  if (best < 0) {
    return Unmoved(c_old, j_old, evaluations, "stationary");
  }

  // Unit K-norm direction along the chosen eigenvector, downhill.
  const Matrix direction =
      -pencil.vectors.col(best) *
      (projected.col(best) / projected.col(best).norm()).transpose();
  const Matrix value_direction = grams.cross * direction;

  // f(a) = J(c_old + a U) - J(c_old) + a^2 / delta; its positive roots are
  // exactly the nonzero solutions of the implicit update along U.
  // Along U the residual of the implicit equation is (delta / a) |f(a)| ||K U||,
  // so the search can stop once that is safely below inner_tol.
  const double ku_norm = (grams.gram * direction).norm();
  struct Probe {
    double a;
    double f;
    double dj;
  };
  std::vector<Probe> seen;
  bool accurate = false;
  auto f = [&](double a) {
    ++evaluations;
    double dj = kInf;
    try {
      dj = (problem.Terms(values_old + a * value_direction) - terms_old).sum();
    } catch (const DivergenceError&) {
    }
    double out = dj + a * a / delta;
    if (!std::isfinite(out)) out = kInf;
    seen.push_back({a, out, dj});
    if (a > 0.0 && dj < 0.0 &&
        delta / a * std::abs(out) * ku_norm <= 0.25 * cfg.inner_tol) {
      accurate = true;
    }
    return out;
  };

  double lo = model_root;
  double f_lo = f(lo);
  double hi = kInf;
  double f_hi = kInf;
  int halvings = 0;
  while (!(f_lo < 0.0)) {
    if (std::isfinite(f_lo)) {
      hi = lo;
      f_hi = f_lo;
    }
    if (++halvings > kMaxHalvings) {
      return Unmoved(c_old, j_old, evaluations, "no descent");
    }
    lo *= 0.5;
    f_lo = f(lo);
  }
  if (!std::isfinite(hi)) {
    hi = 2.0 * lo;
    f_hi = f(hi);
    int doublings = 0;
    while (f_hi < 0.0) {
      if (++doublings > kMaxDoublings) {
        return Unmoved(c_old, j_old, evaluations, "unbounded descent");
      }
      lo = hi;
      f_lo = f_hi;
      hi *= 2.0;
      f_hi = f(hi);
    }
    // Pull a divergent upper end back until it is finite.
    while (!std::isfinite(f_hi)) {
      hi = 0.5 * (lo + hi);
      f_hi = f(hi);
      if (f_hi < 0.0) {
        lo = hi;
        f_lo = f_hi;
        hi = 2.0 * hi - lo;
        f_hi = kInf;
        if (hi - lo <= 1e-15 * hi) break;
      }
    }
  }

  if (!accurate && std::isfinite(f_hi) && f_hi != 0.0) {
    std::uintmax_t iters = static_cast<std::uintmax_t>(cfg.inner_max_iters);
    boost::math::tools::eps_tolerance<double> bits(50);
    boost::math::tools::toms748_solve(
        f, lo, hi, f_lo, f_hi,
        [&](double x, double y) { return accurate || bits(x, y); }, iters);
  }
  // Best root estimate among all evaluated scales with descent.
  const Probe* pick = nullptr;
  for (const auto& p : seen) {
    if (p.a > 0.0 && std::isfinite(p.f) && p.dj < 0.0 &&
        (pick == nullptr || std::abs(p.f) < std::abs(pick->f))) {
      pick = &p;
    }
  }
  if (pick == nullptr) return Unmoved(c_old, j_old, evaluations, "no descent");

  ImplicitUpdate out;
  out.coefficients = c_old + pick->a * direction;
  out.objective_old = j_old;
  out.objective_new = j_old + pick->dj;
  out.evaluations = evaluations;
  if (!(out.objective_new < j_old)) {
    return Unmoved(c_old, j_old, evaluations, "no descent");
  }
  out.residual = ImplicitResidual(problem, out.coefficients, c_old,
                                  out.objective_new, j_old, delta);
  if (!(out.residual <= cfg.inner_tol)) {
    return Unmoved(c_old, j_old, evaluations, "residual above tolerance");
  }
  const Matrix dc = out.coefficients - c_old;
  out.value_step_sq = (grams.cross * dc).squaredNorm();
  out.rkhs_step_sq = (dc.transpose() * grams.gram * dc).trace();
  out.moved = true;
  return out;
}

void SelectDictionaries(KernelPolicy& policy, const TrajectoryBatch& batch,
                        int dict_size, Rng& rng) {
  for (int t = policy.first_stage(); t < policy.end_stage(); ++t) {
    const Matrix states = batch.StatesAt(t);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(states.cols()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Eigen::Index> chosen;
    for (const auto idx : order) {
      if (static_cast<int>(chosen.size()) == dict_size) break;
      const bool duplicate =
          std::any_of(chosen.begin(), chosen.end(), [&](Eigen::Index c) {
            return (states.col(c) - states.col(idx)).norm() <=
                   1e-12 * (1.0 + states.col(idx).norm());
          });
      if (!duplicate) chosen.push_back(idx);
    }
    Dictionary dict;
    dict.points.resize(states.rows(), static_cast<Eigen::Index>(chosen.size()));
    for (std::size_t j = 0; j < chosen.size(); ++j) {
      dict.points.col(static_cast<Eigen::Index>(j)) = states.col(chosen[j]);
    }
    policy.SetDictionary(t, std::move(dict));
  }
}

std::vector<ImplicitUpdate> BackwardSweep(const LinearSystem& sys,
                                          const CostSpec& cost,
                                          KernelPolicy& policy,
                                          const TrajectoryBatch& batch,
                                          const SolverConfig& cfg) {
  std::vector<ImplicitUpdate> updates(
      static_cast<std::size_t>(policy.num_stages()));
  for (int t = policy.end_stage() - 1; t >= policy.first_stage(); --t) {
    auto& slot = updates[static_cast<std::size_t>(t - policy.first_stage())];
    if (policy.stage(t).dictionary.empty()) {
      slot = Unmoved(policy.stage(t).coefficients, 0.0, 0, "empty dictionary");
      continue;
    }
    const StageProblem problem =
        MakeStageProblem(t, sys, cost, policy, batch.StatesAt(t), cfg.ridge);
    slot = SolveImplicitUpdate(problem, policy.stage(t).coefficients, cfg);
    if (slot.moved) policy.SetCoefficients(t, slot.coefficients);
  }
  return updates;
}

PolicyIterationResult ImprovePolicy(const LinearSystem& sys,
                                    const CostSpec& cost, KernelPolicy policy,
                                    const std::vector<Vector>& x0_batch,
                                    const SolverConfig& cfg,
                                    const IterationCallback& on_iteration) {
  cfg.Validate();
  PolicyIterationResult result;
  result.x0_batch = x0_batch;
  try {
    TrajectoryBatch batch = Rollout(sys, policy, x0_batch);
    double cost_now = EvaluateCostToGo(batch, cost).InitialMean();
    result.initial_cost = cost_now;
    result.final_cost = cost_now;
    for (int k = 0; k < cfg.max_outer_iters; ++k) {
      const auto start = std::chrono::steady_clock::now();
      const auto updates = BackwardSweep(sys, cost, policy, batch, cfg);
      batch = Rollout(sys, policy, x0_batch);
      IterationRecord rec;
      rec.iteration = k;
      rec.cost_before = cost_now;
      rec.cost = EvaluateCostToGo(batch, cost).InitialMean();
      for (const auto& u : updates) {
        rec.step_norms.push_back(std::sqrt(u.value_step_sq));
        rec.sum_step_sq += u.value_step_sq;
        rec.sum_rkhs_step_sq += u.rkhs_step_sq;
        rec.inner_iterations.push_back(u.evaluations);
        if (!u.moved) ++rec.fallbacks;
      }
      rec.wall_seconds = Seconds(start);
      cost_now = rec.cost;
      result.final_cost = cost_now;
      result.history.push_back(rec);
      if (on_iteration) on_iteration(rec);
      if (rec.sum_step_sq < cfg.convergence_tol * (1.0 + std::abs(cost_now))) {
        break;
      }
    }
  } catch (const DivergenceError& e) {
    result.diverged = true;
    result.message = e.what();
  }
  result.policy = std::move(policy);
  return result;
}

PolicyIterationResult PolicyIteration(const LinearSystem& sys,
                                      const CostSpec& cost, int horizon,
                                      const std::vector<Vector>& x0_batch,
                                      KernelSpec kernel,
                                      const SolverConfig& cfg,
                                      const IterationCallback& on_iteration) {
  cfg.Validate();
  sys.Validate();
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (x0_batch.empty()) throw std::invalid_argument("empty initial batch");
  if (kernel.family == KernelFamily::kGaussianRbf &&
      !(kernel.length_scale > 0.0)) {
    Matrix x0(sys.state_dim(), static_cast<Eigen::Index>(x0_batch.size()));
    for (std::size_t i = 0; i < x0_batch.size(); ++i) {
      x0.col(static_cast<Eigen::Index>(i)) = x0_batch[i];
    }
    kernel.length_scale = MedianPairwiseDistance(x0, 1.0);
  }
  kernel.Validate();
  KernelPolicy policy(kernel, 0, sys.state_dim(), sys.input_dim(), horizon);
  PolicyIterationResult result;
  try {
    const TrajectoryBatch zero_batch = Rollout(sys, policy, x0_batch);
    Rng rng = MakeStream(cfg.seed, RandomStream::kDictionary);
    SelectDictionaries(policy, zero_batch, cfg.dict_size, rng);
  } catch (const DivergenceError& e) {
    result.policy = policy;
    result.x0_batch = x0_batch;
    result.diverged = true;
    result.message = e.what();
    return result;
  }
  return ImprovePolicy(sys, cost, std::move(policy), x0_batch, cfg,
                       on_iteration);
}

PolicyIterationResult PolicyIteration(const LinearSystem& sys,
                                      const CostSpec& cost, int horizon,
                                      const InitialStateSampler& sampler,
                                      KernelSpec kernel,
                                      const SolverConfig& cfg,
                                      const IterationCallback& on_iteration) {
  Rng rng = MakeStream(cfg.seed, RandomStream::kSampling);
  return PolicyIteration(sys, cost, horizon, sampler(rng, cfg.mc_samples),
                         kernel, cfg, on_iteration);
}

std::vector<ProbePoint> ComplexityProbe(
    const std::function<ProbeProblem(int horizon)>& make_problem,
    const std::vector<int>& samples, const std::vector<int>& dict_sizes,
    const std::vector<int>& horizons, const KernelSpec& kernel,
    SolverConfig cfg, int iterations) {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  std::vector<ProbePoint> table;
  cfg.max_outer_iters = iterations;
  cfg.convergence_tol = 0.0;
  for (const int horizon : horizons) {
    const ProbeProblem problem = make_problem(horizon);
    for (const int n : samples) {
      for (const int m : dict_sizes) {
        cfg.mc_samples = n;
        cfg.dict_size = m;
        const auto run = PolicyIteration(problem.sys, problem.cost, horizon,
                                         problem.sampler, kernel, cfg);
        ProbePoint p;
        p.samples = n;
        p.dict_size = m;
        p.horizon = horizon;
        p.iterations = static_cast<int>(run.history.size());
        double total = 0.0;
        for (const auto& rec : run.history) total += rec.wall_seconds;
        p.seconds_per_iteration =
            run.history.empty() ? 0.0 : total / run.history.size();
        table.push_back(p);
      }
    }
  }
  return table;
}

}  // namespace kpi
