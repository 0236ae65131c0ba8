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

#include "kpi/rls.hpp"

#include <cmath>
#include <stdexcept>

namespace kpi {

RlsState RlsInit(int n, int m, double lambda, double m0_scale,
                 const std::optional<Matrix>& theta0) {
  if (n < 1 || m < 0) throw std::invalid_argument("bad RLS dimensions");
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("forgetting factor must lie in (0, 1]");
  }
  if (!(m0_scale > 0.0)) throw std::invalid_argument("M0 scale must be > 0");
  RlsState s;
  if (theta0) {
    if (theta0->rows() != n || theta0->cols() != n + m) {
      throw std::invalid_argument("initial estimate must be n x (n + m)");
    }
    s.theta_hat = *theta0;
  } else {
    s.theta_hat = Matrix::Zero(n, n + m);
  }
  s.M = m0_scale * Matrix::Identity(n + m, n + m);
  s.sqrt_M = std::sqrt(m0_scale) * Matrix::Identity(n + m, n + m);
  s.lambda = lambda;
  return s;
}

RlsStep RlsUpdate(const RlsState& state, const Vector& x, const Vector& u,
                  const Vector& x_next) {
  const int n = state.state_dim();
  const int m = state.input_dim();
  if (x.size() != n || x_next.size() != n || u.size() != m) {
    throw std::invalid_argument("RLS sample dimensions do not match");
  }
  if (!x.allFinite() || !u.allFinite() || !x_next.allFinite()) {
    throw std::invalid_argument("RLS sample is not finite");
  }
  Vector phi(n + m);
  phi << x, u;
  // Potter square-root form: with M = S S' and a = S' phi, M phi = S a and
  // 1 + phi' M phi = 1 + a'a. Downdating S instead of M keeps the small
  // eigenvalue along phi accurate when M0 is large.
  const Vector a = state.sqrt_M.transpose() * phi;
  const double beta = 1.0 + a.squaredNorm();
  const Vector Sa = state.sqrt_M * a;
  const Vector L = Sa / beta;
  RlsStep out;
  out.residual = x_next - state.theta_hat * phi;
  out.state = state;
  out.state.theta_hat += out.residual * L.transpose();
  // S (I - gamma a a') squares to M - L (M phi)'.
  const double gamma = 1.0 / (beta + std::sqrt(beta));
  out.state.sqrt_M =
      (state.sqrt_M - gamma * Sa * a.transpose()) /
      std::sqrt(state.lambda);
  const Matrix M = out.state.sqrt_M * out.state.sqrt_M.transpose();
  out.state.M = 0.5 * (M + M.transpose());
  ++out.state.step_count;
  return out;
}

Estimate EstimateModel(const RlsState& state) {
  const int n = state.state_dim();
  return {state.theta_hat.leftCols(n), state.theta_hat.rightCols(state.input_dim())};
}

PeWindow::PeWindow(int length, double alpha) : length_(length), alpha_(alpha) {
  if (length < 1) throw std::invalid_argument("PE window must be >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("PE level must be > 0");
}

void PeWindow::Push(const Vector& phi) {
  if (!buffer_.empty() && buffer_.front().size() != phi.size()) {
    throw std::invalid_argument("regressor dimension changed");
  }
  buffer_.push_back(phi);
  if (size() > length_) buffer_.pop_front();
}

PeResult PeCheck(const PeWindow& window) {
  PeResult r;
  if (!window.full()) return r;
  const auto d = window.buffer().front().size();
  Matrix S = Matrix::Zero(d, d);
  for (const auto& phi : window.buffer()) S += phi * phi.transpose();
  r.min_eigenvalue =
      Eigen::SelfAdjointEigenSolver<Matrix>(S, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .minCoeff();
  r.status = r.min_eigenvalue >= window.alpha() ? PeStatus::kSatisfied
                                                : PeStatus::kNotSatisfied;
  return r;
}

}  // namespace kpi
