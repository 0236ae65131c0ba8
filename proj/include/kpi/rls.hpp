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

// Recursive least-squares identification of [A B] from (x, u, x+) samples.

#ifndef KPI_RLS_HPP_
#define KPI_RLS_HPP_

#include <deque>
#include <optional>

#include "kpi/kernel.hpp"

namespace kpi {

struct RlsState {
  Matrix theta_hat;  // n x (n + m), [A_hat B_hat]
  Matrix M;          // (n + m) x (n + m) covariance
  Matrix sqrt_M;     // S with M = S S'
  double lambda = 1.0;
  int step_count = 0;

  int state_dim() const { return static_cast<int>(theta_hat.rows()); }
  int input_dim() const {
    return static_cast<int>(theta_hat.cols() - theta_hat.rows());
  }
};

RlsState RlsInit(int n, int m, double lambda, double m0_scale,
                 const std::optional<Matrix>& theta0 = std::nullopt);

struct RlsStep {
  RlsState state;
  Vector residual;  // a priori, x_next - theta_hat * phi
};

RlsStep RlsUpdate(const RlsState& state, const Vector& x, const Vector& u,
                  const Vector& x_next);

struct Estimate {
  Matrix A;
  Matrix B;
};

Estimate EstimateModel(const RlsState& state);

// Sliding window of the most recent regressors.
class PeWindow {
 public:
  PeWindow(int length, double alpha);

  void Push(const Vector& phi);
  int length() const { return length_; }
  double alpha() const { return alpha_; }
  int size() const { return static_cast<int>(buffer_.size()); }
  bool full() const { return size() == length_; }
  const std::deque<Vector>& buffer() const { return buffer_; }

 private:
  int length_;
  double alpha_;
  std::deque<Vector> buffer_;
};

enum class PeStatus { kSatisfied, kNotSatisfied, kInsufficientData };

struct PeResult {
  PeStatus status = PeStatus::kInsufficientData;
  double min_eigenvalue = 0.0;

  bool satisfied() const { return status == PeStatus::kSatisfied; }
};

PeResult PeCheck(const PeWindow& window);

}  // namespace kpi

#endif  // KPI_RLS_HPP_
