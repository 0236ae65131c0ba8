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

// Finite-horizon LQR by backward Riccati recursion. Serves as ground truth
// for the learned policies when the nonlinear penalties are off.

#ifndef KPI_RICCATI_HPP_
#define KPI_RICCATI_HPP_

#include <vector>

#include "kpi/dynamics.hpp"
#include "kpi/kernel.hpp"

namespace kpi {

struct RiccatiSolution {
  std::vector<Matrix> P;  // T + 1 cost-to-go weights, P[T] = QF
  std::vector<Matrix> K;  // T gains, u_t = -K[t] x_t

  int horizon() const { return static_cast<int>(K.size()); }
};

RiccatiSolution RiccatiBackward(const LinearSystem& sys, const Matrix& Q,
                                const Matrix& R, const Matrix& QF,
                                int horizon);

// Mean of x0' P0 x0 over the batch.
double LqrCost(const RiccatiSolution& sol, const std::vector<Vector>& x0_batch);

// Quadratic cost of u = -K x summed along a simulated trajectory.
double SimulatedLqrCost(const LinearSystem& sys, const Matrix& Q,
                        const Matrix& R, const Matrix& QF,
                        const std::vector<Matrix>& gains, const Vector& x0);

}  // namespace kpi

#endif  // KPI_RICCATI_HPP_
