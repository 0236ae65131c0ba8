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

#include "kpi/riccati.hpp"

#include <stdexcept>

namespace kpi {

RiccatiSolution RiccatiBackward(const LinearSystem& sys, const Matrix& Q,
                                const Matrix& R, const Matrix& QF,
                                int horizon) {
  sys.Validate();
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  if (horizon < 0) throw std::invalid_argument("horizon must be >= 0");
  if (Q.rows() != n || Q.cols() != n || QF.rows() != n || QF.cols() != n) {
    throw std::invalid_argument("Q and QF must be n x n");
  }
  if (R.rows() != m || R.cols() != m) {
    throw std::invalid_argument("R must be m x m");
  }
  if (Eigen::LLT<Matrix>(R).info() != Eigen::Success) {
    throw std::invalid_argument("R must be positive definite");
  }
  RiccatiSolution sol;
  sol.P.assign(static_cast<std::size_t>(horizon) + 1, Matrix());
  sol.K.assign(static_cast<std::size_t>(horizon), Matrix());
  sol.P.back() = QF;
  for (int t = horizon - 1; t >= 0; --t) {
    const Matrix& next = sol.P[static_cast<std::size_t>(t) + 1];
    const Matrix S = R + sys.B.transpose() * next * sys.B;
    const Matrix BtPA = sys.B.transpose() * next * sys.A;
    Eigen::LDLT<Matrix> ldlt(S);
    Matrix K = ldlt.solve(BtPA);
    Matrix P = Q + sys.A.transpose() * next * sys.A - BtPA.transpose() * K;
    sol.P[static_cast<std::size_t>(t)] = 0.5 * (P + P.transpose());
    sol.K[static_cast<std::size_t>(t)] = std::move(K);
  }
  return sol;
}

double LqrCost(const RiccatiSolution& sol, const std::vector<Vector>& x0_batch) {
  if (x0_batch.empty()) return 0.0;
  double total = 0.0;
  for (const auto& x : x0_batch) total += x.dot(sol.P.front() * x);
  return total / static_cast<double>(x0_batch.size());
}

double SimulatedLqrCost(const LinearSystem& sys, const Matrix& Q,
                        const Matrix& R, const Matrix& QF,
                        const std::vector<Matrix>& gains, const Vector& x0) {
  Vector x = x0;
  double total = 0.0;
  for (const auto& K : gains) {
    const Vector u = -K * x;
    total += x.dot(Q * x) + u.dot(R * u);
    x = sys.A * x + sys.B * u;
  }
  return total + x.dot(QF * x);
}

}  // namespace kpi
