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
#include <random>

#include <gtest/gtest.h>

namespace kpi {
namespace {

CollisionSpec Collision(double dd, double soft) {
  CollisionSpec c;
  c.safety_distance = dd;
  c.softening = soft;
  return c;
}

CostSpec Quadratic(int n, int m) {
  return CostSpec{Matrix::Identity(n, n), Matrix::Identity(m, m),
                  Matrix::Identity(n, n), {}, {}};
}

TEST(CollisionPenaltyTest, SingleVehicleIsZero) {
  EXPECT_EQ(CollisionPenalty(Matrix::Zero(2, 1), Collision(2.0, 0.1)), 0.0);
}

TEST(CollisionPenaltyTest, CoincidentVehicles) {
  EXPECT_DOUBLE_EQ(CollisionPenalty(Matrix::Zero(2, 2), Collision(1.0, 0.1)), 10.0);
}

TEST(CollisionPenaltyTest, TwoMetersApart) {
  const Matrix p{{0.0, 2.0}, {0.0, 0.0}};
  EXPECT_NEAR(CollisionPenalty(p, Collision(1.0, 0.1)), 1.0 / 4.1, 1e-15);
}

TEST(CollisionPenaltyTest, PairCountAndPermutationInvariance) {
  // Far-apart identical spacing so each pair contributes a known amount.
  const Matrix p = Matrix::Zero(2, 5);
  const double per_pair = 4.0 / 0.1;
  EXPECT_NEAR(CollisionPenalty(p, Collision(2.0, 0.1)), 10 * per_pair, 1e-12);
  Matrix q = Matrix::Random(2, 5) * 5.0;
  const double base = CollisionPenalty(q, Collision(2.0, 0.1));
  std::vector<int> order{0, 1, 2, 3, 4};
  std::mt19937 rng(3);
  for (int k = 0; k < 10; ++k) {
    std::shuffle(order.begin(), order.end(), rng);
    Matrix r(2, 5);
    for (int j = 0; j < 5; ++j) r.col(j) = q.col(order[j]);
    EXPECT_NEAR(CollisionPenalty(r, Collision(2.0, 0.1)), base, 1e-12);
  }
}

TEST(CollisionPenaltyTest, StrictlyIncreasesAsVehiclesApproach) {
  Matrix p{{0.0, 5.0, 0.0}, {0.0, 0.0, 7.0}};
  double prev = CollisionPenalty(p, Collision(2.0, 0.1));
  for (int k = 0; k < 20; ++k) {
    p(0, 1) *= 0.8;
    const double next = CollisionPenalty(p, Collision(2.0, 0.1));
    EXPECT_GT(next, prev);
    prev = next;
  }
}

TEST(StageCostTest, Examples) {
  const CostSpec spec{Matrix::Identity(2, 2), Matrix::Identity(1, 1),
                      Matrix::Identity(2, 2), {}, {}};
  EXPECT_EQ(StageCost(0, Vector::Zero(2), Vector::Zero(1), spec), 0.0);
  EXPECT_DOUBLE_EQ(StageCost(0, Vector{{1.0, 2.0}}, Vector{{3.0}}, spec), 14.0);
}

TEST(StageCostTest, PenaltyIsAdditive) {
  CostSpec spec = Quadratic(2, 1);
  CollisionSpec c = Collision(2.0, 0.1);
  c.positions = [](int, const Vector&) { return Matrix(Matrix::Zero(2, 2)); };
  spec.psi = MakeCollisionPenalty(c);
  spec.psi_f = spec.psi;
  const Vector x{{1.0, 1.0}};
  EXPECT_DOUBLE_EQ(StageCost(0, x, Vector{{1.0}}, spec), 3.0 + 40.0);
  EXPECT_DOUBLE_EQ(TerminalCost(0, x, spec), 2.0 + 40.0);
}

TEST(TerminalCostTest, Examples) {
  CostSpec spec = Quadratic(2, 1);
  spec.QF = 2.0 * Matrix::Identity(2, 2);
  EXPECT_EQ(TerminalCost(3, Vector::Zero(2), spec), 0.0);
  EXPECT_DOUBLE_EQ(TerminalCost(3, Vector{{1.0, 1.0}}, spec), 4.0);
}

TEST(CostSpecTest, Validation) {
  CostSpec spec = Quadratic(2, 1);
  EXPECT_NO_THROW(spec.Validate());
  spec.R(0, 0) = 0.0;
  EXPECT_THROW(spec.Validate(true), std::invalid_argument);
  spec = Quadratic(2, 1);
  spec.Q = Matrix::Zero(2, 2);
  EXPECT_THROW(spec.Validate(), std::invalid_argument);
  EXPECT_NO_THROW(spec.Validate(true));
  spec.Q(0, 1) = 1.0;
  EXPECT_THROW(spec.Validate(true), std::invalid_argument);
}

class CostToGoTest : public ::testing::Test {
 protected:
  CostToGoTest() {
    sys_ = AssembleTeamSystem({DiscretizeDoubleIntegrator(0.1)});
    spec_ = Quadratic(2, 1);
    spec_.psi = [](int t, const Vector& x) { return 0.1 * t * x.squaredNorm(); };
    law_ = [](int, const Vector& x) { return Vector{{-0.3 * x(0) - 0.5 * x(1)}}; };
  }
  LinearSystem sys_;
  CostSpec spec_;
  FeedbackLaw law_;
};

TEST_F(CostToGoTest, ZeroTrajectoriesHaveZeroValue) {
  CostSpec plain = Quadratic(2, 1);
  const auto b = Rollout(sys_, law_, 0, 4, {Vector::Zero(2)});
  const auto v = EvaluateCostToGo(b, plain);
  EXPECT_TRUE(v.values.isZero(0.0));
}

TEST_F(CostToGoTest, ForwardBackwardAgree) {
  const auto b = Rollout(sys_, law_, 2, 7,
                         {Vector{{1.0, 0.0}}, Vector{{-0.5, 2.0}}, Vector{{3.0, -1.0}}});
  const auto v = EvaluateCostToGo(b, spec_);
  double forward = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double f = ForwardTrajectoryCost(b.states[i], b.controls[i], 2, spec_);
    EXPECT_NEAR(v.values(i, 0), f, 1e-12 * f);
    forward += f;
  }
  forward /= 3.0;
  EXPECT_NEAR(v.InitialMean(), forward, 1e-8 * forward);
  EXPECT_TRUE((v.values.array() >= 0.0).all());
}

TEST_F(CostToGoTest, TailCostMatchesRecursion) {
  KernelPolicy p(KernelSpec{}, 0, 2, 1, 5);
  for (int t = 0; t < 5; ++t) {
    Dictionary d;
    d.points = Matrix::Random(2, 3);
    p.SetDictionary(t, d);
    p.SetCoefficients(t, 0.2 * Matrix::Random(3, 1));
  }
  const Vector x0{{1.0, -1.0}};
  const auto b = Rollout(sys_, p, {x0});
  const auto v = EvaluateCostToGo(b, spec_);
  for (int t = 0; t <= 5; ++t) {
    EXPECT_NEAR(TailCost(sys_, spec_, p, t, b.states[0].col(t)), v.values(0, t), 1e-12);
  }
}

TEST_F(CostToGoTest, StageObjectiveWithZeroEverything) {
  CostSpec plain = Quadratic(2, 1);
  Continuation quad = [&](const Vector& x) { return x.squaredNorm(); };
  GramPair g;
  g.cross = Matrix::Ones(4, 3);
  g.gram = Matrix::Identity(3, 3);
  EXPECT_EQ(EmpiricalStageObjective(0, Matrix::Zero(3, 1), Matrix::Zero(2, 4), quad,
                                    sys_, plain, g),
            0.0);
}

TEST_F(CostToGoTest, StageObjectiveIsMeanOfTerms) {
  Continuation quad = [&](const Vector& x) { return x.squaredNorm(); };
  const Matrix states = Matrix::Random(2, 5);
  const Matrix values = Matrix::Random(5, 1);
  const Vector terms = StageObjectiveTerms(1, values, states, quad, sys_, spec_);
  double expect = 0.0;
  for (int i = 0; i < 5; ++i) {
    const Vector x = states.col(i);
    const Vector u = values.row(i).transpose();
    expect += StageCost(1, x, u, spec_) + Step(sys_, x, u).squaredNorm();
  }
  EXPECT_NEAR(terms.sum(), expect / 5.0, 1e-13);
}

TEST_F(CostToGoTest, DivergentTailNamesSample) {
  Continuation bad = [](const Vector& x) -> double {
    if (x(0) > 1.0) throw DivergenceError(-1, -1, "boom");
    return 0.0;
  };
  const Matrix states{{0.0, 5.0}, {0.0, 0.0}};
  try {
    StageObjectiveTerms(4, Matrix::Zero(2, 1), states, bad, sys_, spec_);
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.sample(), 1);
    EXPECT_EQ(e.stage(), 4);
  }
}

}  // namespace
}  // namespace kpi
