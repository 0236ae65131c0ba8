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

#include "kpi/dynamics.hpp"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

namespace kpi {
namespace {

TEST(DiscretizeTest, ZeroOrderHoldMatrices) {
  const StateSpace s = DiscretizeDoubleIntegrator(0.1);
  EXPECT_TRUE(s.A.isApprox(Matrix{{1.0, 0.1}, {0.0, 1.0}}));
  EXPECT_NEAR(s.B(0, 0), 0.005, 1e-17);
  EXPECT_NEAR(s.B(1, 0), 0.1, 1e-17);
}

TEST(DiscretizeTest, RejectsNonPositiveStep) {
  EXPECT_THROW(DiscretizeDoubleIntegrator(0.0), std::invalid_argument);
  EXPECT_THROW(DiscretizeDoubleIntegrator(-0.1), std::invalid_argument);
}

TEST(StepTest, FreeDriftAndAcceleration) {
  const LinearSystem sys = AssembleTeamSystem({DiscretizeDoubleIntegrator(0.1)});
  const Vector drift = Step(sys, Vector{{0.0, 1.0}}, Vector{{0.0}});
  EXPECT_NEAR(drift(0), 0.1, 1e-15);
  EXPECT_NEAR(drift(1), 1.0, 1e-15);
  const Vector accel = Step(sys, Vector{{0.0, 1.0}}, Vector{{2.0}});
  EXPECT_NEAR(accel(0), 0.11, 1e-15);
  EXPECT_NEAR(accel(1), 1.2, 1e-15);
}

TEST(StepTest, ZeroAndIdentity) {
  LinearSystem sys{Matrix::Identity(3, 3), Matrix::Zero(3, 1), {1}};
  EXPECT_TRUE(Step(sys, Vector::Zero(3), Vector::Zero(1)).isZero(0.0));
  const Vector x{{1.0, -2.0, 3.0}};
  EXPECT_EQ(Step(sys, x, Vector{{5.0}}), x);
}

TEST(StepTest, DimensionMismatchAndDivergence) {
  LinearSystem sys{Matrix::Identity(2, 2), Matrix::Ones(2, 1), {1}};
  EXPECT_THROW(Step(sys, Vector::Zero(3), Vector::Zero(1)), std::invalid_argument);
  EXPECT_THROW(Step(sys, Vector::Zero(2), Vector{{2e6}}), DivergenceError);
  EXPECT_THROW(
      Step(sys, Vector::Zero(2), Vector{{std::numeric_limits<double>::infinity()}}),
      DivergenceError);
}

TEST(AssembleTest, OneSubsystemUnchanged) {
  const StateSpace s = DiscretizeDoubleIntegrator(0.2);
  const LinearSystem sys = AssembleTeamSystem({s});
  EXPECT_EQ(sys.A, s.A);
  EXPECT_EQ(sys.B, s.B);
  EXPECT_EQ(sys.input_blocks, std::vector<int>{1});
}

TEST(AssembleTest, BlockDiagonalTeam) {
  const StateSpace s = DiscretizeDoubleIntegrator(0.1);
  const LinearSystem sys = AssembleTeamSystem({s, s, s});
  EXPECT_EQ(sys.state_dim(), 6);
  EXPECT_EQ(sys.input_dim(), 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const Matrix blk = sys.A.block(2 * i, 2 * j, 2, 2);
      EXPECT_EQ(blk, i == j ? s.A : Matrix::Zero(2, 2));
      const Matrix bcol = sys.B.block(2 * i, j, 2, 1);
      EXPECT_EQ(bcol, i == j ? s.B : Matrix::Zero(2, 1));
    }
  }
}

TEST(AssembleTest, CommutesWithStepping) {
  const StateSpace a = DiscretizeDoubleIntegrator(0.1);
  const StateSpace b{Matrix::Random(3, 3), Matrix::Random(3, 2)};
  const LinearSystem sys = AssembleTeamSystem({a, b});
  const Vector x = Vector::Random(5);
  const Vector u = Vector::Random(3);
  const Vector joint = Step(sys, x, u);
  const Vector xa = a.A * x.head(2) + a.B * u.head(1);
  const Vector xb = b.A * x.tail(3) + b.B * u.tail(2);
  EXPECT_LT((joint.head(2) - xa).norm(), 1e-14);
  EXPECT_LT((joint.tail(3) - xb).norm(), 1e-14);
}

TEST(RolloutTest, ZeroPolicyFromOriginStaysAtOrigin) {
  const LinearSystem sys = AssembleTeamSystem(
      {DiscretizeDoubleIntegrator(0.1), DiscretizeDoubleIntegrator(0.1)});
  KernelPolicy p(KernelSpec{}, 0, 4, 2, 5);
  const TrajectoryBatch b = Rollout(sys, p, {Vector::Zero(4), Vector::Zero(4)});
  ASSERT_EQ(b.sample_count(), 2);
  for (const auto& xs : b.states) EXPECT_TRUE(xs.isZero(0.0));
  for (const auto& us : b.controls) EXPECT_TRUE(us.isZero(0.0));
}

TEST(RolloutTest, ConsistentWithStep) {
  const LinearSystem sys = AssembleTeamSystem({DiscretizeDoubleIntegrator(0.1)});
  KernelPolicy p(KernelSpec{}, 0, 2, 1, 6);
  for (int t = 0; t < 6; ++t) {
    Dictionary d;
    d.points = Matrix::Random(2, 3);
    p.SetDictionary(t, d);
    p.SetCoefficients(t, Matrix::Random(3, 1));
  }
  const TrajectoryBatch b = Rollout(sys, p, {Vector{{1.0, 0.5}}, Vector{{-2.0, 0.0}}});
  for (int i = 0; i < 2; ++i) {
    for (int t = 0; t < 6; ++t) {
      const Vector next = Step(sys, b.states[i].col(t), b.controls[i].col(t));
      EXPECT_EQ(next, Vector(b.states[i].col(t + 1)));
      EXPECT_EQ(Vector(b.controls[i].col(t)), p.Evaluate(t, b.states[i].col(t)));
    }
  }
}

TEST(RolloutTest, SuperpositionUnderZeroPolicy) {
  const LinearSystem sys = AssembleTeamSystem(
      {DiscretizeDoubleIntegrator(0.1), DiscretizeDoubleIntegrator(0.1)});
  KernelPolicy p(KernelSpec{}, 0, 4, 2, 8);
  const Vector xa = Vector::Random(4);
  const Vector xb = Vector::Random(4);
  const TrajectoryBatch b = Rollout(sys, p, {xa, xb, Vector(xa + xb)});
  EXPECT_LT((b.states[2] - b.states[0] - b.states[1]).norm(), 1e-9);
}

TEST(RolloutTest, DivergenceNamesSampleAndStage) {
  LinearSystem sys{Matrix::Identity(1, 1) * 100.0, Matrix::Zero(1, 1), {1}};
  FeedbackLaw zero = [](int, const Vector&) { return Vector::Zero(1); };
  try {
    Rollout(sys, zero, 0, 10, {Vector{{1.0}}, Vector{{100.0}}});
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.sample(), 0);
    EXPECT_EQ(e.stage(), 3);  // 1e6 is still inside the guard
  }
}

TEST(TrajectoryBatchTest, StatesAtGathersColumns) {
  const LinearSystem sys = AssembleTeamSystem({DiscretizeDoubleIntegrator(0.1)});
  FeedbackLaw zero = [](int, const Vector&) { return Vector::Zero(1); };
  const TrajectoryBatch b = Rollout(sys, zero, 3, 2, {Vector{{0.0, 1.0}}, Vector{{1.0, 0.0}}});
  const Matrix s4 = b.StatesAt(4);
  EXPECT_NEAR(s4(0, 0), 0.1, 1e-15);
  EXPECT_NEAR(s4(0, 1), 1.0, 1e-15);
  EXPECT_THROW(b.StatesAt(2), std::out_of_range);
  EXPECT_THROW(b.StatesAt(6), std::out_of_range);
}

}  // namespace
}  // namespace kpi
