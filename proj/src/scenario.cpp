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

#include "kpi/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace kpi {
namespace {

Eigen::Vector2d RightNormal(const Eigen::Vector2d& heading) {
  return {heading.y(), -heading.x()};
}

}  // namespace

std::string_view VehicleRoleName(VehicleRole role) {
  return role == VehicleRole::kCav ? "cav" : "hdv";
}

VehicleRole ParseVehicleRole(std::string_view name) {
  if (name == "cav") return VehicleRole::kCav;
  if (name == "hdv") return VehicleRole::kHdv;
  throw std::invalid_argument("unknown vehicle role '" + std::string(name) +
                              "' (expected cav or hdv)");
}

std::string_view ApproachName(Approach approach) {
  switch (approach) {
    case Approach::kWest: return "west";
    case Approach::kSouth: return "south";
    case Approach::kEast: return "east";
    case Approach::kNorth: return "north";
  }
  return "west";
}

Approach ParseApproach(std::string_view name) {
  if (name == "west") return Approach::kWest;
  if (name == "south") return Approach::kSouth;
  if (name == "east") return Approach::kEast;
  if (name == "north") return Approach::kNorth;
  throw std::invalid_argument("unknown approach '" + std::string(name) +
                              "' (expected west, south, east or north)");
}

Eigen::Vector2d ApproachHeading(Approach approach) {
  switch (approach) {
    case Approach::kWest: return {1.0, 0.0};
    case Approach::kSouth: return {0.0, 1.0};
    case Approach::kEast: return {-1.0, 0.0};
    case Approach::kNorth: return {0.0, -1.0};
  }
  return {1.0, 0.0};
}

int ScenarioParams::cav_count() const {
  int n = 0;
  for (const auto& v : vehicles) n += v.role == VehicleRole::kCav ? 1 : 0;
  return n;
}

int ScenarioParams::hdv_count() const {
  return static_cast<int>(vehicles.size()) - cav_count();
}

void ScenarioParams::Validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("scenario.dt must be > 0");
  if (!(intersection_length > 0.0)) {
    throw std::invalid_argument("scenario.intersection_length must be > 0");
  }
  if (!(safety_distance > 0.0)) {
    throw std::invalid_argument("scenario.safety_distance must be > 0");
  }
  if (!(softening > 0.0)) {
    throw std::invalid_argument("scenario.softening must be > 0");
  }
  if (!(q_position > 0.0) || !(q_speed > 0.0) || !(r_accel > 0.0) ||
      !(terminal_scale > 0.0)) {
    throw std::invalid_argument("scenario weights must be > 0");
  }
  if (cav_count() < 1) {
    throw std::invalid_argument("scenario needs at least one cav");
  }
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    const auto& v = vehicles[i];
    const std::string at = "scenario.vehicles[" + std::to_string(i) + "]";
    if (!(v.offset_spread >= 0.0) || !(v.speed_min <= v.speed_max)) {
      throw std::invalid_argument(at + ": empty initial box");
    }
    if (v.entry_offset - v.offset_spread <= 0.5 * intersection_length) {
      throw std::invalid_argument(
          at + ": initial positions must lie upstream of the conflict region");
    }
    if (v.role == VehicleRole::kHdv && !(v.hdv_gain >= 0.0)) {
      throw std::invalid_argument(at + ".hdv_gain must be >= 0");
    }
  }
}

std::vector<VehicleSpec> DefaultVehicles(int n_cav, int n_hdv) {
  static constexpr Approach kOrder[] = {Approach::kWest, Approach::kSouth,
                                        Approach::kEast, Approach::kNorth};
  std::vector<VehicleSpec> out;
  for (int i = 0; i < n_cav; ++i) {
    VehicleSpec v;
    v.approach = kOrder[i % 4];
    out.push_back(v);
  }
  for (int i = 0; i < n_hdv; ++i) {
    VehicleSpec v;
    v.role = VehicleRole::kHdv;
    v.approach = kOrder[(i + 2) % 4];
    out.push_back(v);
  }
  return out;
}

Scenario::Scenario(ScenarioParams params) : params_(std::move(params)) {
  params_.Validate();
  for (const auto& [i, j] : Pairs()) {
    const auto hi = ApproachHeading(params_.vehicles[i].approach);
    const auto hj = ApproachHeading(params_.vehicles[j].approach);
    if (std::abs(hi.x() * hj.y() - hi.y() * hj.x()) < 1e-12) {
      warnings_.push_back("vehicles " + std::to_string(i) + " and " +
                          std::to_string(j) + " travel on parallel paths");
    }
  }
}

double Scenario::ReferenceArcLength(int vehicle, int stage) const {
  const auto& v = params_.vehicles.at(static_cast<std::size_t>(vehicle));
  return -v.entry_offset + params_.reference_speed * params_.dt * stage;
}

Matrix Scenario::Positions(int stage, const Vector& x) const {
  if (x.size() != state_dim()) {
    throw std::invalid_argument("state does not match scenario");
  }
  Matrix p(2, vehicle_count());
  for (int i = 0; i < vehicle_count(); ++i) {
    const auto h = ApproachHeading(params_.vehicles[i].approach);
    const double s = ReferenceArcLength(i, stage) + x(2 * i);
    p.col(i) = s * h + params_.lane_offset * RightNormal(h);
  }
  return p;
}

Vector Scenario::Speeds(const Vector& x) const {
  Vector v(vehicle_count());
  for (int i = 0; i < vehicle_count(); ++i) {
    v(i) = params_.reference_speed + x(2 * i + 1);
  }
  return v;
}

Vector Scenario::Accelerations(const Vector& x, const Vector& u) const {
  Vector a(vehicle_count());
  int k = 0;
  for (int i = 0; i < vehicle_count(); ++i) {
    const auto& v = params_.vehicles[i];
    a(i) = v.role == VehicleRole::kCav ? u(k++) : -v.hdv_gain * x(2 * i + 1);
  }
  return a;
}

PositionExtractor Scenario::position_map() const {
  return [self = *this](int stage, const Vector& x) {
    return self.Positions(stage, x);
  };
}

std::vector<std::pair<int, int>> Scenario::Pairs() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < vehicle_count(); ++i) {
    for (int j = i + 1; j < vehicle_count(); ++j) out.emplace_back(i, j);
  }
  return out;
}

IntersectionModel BuildIntersection(const ScenarioParams& params) {
  IntersectionModel model;
  model.scenario = Scenario(params);
  for (const auto& w : model.scenario.warnings()) {
    std::cerr << "warning: " << w << "\n";
  }
  const StateSpace di = DiscretizeDoubleIntegrator(params.dt);
  std::vector<StateSpace> learner_blocks;
  std::vector<StateSpace> plant_blocks;
  for (const auto& v : params.vehicles) {
    if (v.role == VehicleRole::kCav) {
      learner_blocks.push_back(di);
      plant_blocks.push_back(di);
    } else {
      const Matrix no_input(2, 0);
      learner_blocks.push_back({di.A, no_input});
      // Acceleration -gain * speed error held over the step.
      Matrix a = di.A - di.B * Matrix{{0.0, v.hdv_gain}};
      plant_blocks.push_back({a, no_input});
    }
  }
  model.learner = AssembleTeamSystem(learner_blocks);
  model.plant = AssembleTeamSystem(plant_blocks);
  model.learner.input_blocks.erase(
      std::remove(model.learner.input_blocks.begin(),
                  model.learner.input_blocks.end(), 0),
      model.learner.input_blocks.end());
  model.plant.input_blocks = model.learner.input_blocks;

  const int n = model.scenario.state_dim();
  const int m = model.scenario.input_dim();
  model.cost.Q = Matrix::Zero(n, n);
  for (int i = 0; i < model.scenario.vehicle_count(); ++i) {
    model.cost.Q(2 * i, 2 * i) = params.q_position;
    model.cost.Q(2 * i + 1, 2 * i + 1) = params.q_speed;
  }
  model.cost.R = params.r_accel * Matrix::Identity(m, m);
  model.cost.QF = params.terminal_scale * model.cost.Q;
  if (model.scenario.vehicle_count() > 1) {
    CollisionSpec collision;
    collision.safety_distance = params.safety_distance;
    collision.softening = params.softening;
    collision.positions = model.scenario.position_map();
    model.cost.psi = MakeCollisionPenalty(collision);
    model.cost.psi_f = model.cost.psi;
  }
  return model;
}

std::vector<Vector> SampleInitialStates(const Scenario& scenario, Rng& rng,
                                        int count) {
  if (count < 1) throw std::invalid_argument("sample count must be >= 1");
  const auto& p = scenario.params();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Vector x(scenario.state_dim());
    for (int i = 0; i < scenario.vehicle_count(); ++i) {
      const auto& v = p.vehicles[i];
      // Draw order is fixed: distance, then speed.
      const double d = v.entry_offset - v.offset_spread +
                       2.0 * v.offset_spread * unit(rng);
      const double s = v.speed_min + (v.speed_max - v.speed_min) * unit(rng);
      x(2 * i) = v.entry_offset - d;
      x(2 * i + 1) = s - p.reference_speed;
    }
    out.push_back(x);
  }
  return out;
}

Matrix PairwiseDistances(const Scenario& scenario, const Matrix& states,
                         int first_stage) {
  const auto pairs = scenario.Pairs();
  Matrix d(static_cast<Eigen::Index>(pairs.size()), states.cols());
  for (Eigen::Index k = 0; k < states.cols(); ++k) {
    const Matrix p = scenario.Positions(first_stage + static_cast<int>(k),
                                        states.col(k));
    for (std::size_t r = 0; r < pairs.size(); ++r) {
      d(static_cast<Eigen::Index>(r), k) =
          (p.col(pairs[r].first) - p.col(pairs[r].second)).norm();
    }
  }
  return d;
}

double MinPairwiseDistance(const Scenario& scenario, const Matrix& states,
                           int first_stage) {
  const Matrix d = PairwiseDistances(scenario, states, first_stage);
  return d.size() == 0 ? std::numeric_limits<double>::infinity()
                       : d.minCoeff();
}

}  // namespace kpi
