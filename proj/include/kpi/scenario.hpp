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

// Straight-road intersection with controlled and human-driven vehicles.
//
// Each vehicle moves along a straight line through the crossing. Its state is
// (position error, speed error) relative to a constant-speed reference that
// starts `entry_offset` meters before the crossing, so the stacked dynamics
// stay linear and the position map depends on the stage.

#ifndef KPI_SCENARIO_HPP_
#define KPI_SCENARIO_HPP_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kpi/cost.hpp"
#include "kpi/dynamics.hpp"
#include "kpi/random.hpp"

namespace kpi {

enum class VehicleRole { kCav, kHdv };

std::string_view VehicleRoleName(VehicleRole role);
VehicleRole ParseVehicleRole(std::string_view name);

// Side of the crossing a vehicle comes from.
enum class Approach { kWest, kSouth, kEast, kNorth };

std::string_view ApproachName(Approach approach);
Approach ParseApproach(std::string_view name);
Eigen::Vector2d ApproachHeading(Approach approach);

struct VehicleSpec {
  VehicleRole role = VehicleRole::kCav;
  Approach approach = Approach::kWest;
  double entry_offset = 20.0;   // reference distance to the crossing at t=0
  double offset_spread = 2.0;   // initial distance box half-width
  double speed_min = 8.0;
  double speed_max = 12.0;
  double hdv_gain = 0.8;        // hidden speed feedback, HDV only
};

struct ScenarioParams {
  double dt = 0.1;
  double intersection_length = 10.0;
  double safety_distance = 2.0;
  double softening = 0.1;
  double reference_speed = 10.0;
  double lane_offset = 0.0;  // to the right of the travel direction
  double q_position = 0.01;
  double q_speed = 1.0;
  double r_accel = 0.1;
  double terminal_scale = 1.0;
  std::vector<VehicleSpec> vehicles;

  int cav_count() const;
  int hdv_count() const;
  void Validate() const;
};

// CAVs alternate W, S, E, N; HDVs start from E.
std::vector<VehicleSpec> DefaultVehicles(int n_cav, int n_hdv);

class Scenario {
 public:
  Scenario() = default;
  explicit Scenario(ScenarioParams params);

  const ScenarioParams& params() const { return params_; }
  int vehicle_count() const { return static_cast<int>(params_.vehicles.size()); }
  int state_dim() const { return 2 * vehicle_count(); }
  int input_dim() const { return params_.cav_count(); }
  const std::vector<std::string>& warnings() const { return warnings_; }

  // Reference arc length of vehicle i at a stage; zero is the crossing.
  double ReferenceArcLength(int vehicle, int stage) const;
  // 2 x V positions of all vehicles.
  Matrix Positions(int stage, const Vector& x) const;
  Vector Speeds(const Vector& x) const;
  // Per-vehicle accelerations under the plant, CAV inputs from `u`.
  Vector Accelerations(const Vector& x, const Vector& u) const;
  PositionExtractor position_map() const;

  std::vector<std::pair<int, int>> Pairs() const;

 private:
  ScenarioParams params_;
  std::vector<std::string> warnings_;
};

struct IntersectionModel {
  Scenario scenario;
  LinearSystem learner;  // HDVs as free double integrators
  LinearSystem plant;    // HDV speed feedback included
  CostSpec cost;
};

IntersectionModel BuildIntersection(const ScenarioParams& params);

// N stacked initial states from the per-vehicle boxes.
std::vector<Vector> SampleInitialStates(const Scenario& scenario, Rng& rng,
                                        int count);

// Rows follow Scenario::Pairs(), columns are stages first_stage.. of `states`.
Matrix PairwiseDistances(const Scenario& scenario, const Matrix& states,
                         int first_stage);

double MinPairwiseDistance(const Scenario& scenario, const Matrix& states,
                           int first_stage);

}  // namespace kpi

#endif  // KPI_SCENARIO_HPP_
