#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridwm/common.hpp"

namespace gridwm {

// ---------------------------------------------------------------------------
// Deterministic 2-d grid driving simulator. Distances are in cell units,
// time in seconds, one control tick = dt seconds.
// ---------------------------------------------------------------------------

enum class Cell : uint8_t { RoadRight = 0, RoadLeft = 1, Marking = 2, OffRoad = 3, Building = 4 };

enum class TerminationCause : uint8_t {
  None = 0,
  Collision,
  WrongDirection,
  OffRoad,
  Stall,
  Destination,
  TimeLimit,
  LaneViolation,
};

std::string to_string(TerminationCause c);

struct Vec2 {
  double x = 0.0, y = 0.0;
};

struct Pose {
  Vec2 pos;
  double heading = 0.0;  // radians, 0 = +x, normalized to (-pi, pi]
};

enum class RouteId : uint8_t { Straight = 0, LeftLoop, RightLoop, TwoTurn };

std::string to_string(RouteId r);
RouteId route_from_string(const std::string& s);

// Waypoint polyline with fixed travel direction. Closed routes end where they
// start; waypoints always lie on road cells.
struct RouteSpec {
  RouteId id;
  std::vector<Vec2> waypoints;
  bool closed = false;
};

// Occupancy grid town. Streets are 7-cell corridors: 3 cells per lane plus a
// center marking line; corridor intersections are plain road with no marking.
class TownMap {
 public:
  static TownMap town_a();
  static TownMap town_b();
  static TownMap load(const std::string& path);
  void save(const std::string& path) const;

  const std::string& id() const { return id_; }
  int width() const { return width_; }
  int height() const { return height_; }
  int lane_width() const { return lane_width_; }

  Cell at(int x, int y) const;  // out of bounds reads as Building
  bool is_road(int x, int y) const;
  bool is_intersection(int x, int y) const;
  // Unit travel direction of the lane containing the cell; empty for
  // markings, intersections, and non-road cells.
  std::optional<Vec2> lane_dir(int x, int y) const;
  // Distance from a continuous position to its lane centerline; 0 inside
  // intersections.
  double lane_center_offset(double x, double y) const;

  const std::vector<Pose>& spawn_points() const { return spawns_; }
  RouteSpec route(RouteId id) const;
  // Number of distinct corridor crossings; differs between towns.
  int intersection_count() const;

 private:
  TownMap() = default;
  void build(const std::vector<int>& v_centers, const std::vector<int>& h_centers);
  void rebuild_derived();

  std::string id_;
  int width_ = 0, height_ = 0;
  int lane_width_ = 3;
  std::vector<Cell> cells_;
  std::vector<int> v_centers_, h_centers_;
  std::map<RouteId, std::vector<Vec2>> route_corners_;
  std::map<RouteId, bool> route_closed_;
  std::vector<Pose> spawns_;
};

// Discrete steer x throttle grid; brake is fixed to zero.
struct Action {
  int index = 0;  // in [0, 9)
  static constexpr int kCount = 9;
  double steer() const;     // {-0.3, 0.0, +0.3}
  double throttle() const;  // {0.0, 0.2, 0.3}
  static Action from_parts(int steer_idx, int throttle_idx);
};

struct EgoState {
  Vec2 pos;
  double heading = 0.0;
  double v = 0.0;      // forward speed, >= 0
  double v_lat = 0.0;  // lateral speed relative to the lane direction
};

struct RewardWeights {
  double progress_bonus = 1.0;
  double speed_scale = 0.1;
  double lane_weight = 1.0;
  double collision_weight = 2.0;
  double destination_bonus = 10.0;
  double time_penalty = 0.01;
  double target_speed = 1.3;  // cells/s
};

struct SimConfig {
  int obs_h = 16, obs_w = 16;
  double dt = 0.1;
  double k_throttle = 10.0 / 3.0;
  double k_drag = 0.5;
  double k_steer = 0.8;
  double v_max = 2.0;
  double stall_threshold = 0.1;  // cells/s
  int stall_steps = 600;
  int wrong_dir_steps = 20;
  int time_limit = 1000;
  double traffic_radius = 18.0;
  double traffic_speed = 1.0;
  double traffic_gap = 2.5;
  double collision_radius = 1.2;
  double waypoint_capture = 1.8;
  // Benchmark density labels mapped to desk-scale vehicle counts.
  std::map<int, int> density_map = {{0, 0}, {5, 2}, {10, 4}, {20, 8}};
};

// Observation channel layout (one-hot semantic image, C x H x W):
//   0..4  cell classes (mutually exclusive)
//   5     ego marker
//   6     traffic vehicles
inline constexpr int kObsChannels = 7;
inline constexpr int kClassChannels = 5;

struct StepResult {
  std::vector<uint8_t> observation;  // kObsChannels * obs_h * obs_w, values {0,1}
  std::map<std::string, double> reward_components;  // empty when rewards disabled
  double total_reward = 0.0;
  bool terminal = false;
  TerminationCause cause = TerminationCause::None;
  int waypoint_index = 0;
};

class Simulator {
 public:
  explicit Simulator(SimConfig cfg) : cfg_(std::move(cfg)) {}

  // When `route` is empty, the ego spawns at a seeded random spawn point.
  // Density uses the benchmark label set {5,10,20} (plus 0 for no traffic).
  std::vector<uint8_t> reset(const TownMap& town, std::optional<RouteId> route, int density,
                             uint64_t tm_seed, uint64_t spawn_seed);

  StepResult step(Action a);

  // Reward components are only computed when enabled; pretraining runs with
  // rewards disabled so no task reward ever exists in that phase.
  void enable_rewards(const RewardWeights& w) { weights_ = w; rewards_enabled_ = true; }
  void disable_rewards() { rewards_enabled_ = false; }

  bool terminal() const { return terminal_; }
  int step_count() const { return step_count_; }
  const EgoState& ego() const { return ego_; }
  EgoState& mutable_ego() { return ego_; }  // scripted-scenario test hook
  int waypoint_index() const { return next_waypoint_; }
  const SimConfig& config() const { return cfg_; }
  double route_progress_cells() const { return progress_cells_; }

  std::vector<uint8_t> render_observation() const;

 private:
  struct TrafficVehicle {
    Vec2 pos;
    Vec2 dir;  // unit cardinal
  };

  void place_traffic(int count, SeededRng& rng);
  void advance_traffic();
  int advance_waypoints();
  TerminationCause adjudicate();
  std::map<std::string, double> reward_components(bool waypoint_advanced,
                                                  TerminationCause cause) const;
  Vec2 next_segment_dir() const;

  SimConfig cfg_;
  const TownMap* town_ = nullptr;
  std::optional<RouteSpec> route_;
  EgoState ego_;
  std::vector<TrafficVehicle> traffic_;
  RewardWeights weights_;
  bool rewards_enabled_ = false;
  bool terminal_ = true;
  int step_count_ = 0;
  int stall_count_ = 0;
  int wrong_dir_count_ = 0;
  int next_waypoint_ = 0;
  int laps_remaining_waypoints_ = 0;
  double progress_cells_ = 0.0;
};

}  // namespace gridwm
