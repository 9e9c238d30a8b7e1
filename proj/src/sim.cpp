#include "gridwm/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gridwm {

namespace {

constexpr int kTownSize = 45;
constexpr int kHalfCorridor = 3;  // lane(3) + marking(1) + lane(3) => center +/- 3
constexpr double kRouteSpacing = 3.0;

double norm_angle(double a) {
  while (a <= -M_PI) a += 2.0 * M_PI;
  while (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

double dist(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// y grows downward; "right of travel direction" is the clockwise rotation.
Vec2 right_of(const Vec2& d) { return {-d.y, d.x}; }

std::vector<Vec2> densify(const std::vector<Vec2>& corners, bool closed) {
  std::vector<Vec2> pts = corners;
  if (closed) pts.push_back(corners.front());
  std::vector<Vec2> out;
  out.push_back(pts.front());
  for (size_t i = 1; i < pts.size(); ++i) {
    const Vec2 a = pts[i - 1], b = pts[i];
    const double len = dist(a, b);
    const int n = std::max(1, static_cast<int>(std::ceil(len / kRouteSpacing)));
    for (int k = 1; k <= n; ++k)
      out.push_back({a.x + (b.x - a.x) * k / n, a.y + (b.y - a.y) * k / n});
  }
  return out;
}

char cell_char(Cell c) {
  switch (c) {
    case Cell::RoadRight: return 'R';
    case Cell::RoadLeft: return 'L';
    case Cell::Marking: return 'M';
    case Cell::OffRoad: return 'O';
    case Cell::Building: return 'B';
  }
  return '?';
}

Cell cell_from_char(char c) {
  switch (c) {
    case 'R': return Cell::RoadRight;
    case 'L': return Cell::RoadLeft;
    case 'M': return Cell::Marking;
    case 'O': return Cell::OffRoad;
    case 'B': return Cell::Building;
  }
  throw IoError(std::string("bad town cell character '") + c + "'");
}

}  // namespace

std::string to_string(TerminationCause c) {
  switch (c) {
    case TerminationCause::None: return "none";
    case TerminationCause::Collision: return "collision";
    case TerminationCause::WrongDirection: return "wrong-direction";
    case TerminationCause::OffRoad: return "off-road";
    case TerminationCause::Stall: return "stall";
    case TerminationCause::Destination: return "destination";
    case TerminationCause::TimeLimit: return "time-limit";
    case TerminationCause::LaneViolation: return "lane-violation";
  }
  return "?";
}

std::string to_string(RouteId r) {
  switch (r) {
    case RouteId::Straight: return "straight";
    case RouteId::LeftLoop: return "left-loop";
    case RouteId::RightLoop: return "right-loop";
    case RouteId::TwoTurn: return "two-turn";
  }
  return "?";
}

RouteId route_from_string(const std::string& s) {
  if (s == "straight") return RouteId::Straight;
  if (s == "left-loop") return RouteId::LeftLoop;
  if (s == "right-loop") return RouteId::RightLoop;
  if (s == "two-turn") return RouteId::TwoTurn;
  throw ConfigError("unknown route: " + s);
}

// ---------------------------------------------------------------------------
// TownMap
// ---------------------------------------------------------------------------

void TownMap::build(const std::vector<int>& v_centers, const std::vector<int>& h_centers) {
  width_ = height_ = kTownSize;
  v_centers_ = v_centers;
  h_centers_ = h_centers;
  cells_.assign(static_cast<size_t>(width_ * height_), Cell::Building);
  auto in_v = [&](int x) {
    for (int c : v_centers_)
      if (std::abs(x - c) <= kHalfCorridor) return c;
    return -1;
  };
  auto in_h = [&](int y) {
    for (int c : h_centers_)
      if (std::abs(y - c) <= kHalfCorridor) return c;
    return -1;
  };
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) {
      const int cv = in_v(x), ch = in_h(y);
      Cell c = Cell::Building;
      if (cv >= 0 && ch >= 0) {
        c = Cell::RoadRight;  // intersection: plain road, no marking
      } else if (ch >= 0) {
        c = y == ch ? Cell::Marking : (y > ch ? Cell::RoadRight : Cell::RoadLeft);
      } else if (cv >= 0) {
        c = x == cv ? Cell::Marking : (x < cv ? Cell::RoadRight : Cell::RoadLeft);
      }
      cells_[static_cast<size_t>(y * width_ + x)] = c;
    }
  // one-cell off-road shoulder around every corridor
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) {
      if (at(x, y) != Cell::Building) continue;
      bool near_road = false;
      for (int dy = -1; dy <= 1 && !near_road; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const Cell n = at(x + dx, y + dy);
          if (n == Cell::RoadRight || n == Cell::RoadLeft || n == Cell::Marking) {
            near_road = true;
            break;
          }
        }
      if (near_road) cells_[static_cast<size_t>(y * width_ + x)] = Cell::OffRoad;
    }
  rebuild_derived();
}

void TownMap::rebuild_derived() {
  spawns_.clear();
  const int lw = lane_width_;  // lane center sits (lw+1)/2 cells from the marking
  const int off = (lw + 1) / 2;
  auto blocked = [&](int x, int y) { return is_intersection(x, y) || !is_road(x, y); };
  for (int ch : h_centers_)
    for (int x = 1; x < width_ - 1; ++x) {
      if (!blocked(x, ch + off))
        spawns_.push_back({{x + 0.5, ch + off + 0.5}, 0.0});  // eastbound
      if (!blocked(x, ch - off))
        spawns_.push_back({{x + 0.5, ch - off + 0.5}, M_PI});  // westbound
    }
  for (int cv : v_centers_)
    for (int y = 1; y < height_ - 1; ++y) {
      if (!blocked(cv - off, y))
        spawns_.push_back({{cv - off + 0.5, y + 0.5}, M_PI / 2});  // southbound
      if (!blocked(cv + off, y))
        spawns_.push_back({{cv + off + 0.5, y + 0.5}, -M_PI / 2});  // northbound
    }
}

Cell TownMap::at(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return Cell::Building;
  return cells_[static_cast<size_t>(y * width_ + x)];
}

bool TownMap::is_road(int x, int y) const {
  const Cell c = at(x, y);
  return c == Cell::RoadRight || c == Cell::RoadLeft;
}

bool TownMap::is_intersection(int x, int y) const {
  bool iv = false, ih = false;
  for (int c : v_centers_) iv = iv || std::abs(x - c) <= kHalfCorridor;
  for (int c : h_centers_) ih = ih || std::abs(y - c) <= kHalfCorridor;
  return iv && ih;
}

std::optional<Vec2> TownMap::lane_dir(int x, int y) const {
  if (!is_road(x, y) || is_intersection(x, y)) return std::nullopt;
  for (int c : h_centers_)
    if (std::abs(y - c) <= kHalfCorridor) {
      if (y == c) return std::nullopt;
      return y > c ? Vec2{1, 0} : Vec2{-1, 0};
    }
  for (int c : v_centers_)
    if (std::abs(x - c) <= kHalfCorridor) {
      if (x == c) return std::nullopt;
      return x < c ? Vec2{0, 1} : Vec2{0, -1};
    }
  return std::nullopt;
}

double TownMap::lane_center_offset(double x, double y) const {
  const int ix = static_cast<int>(std::floor(x)), iy = static_cast<int>(std::floor(y));
  if (is_intersection(ix, iy)) return 0.0;
  const double off = (lane_width_ + 1) / 2 + 0.5;  // continuous offset of lane centerline
  for (int c : h_centers_)
    if (std::abs(iy - c) <= kHalfCorridor) {
      const double east = c + off, west = c + 1 - off;
      return std::min(std::fabs(y - east), std::fabs(y - west));
    }
  for (int c : v_centers_)
    if (std::abs(ix - c) <= kHalfCorridor) {
      const double south = c + 1 - off, north = c + off;
      return std::min(std::fabs(x - south), std::fabs(x - north));
    }
  return 0.0;
}

int TownMap::intersection_count() const {
  return static_cast<int>(v_centers_.size() * h_centers_.size());
}

RouteSpec TownMap::route(RouteId id) const {
  auto it = route_corners_.find(id);
  if (it == route_corners_.end())
    throw ConfigError("town " + id_ + " has no route " + to_string(id));
  const bool closed = route_closed_.at(id);
  return RouteSpec{id, densify(it->second, closed), closed};
}

TownMap TownMap::town_a() {
  TownMap t;
  t.id_ = "Town-A";
  t.build({5, 22, 39}, {5, 22, 39});
  t.route_corners_[RouteId::Straight] = {{9.5, 24.5}, {35.5, 24.5}};
  t.route_closed_[RouteId::Straight] = false;
  t.route_corners_[RouteId::RightLoop] = {
      {12.5, 7.5}, {20.5, 7.5}, {20.5, 20.5}, {7.5, 20.5}, {7.5, 7.5}};
  t.route_closed_[RouteId::RightLoop] = true;
  t.route_corners_[RouteId::LeftLoop] = {
      {3.5, 12.5}, {3.5, 24.5}, {24.5, 24.5}, {24.5, 3.5}, {3.5, 3.5}};
  t.route_closed_[RouteId::LeftLoop] = true;
  t.route_corners_[RouteId::TwoTurn] = {{10.5, 7.5},  {37.5, 7.5},  {37.5, 20.5}, {20.5, 20.5},
                                        {20.5, 37.5}, {7.5, 37.5},  {7.5, 7.5}};
  t.route_closed_[RouteId::TwoTurn] = true;
  return t;
}

TownMap TownMap::town_b() {
  TownMap t;
  t.id_ = "Town-B";
  t.build({5, 39}, {5, 22, 39});
  t.route_corners_[RouteId::Straight] = {{9.5, 24.5}, {35.5, 24.5}};
  t.route_closed_[RouteId::Straight] = false;
  t.route_corners_[RouteId::RightLoop] = {
      {12.5, 7.5}, {37.5, 7.5}, {37.5, 20.5}, {7.5, 20.5}, {7.5, 7.5}};
  t.route_closed_[RouteId::RightLoop] = true;
  t.route_corners_[RouteId::LeftLoop] = {
      {3.5, 12.5}, {3.5, 24.5}, {41.5, 24.5}, {41.5, 3.5}, {3.5, 3.5}};
  t.route_closed_[RouteId::LeftLoop] = true;
  t.route_corners_[RouteId::TwoTurn] = {{12.5, 7.5},  {37.5, 7.5},  {37.5, 20.5},
                                        {3.5, 20.5},  {3.5, 41.5},  {41.5, 41.5},
                                        {41.5, 20.5}, {7.5, 20.5},  {7.5, 7.5}};
  t.route_closed_[RouteId::TwoTurn] = true;
  return t;
}

void TownMap::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write town file: " + path);
  os << "gridwm-town v1\n";
  os << "id " << id_ << "\n";
  os << "size " << width_ << " " << height_ << "\n";
  os << "lane_width " << lane_width_ << "\n";
  os << "v_centers";
  for (int c : v_centers_) os << " " << c;
  os << "\nh_centers";
  for (int c : h_centers_) os << " " << c;
  os << "\ngrid\n";
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) os << cell_char(at(x, y));
    os << "\n";
  }
  for (const auto& [id, corners] : route_corners_) {
    os << "route " << to_string(id) << " " << (route_closed_.at(id) ? "closed" : "open");
    for (const auto& p : corners) os << " " << p.x << "," << p.y;
    os << "\n";
  }
  if (!os) throw IoError("short write on town file: " + path);
}

TownMap TownMap::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read town file: " + path);
  std::string line;
  std::getline(is, line);
  if (line != "gridwm-town v1") throw IoError("bad town file header: " + path);
  TownMap t;
  std::string key;
  is >> key >> t.id_;
  is >> key >> t.width_ >> t.height_;
  is >> key >> t.lane_width_;
  is >> key;  // v_centers
  std::getline(is, line);
  {
    std::istringstream ss(line);
    int c;
    while (ss >> c) t.v_centers_.push_back(c);
  }
  is >> key;  // h_centers
  std::getline(is, line);
  {
    std::istringstream ss(line);
    int c;
    while (ss >> c) t.h_centers_.push_back(c);
  }
  is >> key;  // grid
  t.cells_.resize(static_cast<size_t>(t.width_ * t.height_));
  for (int y = 0; y < t.height_; ++y) {
    is >> line;
    if (static_cast<int>(line.size()) != t.width_) throw IoError("bad grid row in " + path);
    for (int x = 0; x < t.width_; ++x)
      t.cells_[static_cast<size_t>(y * t.width_ + x)] = cell_from_char(line[static_cast<size_t>(x)]);
  }
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag, name, mode;
    ss >> tag >> name >> mode;
    if (tag != "route") throw IoError("bad route line in " + path);
    const RouteId id = route_from_string(name);
    std::vector<Vec2> corners;
    std::string pt;
    while (ss >> pt) {
      const auto comma = pt.find(',');
      corners.push_back({std::stod(pt.substr(0, comma)), std::stod(pt.substr(comma + 1))});
    }
    t.route_corners_[id] = std::move(corners);
    t.route_closed_[id] = mode == "closed";
  }
  t.rebuild_derived();
  return t;
}

// ---------------------------------------------------------------------------
// Action
// ---------------------------------------------------------------------------

double Action::steer() const {
  static constexpr double kSteer[3] = {-0.3, 0.0, 0.3};
  if (index < 0 || index >= kCount) throw ConfigError("action index out of range");
  return kSteer[index / 3];
}

double Action::throttle() const {
  static constexpr double kThrottle[3] = {0.0, 0.2, 0.3};
  if (index < 0 || index >= kCount) throw ConfigError("action index out of range");
  return kThrottle[index % 3];
}

Action Action::from_parts(int steer_idx, int throttle_idx) {
  return Action{steer_idx * 3 + throttle_idx};
}

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

std::vector<uint8_t> Simulator::reset(const TownMap& town, std::optional<RouteId> route,
                                      int density, uint64_t tm_seed, uint64_t spawn_seed) {
  auto it = cfg_.density_map.find(density);
  if (it == cfg_.density_map.end())
    throw ConfigError("traffic density " + std::to_string(density) + " not in configured set");
  town_ = &town;
  route_.reset();
  if (route) {
    route_ = town.route(*route);
    const auto& wp = route_->waypoints;
    ego_.pos = wp[0];
    ego_.heading = std::atan2(wp[1].y - wp[0].y, wp[1].x - wp[0].x);
    next_waypoint_ = 1;
  } else {
    SeededRng srng(spawn_seed);
    const auto& sp = town.spawn_points();
    const Pose p = sp[srng.next_index(sp.size())];
    ego_.pos = p.pos;
    ego_.heading = p.heading;
    next_waypoint_ = 0;
  }
  ego_.v = 0.0;
  ego_.v_lat = 0.0;
  terminal_ = false;
  step_count_ = 0;
  stall_count_ = 0;
  wrong_dir_count_ = 0;
  progress_cells_ = 0.0;
  traffic_.clear();
  SeededRng trng(tm_seed);
  place_traffic(it->second, trng);
  return render_observation();
}

void Simulator::place_traffic(int count, SeededRng& rng) {
  if (count == 0 || town_ == nullptr) return;
  std::vector<Pose> candidates;
  for (const Pose& p : town_->spawn_points()) {
    const double d = dist(p.pos, ego_.pos);
    if (d > 3.0 && d <= cfg_.traffic_radius) candidates.push_back(p);
  }
  while (static_cast<int>(traffic_.size()) < count && !candidates.empty()) {
    const size_t i = rng.next_index(candidates.size());
    const Pose p = candidates[i];
    candidates.erase(candidates.begin() + static_cast<long>(i));
    bool ok = true;
    for (const auto& v : traffic_)
      if (dist(v.pos, p.pos) < 3.0) {
        ok = false;
        break;
      }
    if (ok) traffic_.push_back({p.pos, {std::cos(p.heading), std::sin(p.heading)}});
  }
}

void Simulator::advance_traffic() {
  for (size_t i = 0; i < traffic_.size(); ++i) {
    auto& v = traffic_[i];
    auto ahead = [&](const Vec2& other) {
      const double rx = other.x - v.pos.x, ry = other.y - v.pos.y;
      const double along = rx * v.dir.x + ry * v.dir.y;
      const double lat = std::fabs(-rx * v.dir.y + ry * v.dir.x);
      return along > 0.0 && along <= cfg_.traffic_gap && lat < 1.0;
    };
    bool blocked = ahead(ego_.pos);
    for (size_t j = 0; j < traffic_.size() && !blocked; ++j)
      if (j != i && ahead(traffic_[j].pos)) blocked = true;
    if (!blocked) {
      v.pos.x += cfg_.traffic_speed * cfg_.dt * v.dir.x;
      v.pos.y += cfg_.traffic_speed * cfg_.dt * v.dir.y;
      const double w = town_->width(), h = town_->height();
      v.pos.x = std::fmod(v.pos.x + w, w);
      v.pos.y = std::fmod(v.pos.y + h, h);
    }
  }
}

int Simulator::advance_waypoints() {
  if (!route_) return 0;
  int advanced = 0;
  const auto& wp = route_->waypoints;
  while (next_waypoint_ < static_cast<int>(wp.size()) &&
         dist(ego_.pos, wp[static_cast<size_t>(next_waypoint_)]) < cfg_.waypoint_capture) {
    if (next_waypoint_ >= 1)
      progress_cells_ += dist(wp[static_cast<size_t>(next_waypoint_ - 1)],
                              wp[static_cast<size_t>(next_waypoint_)]);
    ++next_waypoint_;
    ++advanced;
  }
  return advanced;
}

Vec2 Simulator::next_segment_dir() const {
  const auto& wp = route_->waypoints;
  const int n = static_cast<int>(wp.size());
  const int j = std::clamp(next_waypoint_, 1, n - 1);
  const Vec2 a = wp[static_cast<size_t>(j - 1)], b = wp[static_cast<size_t>(j)];
  const double len = dist(a, b);
  return {(b.x - a.x) / len, (b.y - a.y) / len};
}

TerminationCause Simulator::adjudicate() {
  const int ix = static_cast<int>(std::floor(ego_.pos.x));
  const int iy = static_cast<int>(std::floor(ego_.pos.y));
  const Cell cell = town_->at(ix, iy);

  // update streak counters first
  const auto ld = town_->lane_dir(ix, iy);
  if (ld) {
    const double dot = std::cos(ego_.heading) * ld->x + std::sin(ego_.heading) * ld->y;
    wrong_dir_count_ = dot < 0.0 ? wrong_dir_count_ + 1 : 0;
  } else {
    wrong_dir_count_ = 0;
  }
  stall_count_ = ego_.v < cfg_.stall_threshold ? stall_count_ + 1 : 0;

  bool collided = cell == Cell::Building;
  for (const auto& v : traffic_)
    if (dist(v.pos, ego_.pos) < cfg_.collision_radius) collided = true;

  // first satisfied condition in this fixed order wins
  if (collided) return TerminationCause::Collision;
  if (wrong_dir_count_ >= cfg_.wrong_dir_steps) return TerminationCause::WrongDirection;
  if (cell == Cell::OffRoad) return TerminationCause::OffRoad;
  if (stall_count_ >= cfg_.stall_steps) return TerminationCause::Stall;
  if (route_ && next_waypoint_ >= static_cast<int>(route_->waypoints.size()))
    return TerminationCause::Destination;
  if (step_count_ >= cfg_.time_limit) return TerminationCause::TimeLimit;
  if (cell == Cell::Marking) return TerminationCause::LaneViolation;
  return TerminationCause::None;
}

std::map<std::string, double> Simulator::reward_components(bool waypoint_advanced,
                                                           TerminationCause cause) const {
  std::map<std::string, double> r;
  r["progress"] = waypoint_advanced ? weights_.progress_bonus : 0.0;

  const Vec2 dir = next_segment_dir();
  const double rel = ego_.heading - std::atan2(dir.y, dir.x);
  const double v_fwd = ego_.v * std::cos(rel);
  const double v_lat = ego_.v * std::sin(rel);
  r["speed"] = -weights_.speed_scale *
               (std::fabs(v_fwd - weights_.target_speed) + 2.0 * std::min(std::fabs(v_lat), 0.5));

  const double w = static_cast<double>(town_->lane_width());
  const double d = town_->lane_center_offset(ego_.pos.x, ego_.pos.y);
  const double tol = 0.2 * w, sat = 0.5 * w;
  double lane = 0.0;
  if (d > tol) {
    const double q = (d - tol) / (sat - tol);
    lane = -weights_.lane_weight * std::min(1.0, q * q);
  }
  r["lane"] = lane;

  r["collision"] =
      cause == TerminationCause::Collision ? -weights_.collision_weight * std::fabs(ego_.v) : 0.0;
  r["destination"] = cause == TerminationCause::Destination ? weights_.destination_bonus : 0.0;
  r["time"] = -weights_.time_penalty;
  return r;
}

StepResult Simulator::step(Action a) {
  if (terminal_) throw ContractError("step() after terminal step; call reset()");
  if (town_ == nullptr) throw ContractError("step() before reset()");
  ++step_count_;

  // kinematics (rates are per second, integrated over dt)
  ego_.v = std::clamp(ego_.v + (cfg_.k_throttle * a.throttle() - cfg_.k_drag * ego_.v) * cfg_.dt,
                      0.0, cfg_.v_max);
  ego_.heading = norm_angle(ego_.heading + cfg_.k_steer * a.steer() * ego_.v * cfg_.dt);
  ego_.pos.x += ego_.v * cfg_.dt * std::cos(ego_.heading);
  ego_.pos.y += ego_.v * cfg_.dt * std::sin(ego_.heading);
  {
    const int ix = static_cast<int>(std::floor(ego_.pos.x));
    const int iy = static_cast<int>(std::floor(ego_.pos.y));
    const auto ld = town_->lane_dir(ix, iy);
    if (ld) {
      const double rel = ego_.heading - std::atan2(ld->y, ld->x);
      ego_.v_lat = ego_.v * std::sin(rel);
    } else {
      ego_.v_lat = 0.0;
    }
  }

  advance_traffic();
  const int advanced = advance_waypoints();
  const TerminationCause cause = adjudicate();

  StepResult res;
  res.terminal = cause != TerminationCause::None;
  res.cause = cause;
  res.waypoint_index = next_waypoint_;
  if (rewards_enabled_) {
    if (!route_) throw ContractError("reward computation requires an attached route");
    res.reward_components = reward_components(advanced > 0, cause);
    for (const auto& [k, v] : res.reward_components) res.total_reward += v;
  }
  res.observation = render_observation();
  terminal_ = res.terminal;
  return res;
}

std::vector<uint8_t> Simulator::render_observation() const {
  const int H = cfg_.obs_h, W = cfg_.obs_w;
  std::vector<uint8_t> obs(static_cast<size_t>(kObsChannels * H * W), 0);
  // snap heading to the nearest cardinal for a grid-aligned front view
  const double c = std::cos(ego_.heading), s = std::sin(ego_.heading);
  Vec2 fwd = std::fabs(c) >= std::fabs(s) ? Vec2{c >= 0 ? 1.0 : -1.0, 0.0}
                                          : Vec2{0.0, s >= 0 ? 1.0 : -1.0};
  const Vec2 rgt = right_of(fwd);
  const int ex = static_cast<int>(std::floor(ego_.pos.x));
  const int ey = static_cast<int>(std::floor(ego_.pos.y));
  auto put = [&](int ch, int r, int col) {
    obs[static_cast<size_t>((ch * H + r) * W + col)] = 1;
  };
  std::vector<std::pair<int, int>> vehicle_cells;
  vehicle_cells.reserve(traffic_.size());
  for (const auto& v : traffic_)
    vehicle_cells.emplace_back(static_cast<int>(std::floor(v.pos.x)),
                               static_cast<int>(std::floor(v.pos.y)));
  for (int r = 0; r < H; ++r)
    for (int col = 0; col < W; ++col) {
      const int fdist = H - 1 - r;
      const int rdist = col - W / 2;
      const int wx = ex + static_cast<int>(fwd.x) * fdist + static_cast<int>(rgt.x) * rdist;
      const int wy = ey + static_cast<int>(fwd.y) * fdist + static_cast<int>(rgt.y) * rdist;
      put(static_cast<int>(town_->at(wx, wy)), r, col);
      for (const auto& [vx, vy] : vehicle_cells)
        if (vx == wx && vy == wy) put(6, r, col);
    }
  put(5, H - 1, W / 2);  // ego marker
  return obs;
}

}  // namespace gridwm
