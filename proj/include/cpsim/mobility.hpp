#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "cpsim/config.hpp"
#include "cpsim/core.hpp"
#include "cpsim/map.hpp"

namespace cpsim {

struct VehicleState {
  int id = 0;
  int lane = 0;
  double s = 0.0;  // longitudinal position along the lane, meters
  Vec2 pos;
  double speed_mps = 0.0;
  double desired_speed_mps = 0.0;
  double heading_deg = 0.0;
  bool equipped = false;

  // pending intersection decision: 0 straight, 1 left, 2 right, -1 undecided
  int turn_decision = -1;
  double decision_at_s = -1.0;

  RngStream turn_rng;
  std::uint64_t stamp = 0;  // last mobility step that processed this vehicle
};

// Speed that keeps the follower at least min_gap behind its leader after one
// step of length dt.
inline double gap_limited_speed(double desired, double gap_m, double min_gap_m, double dt) {
  const double cap = std::max(0.0, (gap_m - min_gap_m) / dt);
  return std::min(desired, cap);
}

class World {
 public:
  using SpawnFn = std::function<void(const VehicleState&)>;
  using DespawnFn = std::function<void(int)>;

  World(const GridMap& map, const MobilityConfig& cfg, std::uint64_t seed)
      : map_(map), cfg_(cfg), seed_(seed), spawn_rng_(seed, Stream::Spawn) {
    lane_index_.resize(map_.lanes.size());
    build_crossings();
  }

  void set_callbacks(SpawnFn on_spawn, DespawnFn on_despawn) {
    on_spawn_ = std::move(on_spawn);
    on_despawn_ = std::move(on_despawn);
  }

  const GridMap& map() const { return map_; }
  const std::map<int, VehicleState>& vehicles() const { return vehicles_; }
  const VehicleState* find(int id) const {
    auto it = vehicles_.find(id);
    return it == vehicles_.end() ? nullptr : &it->second;
  }
  int target_count() const { return target_count_; }
  int pending_respawns() const { return pending_respawns_; }

  double road_km() const { return map_.total_road_length_m() / 1000.0; }
  double lane_km() const { return map_.total_lane_length_m() / 1000.0; }

  // Steady-state vehicle count implied by the configured density.
  int density_target() const {
    const double km =
        cfg_.density_basis == DensityBasis::RoadKm ? road_km() : lane_km();
    return static_cast<int>(std::lround(cfg_.density_veh_per_km * km));
  }

  void spawn_initial() {
    target_count_ = density_target();
    for (int i = 0; i < target_count_; ++i) {
      if (!try_spawn_on_road()) ++pending_respawns_;
    }
    rebuild_spatial();
  }

  void spawn_manual(const std::vector<ManualVehicle>& list) {
    target_count_ = static_cast<int>(list.size());
    for (const auto& mv : list) {
      int lane = nearest_lane(mv.pos, mv.heading_deg);
      const Lane& ln = map_.lanes[lane];
      const double s = ln.vertical ? (ln.direction > 0 ? mv.pos.y : map_.extent() - mv.pos.y)
                                   : (ln.direction > 0 ? mv.pos.x : map_.extent() - mv.pos.x);
      VehicleState v;
      v.id = next_id_++;
      v.lane = lane;
      v.s = std::clamp(s, 0.0, ln.length);
      v.pos = ln.point_at(v.s);
      v.speed_mps = mv.speed_mps;
      v.desired_speed_mps = mv.speed_mps;
      v.heading_deg = ln.heading_deg;
      v.equipped = mv.equipped;
      v.turn_rng = RngStream(seed_, Stream::Mobility, static_cast<std::uint64_t>(v.id));
      insert_vehicle(v);
    }
    rebuild_spatial();
  }

  // Advances every vehicle by dt. Lanes are processed in id order and
  // vehicles front to back so a follower always sees its leader's updated
  // position. Vehicles that leave the map respawn at a random entry within
  // the same step, keeping the population constant.
  void step(double dt) {
    ++stamp_;
    const double max_adv = cfg_.desired_speed_mps * (1.0 + cfg_.speed_spread) * dt;
    for (std::size_t lane = 0; lane < lane_index_.size(); ++lane) {
      auto order = lane_index_[lane];  // copy: mutations below must not disturb it
      std::sort(order.begin(), order.end(),
                [](const auto& a, const auto& b) { return a.first > b.first; });
      for (const auto& [s_snapshot, id] : order) {
        auto it = vehicles_.find(id);
        if (it == vehicles_.end()) continue;
        VehicleState& v = it->second;
        if (v.lane != static_cast<int>(lane) || v.stamp == stamp_) continue;
        v.stamp = stamp_;
        advance_vehicle(v, dt, max_adv);
      }
    }
    int retry = pending_respawns_;
    pending_respawns_ = 0;
    for (int i = 0; i < retry; ++i)
      if (!try_spawn_on_road(true)) ++pending_respawns_;
    rebuild_spatial();
  }

  // Invokes fn(vehicle) for every vehicle within radius of p, ascending id.
  template <typename Fn>
  void for_each_within(const Vec2& p, double radius, Fn&& fn) const {
    const double r2 = radius * radius;
    const int c0x = cell_of(p.x - radius), c1x = cell_of(p.x + radius);
    const int c0y = cell_of(p.y - radius), c1y = cell_of(p.y + radius);
    scratch_ids_.clear();
    for (int cy = c0y; cy <= c1y; ++cy)
      for (int cx = c0x; cx <= c1x; ++cx)
        for (int id : cells_[cy * cells_per_side_ + cx]) scratch_ids_.push_back(id);
    std::sort(scratch_ids_.begin(), scratch_ids_.end());
    for (int id : scratch_ids_) {
      const VehicleState& v = vehicles_.at(id);
      if (dist_sq(v.pos, p) <= r2) fn(v);
    }
  }

  // Smallest longitudinal gap between same-lane neighbours (collision check).
  double min_same_lane_gap() const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& entries : lane_index_) {
      std::vector<double> ss;
      for (const auto& [s, id] : entries) ss.push_back(s);
      std::sort(ss.begin(), ss.end());
      for (std::size_t i = 1; i < ss.size(); ++i) best = std::min(best, ss[i] - ss[i - 1]);
    }
    return best;
  }

  std::uint64_t spawn_count() const { return spawn_count_; }

 private:
  struct Crossing {
    double s = 0.0;
    int cross_road = 0;
    double source_center = 0.0;  // center coordinate of the lane's own road
  };

  void build_crossings() {
    crossings_.resize(map_.lanes.size());
    for (const auto& ln : map_.lanes) {
      const double own_center = map_.roads[ln.road].center;
      std::vector<Crossing> cs;
      for (int i = 0; i < map_.cfg.grid_n; ++i) {
        const double g = map_.grid_coords[i];
        Crossing c;
        c.s = ln.direction > 0 ? g : map_.extent() - g;
        c.cross_road = ln.vertical ? i : map_.cfg.grid_n + i;
        c.source_center = own_center;
        cs.push_back(c);
      }
      std::sort(cs.begin(), cs.end(), [](const Crossing& a, const Crossing& b) {
        return a.s < b.s;
      });
      crossings_[ln.id] = std::move(cs);
    }
  }

  int lane_id_of(int road, int direction, int index) const {
    const int per_road = 2 * map_.cfg.lanes_per_direction;
    const int dir_block = direction > 0 ? 0 : map_.cfg.lanes_per_direction;
    return road * per_road + dir_block + index;
  }

  int nearest_lane(const Vec2& p, double heading_deg) const {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& ln : map_.lanes) {
      if (circular_diff_deg(ln.heading_deg, heading_deg) > 1.0) continue;
      const double lateral = ln.vertical ? std::fabs(p.x - ln.a.x) : std::fabs(p.y - ln.a.y);
      if (lateral < best_d) {
        best_d = lateral;
        best = ln.id;
      }
    }
    return best;
  }

  void insert_vehicle(VehicleState v) {
    lane_index_[v.lane].emplace_back(v.s, v.id);
    int id = v.id;
    vehicles_.emplace(id, std::move(v));
    ++spawn_count_;
    if (on_spawn_) on_spawn_(vehicles_.at(id));
  }

  void index_remove(int lane, int id) {
    auto& e = lane_index_[lane];
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i].second == id) {
        e[i] = e.back();
        e.pop_back();
        return;
      }
    }
  }

  void index_update(int lane, int id, double s) {
    for (auto& entry : lane_index_[lane])
      if (entry.second == id) {
        entry.first = s;
        return;
      }
  }

  double leader_gap(int lane, double s, int self) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [os, oid] : lane_index_[lane])
      if (oid != self && os > s) best = std::min(best, os - s);
    return best;
  }

  double follower_gap(int lane, double s, int self) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [os, oid] : lane_index_[lane])
      if (oid != self && os <= s) best = std::min(best, s - os);
    return best;
  }

  void advance_vehicle(VehicleState& v, double dt, double max_adv) {
    const Lane& ln = map_.lanes[v.lane];
    const double gap = leader_gap(v.lane, v.s, v.id);
    double speed = gap_limited_speed(v.desired_speed_mps, gap, cfg_.min_gap_m, dt);
    double target_s = v.s + speed * dt;

    const Crossing* next = next_crossing(v.lane, v.s);
    const double box_half = map_.road_halfwidth + 1.0;

    // Intersection gate: hold at the stop line while crossing traffic
    // occupies the box, and never enter a box the exit of which is blocked.
    if (next != nullptr) {
      const double stop_line = next->s - box_half;
      if (v.s < stop_line - 1e-9 && target_s >= stop_line) {
        const bool occupied = box_occupied(*next, box_half);
        const bool exit_blocked = gap < 2.0 * box_half + cfg_.min_gap_m;
        if (occupied || exit_blocked) {
          v.s = std::min(target_s, stop_line);
          v.speed_mps = 0.0;
          v.pos = ln.point_at(v.s);
          index_update(v.lane, v.id, v.s);
          return;
        }
      }
    }

    if (next != nullptr && target_s >= next->s) {
      if (v.turn_decision < 0 || v.decision_at_s != next->s) {
        v.turn_decision = static_cast<int>(v.turn_rng.uniform_int(3));
        v.decision_at_s = next->s;
      }
      if (v.turn_decision != 0) {
        const int target_lane = turn_target_lane(v, *next, v.turn_decision == 1);
        const Lane& tl = map_.lanes[target_lane];
        const double entry_s =
            (tl.direction > 0 ? next->source_center : map_.extent() - next->source_center) +
            (target_s - next->s);
        const bool fits = leader_gap(target_lane, entry_s, v.id) >= cfg_.min_gap_m &&
                          follower_gap(target_lane, entry_s, v.id) >=
                              cfg_.min_gap_m + max_adv;
        if (fits && entry_s < tl.length) {
          index_remove(v.lane, v.id);
          v.lane = target_lane;
          v.s = entry_s;
          v.heading_deg = tl.heading_deg;
          v.speed_mps = speed;
          v.pos = tl.point_at(v.s);
          v.turn_decision = -1;
          v.decision_at_s = -1.0;
          lane_index_[target_lane].emplace_back(v.s, v.id);
          return;
        }
        // yield: hold just short of the intersection and retry next step
        const double hold = std::max(v.s, next->s - 0.5);
        v.speed_mps = 0.0;
        v.s = std::min(target_s, hold);
        v.pos = ln.point_at(v.s);
        index_update(v.lane, v.id, v.s);
        return;
      }
      // straight through: crossing consumed
      v.turn_decision = -1;
      v.decision_at_s = -1.0;
    }

    if (target_s >= ln.length) {
      const int id = v.id;
      index_remove(v.lane, id);
      vehicles_.erase(id);
      if (on_despawn_) on_despawn_(id);
      if (!try_spawn_on_road(true)) ++pending_respawns_;
      return;
    }

    v.s = target_s;
    v.speed_mps = speed;
    v.pos = ln.point_at(v.s);
    index_update(v.lane, v.id, v.s);
  }

  const Crossing* next_crossing(int lane, double s) const {
    for (const auto& c : crossings_[lane])
      if (c.s > s + 1e-9) return &c;
    return nullptr;
  }

  // Any crossing-road vehicle within box_half of the crossing center?
  bool box_occupied(const Crossing& c, double box_half) const {
    const int per_road = 2 * map_.cfg.lanes_per_direction;
    const int first = c.cross_road * per_road;
    for (int lane = first; lane < first + per_road; ++lane) {
      const Lane& ln = map_.lanes[lane];
      const double center =
          ln.direction > 0 ? c.source_center : map_.extent() - c.source_center;
      for (const auto& [s, id] : lane_index_[lane])
        if (std::fabs(s - center) <= box_half) return true;
    }
    return false;
  }

  int turn_target_lane(const VehicleState& v, const Crossing& c, bool left) const {
    const Lane& ln = map_.lanes[v.lane];
    int dir;
    if (!ln.vertical) {
      // east: left -> north; west: left -> south
      dir = (ln.direction > 0) == left ? +1 : -1;
    } else {
      // north: left -> west; south: left -> east
      dir = (ln.direction > 0) == left ? -1 : +1;
    }
    return lane_id_of(c.cross_road, dir, ln.index);
  }

  bool try_spawn_on_road(bool entries_only = false) {
    for (int attempt = 0; attempt < 200; ++attempt) {
      const int lane =
          static_cast<int>(spawn_rng_.uniform_int(static_cast<std::uint32_t>(map_.lanes.size())));
      const Lane& ln = map_.lanes[lane];
      const double s = entries_only ? 0.0 : spawn_rng_.uniform(0.0, ln.length);
      if (leader_gap(lane, s, -1) < cfg_.spawn_clearance_m ||
          follower_gap(lane, s, -1) < cfg_.spawn_clearance_m)
        continue;
      VehicleState v;
      v.id = next_id_++;
      v.lane = lane;
      v.s = s;
      v.pos = ln.point_at(s);
      v.heading_deg = ln.heading_deg;
      v.turn_rng = RngStream(seed_, Stream::Mobility, static_cast<std::uint64_t>(v.id));
      v.desired_speed_mps =
          cfg_.desired_speed_mps *
          (1.0 + cfg_.speed_spread * v.turn_rng.uniform(-1.0, 1.0));
      v.speed_mps = v.desired_speed_mps;
      RngStream equip(seed_, Stream::Equip, static_cast<std::uint64_t>(v.id));
      v.equipped = equip.bernoulli(cfg_.penetration);
      insert_vehicle(v);
      return true;
    }
    return false;
  }

  void rebuild_spatial() {
    cell_m_ = 100.0;
    cells_per_side_ = std::max(1, static_cast<int>(std::ceil(map_.extent() / cell_m_)));
    cells_.assign(static_cast<std::size_t>(cells_per_side_) * cells_per_side_, {});
    for (const auto& [id, v] : vehicles_)
      cells_[cell_of(v.pos.y) * cells_per_side_ + cell_of(v.pos.x)].push_back(id);
  }

  int cell_of(double coord) const {
    int c = static_cast<int>(std::floor(coord / cell_m_));
    return std::clamp(c, 0, cells_per_side_ - 1);
  }

  const GridMap& map_;
  MobilityConfig cfg_;
  std::uint64_t seed_;
  RngStream spawn_rng_;
  std::map<int, VehicleState> vehicles_;
  std::vector<std::vector<std::pair<double, int>>> lane_index_;
  std::vector<std::vector<Crossing>> crossings_;
  std::vector<std::vector<int>> cells_;
  mutable std::vector<int> scratch_ids_;
  double cell_m_ = 100.0;
  int cells_per_side_ = 1;
  int next_id_ = 1;
  int target_count_ = 0;
  int pending_respawns_ = 0;
  std::uint64_t stamp_ = 0;
  std::uint64_t spawn_count_ = 0;
  SpawnFn on_spawn_;
  DespawnFn on_despawn_;
};

}  // namespace cpsim
