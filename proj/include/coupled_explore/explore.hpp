#pragma once

// Frontier-driven exploration: frontier clustering, A* candidate plans, noise
// free rollouts that score each plan by predicted map entropy reduction, and
// the live execute-and-update loop.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <queue>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "coupled_explore/entropy.hpp"
#include "coupled_explore/geometry.hpp"
#include "coupled_explore/grid_map.hpp"
#include "coupled_explore/localization.hpp"
#include "coupled_explore/sensor.hpp"
#include "coupled_explore/sim.hpp"
#include "coupled_explore/tbayesmap.hpp"

namespace coupled_explore {

struct DecisionConfig {
  EntropySpec entropy{EntropySpec::behavioral(1.0)};
  double gamma{1.2};
  int min_cluster_size{5};
  double free_threshold{0.35};
  double occ_threshold{0.65};
  int h_max{400};
  int rollout_scan_stride{5};
  double inflation_radius{0.3};
  double v_nom{1.0};
  double lookahead{0.6};
  double omega_max{2.0};
  int waypoint_spacing{5};
  double unknown_cost{2.0};
  double goal_tolerance{0.3};
  int replan_interval{50};
  int backoff_steps{15};      // reverse steps after a collision
  double backoff_speed{0.3};  // m/s
  std::size_t rollout_beam_stride{1};
  unsigned workers{1};

  void validate() const {
    if (!(0.0 < free_threshold && free_threshold < 0.5 && 0.5 < occ_threshold && occ_threshold < 1.0))
      throw std::invalid_argument("DecisionConfig: need 0 < free_threshold < 0.5 < occ_threshold < 1");
    if (h_max < 1 || rollout_scan_stride < 1 || waypoint_spacing < 1 || replan_interval < 1)
      throw std::invalid_argument("DecisionConfig: step counts must be positive");
    if (min_cluster_size < 1) throw std::invalid_argument("DecisionConfig: min_cluster_size must be >= 1");
    if (!(v_nom > 0.0) || !(lookahead > 0.0) || !(omega_max > 0.0))
      throw std::invalid_argument("DecisionConfig: v_nom, lookahead and omega_max must be positive");
    if (backoff_steps < 0 || backoff_speed < 0.0)
      throw std::invalid_argument("DecisionConfig: backoff parameters must be non-negative");
    if (inflation_radius < 0.0 || unknown_cost < 1.0 || rollout_beam_stride < 1)
      throw std::invalid_argument("DecisionConfig: bad planner parameter");
  }
};

enum class MapModel { inverse, tbayes };

// How a map (live estimate or rollout) is maintained.
struct EstimatorModel {
  LocalizationMode localization{LocalizationMode::coupled};
  MapModel map{MapModel::tbayes};
  bool ignore_pose_cov{false};  // tbayes with Sigma treated as zero
  UpdateOptions update{};
  MapUpdateParams map_params{};
  OdometryNoise noise{};
};

// Applies one scan to `map` under the model's map rule.
inline void apply_map_update(OccupancyGrid& map, const BeamScan& scan, const PoseBelief& belief,
                             const EstimatorModel& model, const SensorSpec& spec,
                             std::size_t beam_stride = 1) {
  if (model.map == MapModel::inverse) {
    apply_inverse_scan(map, scan, belief.mean, model.map_params, spec.z_max, beam_stride);
    return;
  }
  if (model.ignore_pose_cov) {
    PoseBelief certain = belief;
    certain.cov = Mat3::Zero();
    apply_tbayes_scan(map, scan, certain, model.map_params, spec, beam_stride);
  } else {
    apply_tbayes_scan(map, scan, belief, model.map_params, spec, beam_stride);
  }
}

// --- frontiers ----------------------------------------------------------------

enum class CellClass : std::uint8_t { free, unknown, occupied };

inline CellClass classify(double p, const DecisionConfig& cfg) {
  if (p < cfg.free_threshold) return CellClass::free;
  if (p >= cfg.occ_threshold) return CellClass::occupied;
  return CellClass::unknown;
}

struct Frontier {
  std::vector<CellIndex> cells;
  Point2 centroid{};
  CellIndex goal_cell{};
};

inline bool is_frontier_cell(const OccupancyGrid& map, CellIndex c, const DecisionConfig& cfg) {
  if (classify(map.prob(c), cfg) != CellClass::free) return false;
  static constexpr int kN4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (const auto& d : kN4) {
    const CellIndex n{c.row + d[0], c.col + d[1]};
    if (map.contains(n) && classify(map.prob(n), cfg) == CellClass::unknown) return true;
  }
  return false;
}

// Nearest free cell to `from` by breadth-first search over the whole grid.
inline std::optional<CellIndex> nearest_free_cell(const OccupancyGrid& map, CellIndex from,
                                                  const DecisionConfig& cfg,
                                                  const std::vector<std::uint8_t>* blocked = nullptr) {
  std::vector<std::uint8_t> seen(map.size(), 0);
  std::deque<CellIndex> queue{from};
  seen[map.index(from)] = 1;
  static constexpr int kN4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  while (!queue.empty()) {
    const CellIndex c = queue.front();
    queue.pop_front();
    const auto idx = map.index(c);
    if (classify(map.prob(c), cfg) == CellClass::free && (!blocked || !(*blocked)[idx])) return c;
    for (const auto& d : kN4) {
      const CellIndex n{c.row + d[0], c.col + d[1]};
      if (!map.contains(n) || seen[map.index(n)]) continue;
      seen[map.index(n)] = 1;
      queue.push_back(n);
    }
  }
  return std::nullopt;
}

// Frontier cells grouped by 8-connectivity, scanned in storage order so the
// cluster order is deterministic.
inline std::vector<Frontier> extract_frontiers(const OccupancyGrid& map, const DecisionConfig& cfg,
                                               const std::vector<std::uint8_t>* blocked = nullptr) {
  std::vector<std::uint8_t> mark(map.size(), 0);  // 1 = frontier, 2 = assigned
  for (std::size_t i = 0; i < map.size(); ++i)
    if (is_frontier_cell(map, map.cell_at(i), cfg)) mark[i] = 1;

  std::vector<Frontier> out;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (mark[i] != 1) continue;
    Frontier f;
    std::deque<CellIndex> queue{map.cell_at(i)};
    mark[i] = 2;
    while (!queue.empty()) {
      const CellIndex c = queue.front();
      queue.pop_front();
      f.cells.push_back(c);
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const CellIndex n{c.row + dr, c.col + dc};
          if (!map.contains(n) || mark[map.index(n)] != 1) continue;
          mark[map.index(n)] = 2;
          queue.push_back(n);
        }
    }
    if (static_cast<int>(f.cells.size()) < cfg.min_cluster_size) continue;
    std::sort(f.cells.begin(), f.cells.end());
    double sx = 0.0, sy = 0.0;
    for (const auto& c : f.cells) {
      const Point2 p = map.cell_center(c);
      sx += p.x;
      sy += p.y;
    }
    const double n = static_cast<double>(f.cells.size());
    f.centroid = {sx / n, sy / n};
    const CellIndex seed = map.world_to_cell(f.centroid);
    const auto goal = nearest_free_cell(map, seed, cfg, blocked);
    if (!goal) continue;
    f.goal_cell = *goal;
    out.push_back(std::move(f));
  }
  return out;
}

// --- planning -----------------------------------------------------------------

class NoPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cells the planner may not enter: occupied, or within inflation_radius of an
// occupied cell (centre to centre).
inline std::vector<std::uint8_t> inflated_obstacles(const OccupancyGrid& map, const DecisionConfig& cfg) {
  std::vector<std::uint8_t> blocked(map.size(), 0);
  const int reach = static_cast<int>(std::floor(cfg.inflation_radius / map.resolution() + 1e-9));
  std::vector<std::pair<int, int>> disc;
  for (int dr = -reach; dr <= reach; ++dr)
    for (int dc = -reach; dc <= reach; ++dc)
      if (std::hypot(dr, dc) * map.resolution() <= cfg.inflation_radius + 1e-9) disc.emplace_back(dr, dc);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map.probs()[i] < cfg.occ_threshold) continue;
    const CellIndex c = map.cell_at(i);
    for (const auto& [dr, dc] : disc) {
      const CellIndex n{c.row + dr, c.col + dc};
      if (map.contains(n)) blocked[map.index(n)] = 1;
    }
  }
  return blocked;
}

// Pure-pursuit follower over a waypoint list. Turns in place when the target
// is more than 90 degrees off the heading.
class PurePursuit {
 public:
  PurePursuit(std::vector<Point2> waypoints, const DecisionConfig& cfg)
      : wps_(std::move(waypoints)), cfg_(cfg) {}

  bool done(const Pose2& pose) const {
    return wps_.empty() || distance(pose.position(), wps_.back()) < cfg_.goal_tolerance;
  }

  std::size_t target_index() const { return idx_; }

  MotionInput command(const Pose2& pose, double dt) {
    MotionInput u;
    u.dt = dt;
    if (done(pose)) return u;
    while (idx_ + 1 < wps_.size() && distance(pose.position(), wps_[idx_]) < cfg_.lookahead) ++idx_;
    const Point2 t = wps_[idx_];
    const double bearing = std::atan2(t.y - pose.y, t.x - pose.x);
    const double err = wrap_angle(bearing - pose.theta);
    if (std::abs(err) > 0.5 * std::numbers::pi) {
      u.omega = std::copysign(cfg_.omega_max, err);
      return u;
    }
    const double ld = std::max(distance(pose.position(), t), 1e-6);
    u.v = cfg_.v_nom;
    u.omega = std::clamp(2.0 * u.v * std::sin(err) / ld, -cfg_.omega_max, cfg_.omega_max);
    return u;
  }

 private:
  std::vector<Point2> wps_;
  DecisionConfig cfg_;
  std::size_t idx_{0};
};

struct CandidatePlan {
  Frontier goal;
  std::vector<CellIndex> path_cells;
  std::vector<Point2> waypoints;
  std::vector<MotionInput> controls;
  double path_length{0.0};
  PoseBelief rollout_belief;
  std::optional<OccupancyGrid> rollout_map;
  double big{0.0};
  int rollout_steps{0};
};

namespace detail {

// 8-connected A* with octile moves; diagonal moves may not cut a blocked
// corner. Unknown cells cost unknown_cost times their length.
inline std::vector<CellIndex> astar(const OccupancyGrid& map, const std::vector<std::uint8_t>& blocked,
                                    CellIndex start, CellIndex goal, const DecisionConfig& cfg) {
  if (start == goal) return {start};
  const std::size_t n = map.size();
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const Point2 gp = map.cell_center(goal);
  auto h = [&](CellIndex c) {
    const Point2 p = map.cell_center(c);
    return std::hypot(p.x - gp.x, p.y - gp.y);
  };
  const auto s = map.index(start);
  const auto goal_idx = map.index(goal);
  g[s] = 0.0;
  open.emplace(h(start), s);
  auto passable = [&](CellIndex c) { return map.contains(c) && !blocked[map.index(c)]; };
  while (!open.empty()) {
    const auto [f, idx] = open.top();
    open.pop();
    if (closed[idx]) continue;
    closed[idx] = 1;
    if (idx == goal_idx) break;
    const CellIndex c = map.cell_at(idx);
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const CellIndex nb{c.row + dr, c.col + dc};
        if (!passable(nb)) continue;
        if (dr != 0 && dc != 0 && (!passable({c.row + dr, c.col}) || !passable({c.row, c.col + dc})))
          continue;
        const auto ni = map.index(nb);
        if (closed[ni]) continue;
        double step = (dr != 0 && dc != 0 ? std::numbers::sqrt2 : 1.0) * map.resolution();
        if (classify(map.probs()[ni], cfg) == CellClass::unknown) step *= cfg.unknown_cost;
        const double cand = g[idx] + step;
        if (cand < g[ni]) {
          g[ni] = cand;
          parent[ni] = static_cast<std::int64_t>(idx);
          open.emplace(cand + h(nb), ni);
        }
      }
  }
  if (!closed[goal_idx]) return {};
  std::vector<CellIndex> path;
  for (auto i = static_cast<std::int64_t>(goal_idx); i >= 0; i = parent[static_cast<std::size_t>(i)])
    path.push_back(map.cell_at(static_cast<std::size_t>(i)));
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace detail

// Simulates the follower on the noiseless unicycle to produce the control
// sequence, each control carrying the process noise of its step.
inline std::vector<MotionInput> follow_controls(const Pose2& start, const std::vector<Point2>& waypoints,
                                                const DecisionConfig& cfg, const OdometryNoise& noise,
                                                double dt, int lidar_period) {
  std::vector<MotionInput> controls;
  PurePursuit follower(waypoints, cfg);
  Pose2 pose = start;
  for (int k = 0; k < cfg.h_max && !follower.done(pose); ++k) {
    MotionInput u = follower.command(pose, dt);
    const bool lidar = lidar_period > 0 && (k + 1) % lidar_period == 0;
    u.q = process_noise(pose, noise, dt, lidar);
    controls.push_back(u);
    pose = unicycle_step(pose, u.v, u.omega, dt);
  }
  return controls;
}

// A* plan to `goal` with waypoints every waypoint_spacing cells plus the goal.
inline CandidatePlan plan_on(const OccupancyGrid& map, const std::vector<std::uint8_t>& blocked,
                             const Pose2& start, CellIndex goal, const DecisionConfig& cfg,
                             const OdometryNoise& noise = {}, double dt = 0.02, int lidar_period = 5) {
  const auto s = map.try_world_to_cell(start.position());
  if (!s) throw NoPathError("plan_to_goal: start outside the map");
  if (!map.contains(goal)) throw NoPathError("plan_to_goal: goal outside the map");
  CandidatePlan plan;
  if (*s == goal) return plan;
  if (blocked[map.index(goal)]) throw NoPathError("plan_to_goal: goal lies in an inflated obstacle");
  // the start may sit inside the inflation band after drifting; let A* leave
  // it through cells that are only inflated, not occupied
  auto local_blocked = blocked;
  const int reach = static_cast<int>(std::ceil(cfg.inflation_radius / map.resolution())) + 1;
  for (int dr = -reach; dr <= reach; ++dr)
    for (int dc = -reach; dc <= reach; ++dc) {
      const CellIndex c{s->row + dr, s->col + dc};
      if (map.contains(c) && map.prob(c) < cfg.occ_threshold) local_blocked[map.index(c)] = 0;
    }
  plan.path_cells = detail::astar(map, local_blocked, *s, goal, cfg);
  if (plan.path_cells.empty()) throw NoPathError("plan_to_goal: goal unreachable");
  const auto spacing = static_cast<std::size_t>(cfg.waypoint_spacing);
  for (std::size_t i = spacing; i < plan.path_cells.size(); i += spacing)
    plan.waypoints.push_back(map.cell_center(plan.path_cells[i]));
  const Point2 last = map.cell_center(plan.path_cells.back());
  if (plan.waypoints.empty() || !(plan.waypoints.back() == last)) plan.waypoints.push_back(last);
  for (std::size_t i = 1; i < plan.path_cells.size(); ++i)
    plan.path_length += distance(map.cell_center(plan.path_cells[i - 1]), map.cell_center(plan.path_cells[i]));
  plan.controls = follow_controls(start, plan.waypoints, cfg, noise, dt, lidar_period);
  return plan;
}

inline CandidatePlan plan_to_goal(const OccupancyGrid& map, const Pose2& start, CellIndex goal,
                                  const DecisionConfig& cfg, const OdometryNoise& noise = {},
                                  double dt = 0.02, int lidar_period = 5) {
  return plan_on(map, inflated_obstacles(map, cfg), start, goal, cfg, noise, dt, lidar_period);
}

// --- rollout and selection ----------------------------------------------------

// Propagates belief and map copies along the plan's controls. Every
// rollout_scan_stride steps a noiseless scan is predicted on the rollout map
// and used for both the pose update and the map update.
inline CandidatePlan rollout(CandidatePlan plan, const PoseBelief& belief, const OccupancyGrid& map,
                             const DecisionConfig& cfg, const SensorSpec& spec,
                             const EstimatorModel& model) {
  PoseBelief b = belief;
  OccupancyGrid m = map;
  UpdateOptions opts = model.update;
  opts.gamma = cfg.gamma;
  std::vector<double> angles = spec.beam_angles();
  if (cfg.rollout_beam_stride > 1) {
    std::vector<double> sub;
    for (std::size_t k = 0; k < angles.size(); k += cfg.rollout_beam_stride) sub.push_back(angles[k]);
    angles = std::move(sub);
  }
  int steps = 0;
  for (std::size_t i = 0; i < plan.controls.size(); ++i) {
    const PoseBelief next = predict(b, plan.controls[i]);
    if (!m.contains(next.mean.position())) break;
    b = next;
    ++steps;
    if ((i + 1) % static_cast<std::size_t>(cfg.rollout_scan_stride) != 0) continue;
    const BeamScan z = predict_scan(b.mean, m, spec, cfg.occ_threshold, &angles);
    b = update(b, z, m, spec, opts);
    apply_map_update(m, z, b, model, spec);
  }
  plan.rollout_steps = steps;
  plan.big = information_gain(map, m, cfg.entropy).gain;
  plan.rollout_belief = b;
  plan.rollout_map = std::move(m);
  return plan;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. Results must be
// written to per-index slots so the outcome does not depend on scheduling.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  for (unsigned t = 0; t < count; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// argmax of big; ties go to the shorter path, then the lower index. Returns
// nullopt for an empty list (nothing left to explore).
inline std::optional<std::size_t> select_action(const std::vector<CandidatePlan>& candidates) {
  if (candidates.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const auto& a = candidates[i];
    const auto& b = candidates[best];
    const double tol = 1e-12 * std::max(1.0, std::abs(b.big));
    if (a.big > b.big + tol || (std::abs(a.big - b.big) <= tol && a.path_length < b.path_length))
      best = i;
  }
  return best;
}

// --- live loop ----------------------------------------------------------------

// Live estimator state. The decision map is the one rollouts start from; it
// is the estimate itself unless a separate decision model is configured.
struct ExplorerState {
  PoseBelief belief;
  OccupancyGrid map;
  std::optional<OccupancyGrid> decision_map;
  EstimatorModel estimator;
  std::optional<EstimatorModel> decision_model;
  bool heading_align{false};
  HeadingSearch heading_search{};
  long decisions{0};

  const OccupancyGrid& planning_map() const { return decision_map ? *decision_map : map; }
  const EstimatorModel& rollout_model() const { return decision_model ? *decision_model : estimator; }
};

// Default estimator over the given belief and map.
inline ExplorerState initial_state(PoseBelief belief, OccupancyGrid map) {
  ExplorerState st;
  st.belief = std::move(belief);
  st.map = std::move(map);
  return st;
}

// Feeds one simulator step into the estimator: predict on odometry, and on
// scan steps localize against the prior map and then update the map(s).
inline void ingest_step(ExplorerState& st, const StepResult& r, const SensorSpec& spec, double gamma) {
  MotionInput u = r.odometry;
  u.q = process_noise(st.belief.mean, st.estimator.noise, u.dt, r.lidar_step);
  st.belief = predict(st.belief, u);
  if (!r.scan) return;
  UpdateOptions opts = st.estimator.update;
  opts.gamma = gamma;
  opts.mode = st.estimator.localization;
  if (st.heading_align && opts.mode != LocalizationMode::odom_only)
    st.belief = heading_align(st.belief, *r.scan, st.map, spec, st.heading_search);
  st.belief = update(st.belief, *r.scan, st.map, spec, opts);
  apply_map_update(st.map, *r.scan, st.belief, st.estimator, spec);
  if (st.decision_map) apply_map_update(*st.decision_map, *r.scan, st.belief, *st.decision_model, spec);
}

struct CandidateSummary {
  CellIndex goal;
  double path_len{0.0};
  double big{0.0};
  double trace_cov{0.0};
};

struct DecisionRecord {
  long step{0};
  std::size_t frontier_count{0};
  std::vector<CandidateSummary> candidates;
  std::optional<std::size_t> chosen;
};

inline nlohmann::json to_json(const DecisionRecord& d) {
  nlohmann::json j;
  j["step"] = d.step;
  j["frontiers"] = d.frontier_count;
  auto arr = nlohmann::json::array();
  for (const auto& c : d.candidates)
    arr.push_back({{"goal", {c.goal.row, c.goal.col}},
                   {"path_len", c.path_len},
                   {"big", c.big},
                   {"trace_cov", c.trace_cov}});
  j["candidates"] = std::move(arr);
  j["chosen"] = d.chosen ? nlohmann::json(*d.chosen) : nlohmann::json(nullptr);
  return j;
}

// Frontier extraction, planning and rollouts for the current state. Rollouts
// only read live state.
inline std::pair<DecisionRecord, std::vector<CandidatePlan>> evaluate_candidates(
    const ExplorerState& st, const DecisionConfig& cfg, const SensorSpec& spec, const SimParams& sim) {
  const OccupancyGrid& m = st.planning_map();
  const auto blocked = inflated_obstacles(m, cfg);
  const auto frontiers = extract_frontiers(m, cfg, &blocked);
  std::vector<std::optional<CandidatePlan>> slots(frontiers.size());
  parallel_for(frontiers.size(), cfg.workers, [&](std::size_t i) {
    try {
      CandidatePlan p = plan_on(m, blocked, st.belief.mean, frontiers[i].goal_cell, cfg,
                                st.estimator.noise, sim.dt, sim.lidar_period);
      p.goal = frontiers[i];
      if (p.controls.empty()) return;  // already at this frontier
      slots[i] = rollout(std::move(p), st.belief, m, cfg, spec, st.rollout_model());
      slots[i]->rollout_map.reset();
    } catch (const NoPathError&) {
    }
  });
  std::vector<CandidatePlan> plans;
  for (auto& s : slots)
    if (s) plans.push_back(std::move(*s));
  DecisionRecord rec;
  rec.frontier_count = frontiers.size();
  for (const auto& p : plans)
    rec.candidates.push_back({p.goal.goal_cell, p.path_length, p.big, p.rollout_belief.cov.trace()});
  rec.chosen = select_action(plans);
  return {std::move(rec), std::move(plans)};
}

enum class StepStatus { running, complete, out_of_steps };

struct ExploreStepOutcome {
  StepStatus status{StepStatus::running};
  DecisionRecord decision;
  int executed_steps{0};
  bool collided{false};
};

// Called after every executed simulator step with the step result.
using StepObserver = std::function<void(const StepResult&)>;

// One decision followed by execution until the goal is reached, the path is
// blocked in the planning map, replan_interval steps pass, or max_steps is hit.
inline ExploreStepOutcome explore_step(ExplorerState& st, const DecisionConfig& cfg, const SensorSpec& spec,
                                       SimWorld& world, long max_steps, const StepObserver& observe = {}) {
  ExploreStepOutcome out;
  if (world.step >= max_steps) {
    out.status = StepStatus::out_of_steps;
    return out;
  }
  auto [rec, plans] = evaluate_candidates(st, cfg, spec, world.params);
  rec.step = world.step;
  ++st.decisions;
  out.decision = rec;
  if (!rec.chosen) {
    out.status = StepStatus::complete;
    return out;
  }
  const CandidatePlan& plan = plans[*rec.chosen];
  PurePursuit follower(plan.waypoints, cfg);
  for (int k = 0; k < cfg.replan_interval; ++k) {
    if (world.step >= max_steps) {
      out.status = StepStatus::out_of_steps;
      break;
    }
    if (follower.done(st.belief.mean)) break;
    const MotionInput u = follower.command(st.belief.mean, world.params.dt);
    const StepResult r = step_sim(world, u);
    ingest_step(st, r, spec, cfg.gamma);
    ++out.executed_steps;
    if (observe) observe(r);
    if (r.collision) {
      out.collided = true;
      // back away from the contact before the next decision
      for (int b = 0; b < cfg.backoff_steps && world.step < max_steps; ++b) {
        const StepResult rb = step_sim(world, {-cfg.backoff_speed, 0.0, world.params.dt, {}});
        ingest_step(st, rb, spec, cfg.gamma);
        ++out.executed_steps;
        if (observe) observe(rb);
        if (rb.collision) break;
      }
      break;
    }
    if (r.scan) {
      const OccupancyGrid& m = st.planning_map();
      const bool blocked = std::any_of(plan.path_cells.begin(), plan.path_cells.end(), [&](CellIndex c) {
        return m.prob(c) >= cfg.occ_threshold;
      });
      if (blocked) break;
    }
  }
  return out;
}

}  // namespace coupled_explore
