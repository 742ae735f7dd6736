#pragma once

// Ground-truth world: exact unicycle motion with collision truncation, noisy
// odometry, LiDAR-rate scans, and the evaluation metrics.

#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "coupled_explore/geometry.hpp"
#include "coupled_explore/grid_map.hpp"
#include "coupled_explore/localization.hpp"
#include "coupled_explore/sensor.hpp"

namespace coupled_explore {

// Odometry corruption: trans_std on the reported linear velocity (m/s),
// rot_std on the reported turn rate (rad/s), and heading_extra_std (rad) of
// extra heading error injected once per LiDAR step.
struct OdometryNoise {
  double trans_std{0.05};
  double rot_std{0.02};
  double heading_extra_std{0.01};
};

// Process noise matching OdometryNoise for one step of length dt.
inline Mat3 process_noise(const Pose2& mean, const OdometryNoise& noise, double dt, bool lidar_step) {
  const double c = std::cos(mean.theta);
  const double s = std::sin(mean.theta);
  const double var_s = noise.trans_std * noise.trans_std * dt * dt;
  double var_th = noise.rot_std * noise.rot_std * dt * dt;
  if (lidar_step) var_th += noise.heading_extra_std * noise.heading_extra_std;
  Mat3 q = Mat3::Zero();
  q(0, 0) = c * c * var_s;
  q(0, 1) = q(1, 0) = c * s * var_s;
  q(1, 1) = s * s * var_s;
  q(2, 2) = var_th;
  // keep Q positive definite in the lateral direction
  q += kCovJitter * Mat3::Identity();
  return q;
}

struct SimParams {
  double dt{0.02};
  int lidar_period{5};  // sim steps per scan (10 Hz at dt = 0.02 s)
  double robot_radius{0.2};
  double v_max{1.5};
  double omega_max{3.0};
  OdometryNoise noise{};
};

struct SimWorld {
  OccupancyGrid truth;
  Pose2 true_pose;
  std::mt19937_64 rng;
  long step{0};
  SimParams params;
  SensorSpec sensor;

  SimWorld(OccupancyGrid truth_map, Pose2 start, std::uint64_t seed, SimParams p = {},
           SensorSpec s = {})
      : truth(std::move(truth_map)), true_pose(start), rng(seed), params(p), sensor(s) {
    true_pose.theta = wrap_angle(true_pose.theta);
    if (!clear_at(true_pose.position()))
      throw RobotInWallError("SimWorld: start pose is not in free space");
  }

  // True if a disc of robot_radius at p overlaps no occupied truth cell and
  // lies inside the grid.
  bool clear_at(Point2 p) const { return clearance_ok(truth, p, params.robot_radius); }

  static bool clearance_ok(const OccupancyGrid& g, Point2 p, double radius) {
    const auto centre = g.try_world_to_cell(p);
    if (!centre || g.prob(*centre) > 0.5) return false;
    const int reach = static_cast<int>(std::ceil(radius / g.resolution()));
    const double res = g.resolution();
    for (int dr = -reach; dr <= reach; ++dr) {
      for (int dc = -reach; dc <= reach; ++dc) {
        const CellIndex c{centre->row + dr, centre->col + dc};
        const double x0 = g.origin().x + c.col * res;
        const double y0 = g.origin().y + c.row * res;
        const double nx = std::clamp(p.x, x0, x0 + res);
        const double ny = std::clamp(p.y, y0, y0 + res);
        if (std::hypot(p.x - nx, p.y - ny) >= radius) continue;
        if (!g.contains(c) || g.prob(c) > 0.5) return false;
      }
    }
    return true;
  }
};

struct StepResult {
  MotionInput odometry;
  std::optional<BeamScan> scan;
  bool collision{false};
  bool lidar_step{false};
};

// Advances the true pose by one exact unicycle step and reports noisy
// odometry. A step into an obstacle is cut short at contact (bisection on the
// step fraction) and flagged.
inline StepResult step_sim(SimWorld& world, MotionInput u) {
  const auto& prm = world.params;
  u.dt = prm.dt;
  u.v = std::clamp(u.v, -prm.v_max, prm.v_max);
  u.omega = std::clamp(u.omega, -prm.omega_max, prm.omega_max);

  StepResult out;
  const Pose2 start = world.true_pose;
  Pose2 next = unicycle_step(start, u.v, u.omega, u.dt);
  double travelled_fraction = 1.0;
  if (!world.clear_at(next.position())) {
    out.collision = true;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 30; ++i) {
      const double mid = 0.5 * (lo + hi);
      const Pose2 trial = unicycle_step(start, u.v * mid, u.omega * mid, u.dt);
      if (world.clear_at(trial.position()))
        lo = mid;
      else
        hi = mid;
    }
    travelled_fraction = lo;
    next = unicycle_step(start, u.v * lo, u.omega, u.dt);
    if (!world.clear_at(next.position())) next = {start.x, start.y, next.theta};
  }
  world.true_pose = next;
  ++world.step;
  out.lidar_step = prm.lidar_period > 0 && world.step % prm.lidar_period == 0;

  const auto& n = prm.noise;
  std::normal_distribution<double> gauss(0.0, 1.0);
  out.odometry.dt = u.dt;
  out.odometry.v = u.v * travelled_fraction;
  out.odometry.omega = u.omega;
  if (n.trans_std > 0.0) out.odometry.v += n.trans_std * gauss(world.rng);
  if (n.rot_std > 0.0) out.odometry.omega += n.rot_std * gauss(world.rng);
  if (out.lidar_step && n.heading_extra_std > 0.0)
    out.odometry.omega += n.heading_extra_std * gauss(world.rng) / u.dt;
  if (out.lidar_step) out.scan = simulate_scan(world.true_pose, world.truth, world.sensor, world.rng);
  return out;
}

// --- metrics ----------------------------------------------------------------

struct TranslationError {
  double rmse{0.0};
  double mae{0.0};
};

inline TranslationError metrics_translation(const std::vector<Pose2>& est,
                                            const std::vector<Pose2>& truth) {
  if (est.size() != truth.size() || est.empty())
    throw std::invalid_argument("metrics_translation: trajectories must have equal, nonzero length");
  double sq = 0.0, ab = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double e = distance(est[i].position(), truth[i].position());
    sq += e * e;
    ab += e;
  }
  const double n = static_cast<double>(est.size());
  return {std::sqrt(sq / n), ab / n};
}

inline constexpr double kUnknownBand = 1e-3;

// RMSE over classified cells x 100: sqrt(mean_occ (1-p)^2 + mean_unocc p^2).
// Cells whose estimate is still at the unknown prior are excluded; nullopt
// when no cell remains.
inline std::optional<double> metrics_map_error(const OccupancyGrid& est, const OccupancyGrid& truth) {
  if (!(est.geometry() == truth.geometry()))
    throw std::invalid_argument("metrics_map_error: geometry mismatch");
  double occ_sum = 0.0, unocc_sum = 0.0;
  std::size_t n_occ = 0, n_unocc = 0;
  const auto& pe = est.probs();
  const auto& pt = truth.probs();
  for (std::size_t i = 0; i < pe.size(); ++i) {
    if (std::abs(pe[i] - kProbUnknown) < kUnknownBand) continue;
    if (pt[i] == kProbUnknown) continue;
    if (pt[i] > 0.5) {
      occ_sum += (1.0 - pe[i]) * (1.0 - pe[i]);
      ++n_occ;
    } else {
      unocc_sum += pe[i] * pe[i];
      ++n_unocc;
    }
  }
  if (n_occ == 0 && n_unocc == 0) return std::nullopt;
  double total = 0.0;
  if (n_occ > 0) total += occ_sum / static_cast<double>(n_occ);
  if (n_unocc > 0) total += unocc_sum / static_cast<double>(n_unocc);
  return std::sqrt(total) * 100.0;
}

// Mean per-step Shannon entropy reduction, converted to bits.
inline double metrics_uncertainty_reduction(const std::vector<double>& entropy_nats,
                                            int dt_window = 1) {
  if (entropy_nats.size() < 2 || dt_window < 1) return 0.0;
  const auto w = static_cast<std::size_t>(dt_window);
  if (entropy_nats.size() <= w) return 0.0;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = w; t < entropy_nats.size(); ++t) {
    sum += (entropy_nats[t - w] - entropy_nats[t]) / static_cast<double>(dt_window);
    ++count;
  }
  return sum / static_cast<double>(count) / std::log(2.0);
}

}  // namespace coupled_explore
