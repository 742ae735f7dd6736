#pragma once

// Gaussian pose filter. Prediction propagates a unicycle model; the update
// fuses range readings against hit cells of the predicted map, with each
// cell's measurement variance inflated by how uncertain its occupancy is.

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "coupled_explore/geometry.hpp"
#include "coupled_explore/grid_map.hpp"
#include "coupled_explore/sensor.hpp"

namespace coupled_explore {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using RowVec3 = Eigen::RowVector3d;

struct PoseBelief {
  Pose2 mean{};
  Mat3 cov{Mat3::Identity() * 1e-4};

  Vec3 mean_vec() const { return {mean.x, mean.y, mean.theta}; }
};

struct MotionInput {
  double v{0.0};      // m/s
  double omega{0.0};  // rad/s
  double dt{0.02};    // s
  Mat3 q{Mat3::Zero()};
};

inline Mat3 symmetrized(const Mat3& m) { return 0.5 * (m + m.transpose()); }

// Closed-form 3x3 inverse through the adjugate.
inline Mat3 inverse3(const Mat3& m) {
  Mat3 adj;
  adj(0, 0) = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  adj(0, 1) = m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2);
  adj(0, 2) = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
  adj(1, 0) = m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2);
  adj(1, 1) = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
  adj(1, 2) = m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2);
  adj(2, 0) = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
  adj(2, 1) = m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1);
  adj(2, 2) = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  const double det = m(0, 0) * adj(0, 0) + m(0, 1) * adj(1, 0) + m(0, 2) * adj(2, 0);
  if (det == 0.0 || !std::isfinite(det)) throw std::domain_error("inverse3: singular matrix");
  return adj / det;
}

inline constexpr double kCovJitter = 1e-9;

// Unicycle step f(x, u).
inline Pose2 unicycle_step(const Pose2& p, double v, double omega, double dt) {
  return {p.x + v * std::cos(p.theta) * dt, p.y + v * std::sin(p.theta) * dt,
          wrap_angle(p.theta + omega * dt)};
}

inline Mat3 unicycle_jacobian(const Pose2& p, double v, double dt) {
  Mat3 f = Mat3::Identity();
  f(0, 2) = -v * std::sin(p.theta) * dt;
  f(1, 2) = v * std::cos(p.theta) * dt;
  return f;
}

inline PoseBelief predict(const PoseBelief& belief, const MotionInput& u) {
  PoseBelief out;
  out.mean = unicycle_step(belief.mean, u.v, u.omega, u.dt);
  const Mat3 f = unicycle_jacobian(belief.mean, u.v, u.dt);
  out.cov = symmetrized(f * belief.cov * f.transpose() + u.q);
  return out;
}

// How the two-hypothesis mixture collapses into one measurement variance.
enum class VarianceCombination {
  squared_weights,  // p^2 R_o + (1-p)^2 R_u
  moment_matched,   // p R_o + (1-p) R_u (mixture variance, equal means)
};

inline double coupled_R(double p_occ, const SensorSpec& spec,
                        VarianceCombination how = VarianceCombination::squared_weights) {
  if (how == VarianceCombination::moment_matched)
    return p_occ * spec.r_occ + (1.0 - p_occ) * spec.r_unocc;
  return p_occ * p_occ * spec.r_occ + (1.0 - p_occ) * (1.0 - p_occ) * spec.r_unocc;
}

enum class LocalizationMode {
  odom_only,  // prediction only
  decoupled,  // thresholded cells treated as certainly occupied, variance r_occ
  coupled,    // every hit cell, variance from its occupancy probability
};

struct UpdateOptions {
  double gamma{1.2};
  LocalizationMode mode{LocalizationMode::coupled};
  double occ_threshold{0.65};  // decoupled mode only
  // Hit-cell association looks this many cells either side of the beam
  // endpoint, along the beam, for the most probably occupied cell.
  int association_window{2};
  VarianceCombination combination{VarianceCombination::squared_weights};
};

// One hit cell taking part in the update.
struct HitTerm {
  CellIndex cell;
  double z{0.0};
  double expected{0.0};
  RowVec3 h{RowVec3::Zero()};
  double variance{0.0};
};

inline RowVec3 range_jacobian(Point2 from, Point2 cell_center, double d) {
  return {(from.x - cell_center.x) / d, (from.y - cell_center.y) / d, 0.0};
}

// Hit cell of one beam: the endpoint cell cast from `from`, replaced by the
// most probably occupied cell within +-window cells along the beam. Ties keep
// the cell nearest the endpoint.
inline std::optional<CellIndex> associate_hit(const OccupancyGrid& map, const Pose2& from,
                                              double angle, double z, double z_max, int window) {
  if (!(z < z_max)) return std::nullopt;
  detail::RayWalker walker(map, from.position(), from.theta + angle);
  std::vector<CellIndex> cells;
  cells.reserve(64);
  std::ptrdiff_t endpoint = -1;
  while (true) {
    cells.push_back(walker.cell);
    const auto last = static_cast<std::ptrdiff_t>(cells.size()) - 1;
    if (endpoint < 0 && z < walker.t_exit()) endpoint = last;
    if (endpoint >= 0 && last >= endpoint + window) break;
    walker.advance();
    if (!map.contains(walker.cell)) break;
  }
  if (endpoint < 0) return std::nullopt;  // beam left the grid before its endpoint
  CellIndex best = cells[static_cast<std::size_t>(endpoint)];
  double best_p = map.prob(best);
  for (int off = 1; off <= window; ++off) {
    for (const int sgn : {-1, 1}) {
      const std::ptrdiff_t i = endpoint + sgn * off;
      if (i < 0 || i >= static_cast<std::ptrdiff_t>(cells.size())) continue;
      const double p = map.prob(cells[static_cast<std::size_t>(i)]);
      if (p > best_p) {
        best_p = p;
        best = cells[static_cast<std::size_t>(i)];
      }
    }
  }
  return best;
}

// Collects the per-cell terms of the update in beam order.
inline std::vector<HitTerm> collect_hit_terms(const PoseBelief& pred, const BeamScan& scan,
                                              const OccupancyGrid& map, const SensorSpec& spec,
                                              const UpdateOptions& opts) {
  std::vector<HitTerm> terms;
  terms.reserve(scan.size());
  const Point2 from = pred.mean.position();
  if (!map.contains(from)) return terms;
  for (std::size_t k = 0; k < scan.size(); ++k) {
    const auto cell =
        associate_hit(map, pred.mean, scan.angles[k], scan.ranges[k], spec.z_max,
                      opts.association_window);
    if (!cell) continue;
    const double p = map.prob(*cell);
    if (opts.mode == LocalizationMode::decoupled && p < opts.occ_threshold) continue;
    const Point2 c = map.cell_center(*cell);
    const double d = distance(from, c);
    if (d < 0.5 * map.resolution()) continue;
    HitTerm t;
    t.cell = *cell;
    t.z = scan.ranges[k];
    t.expected = d;
    t.h = range_jacobian(from, c, d);
    t.variance = opts.mode == LocalizationMode::decoupled ? spec.r_occ
                                                          : coupled_R(p, spec, opts.combination);
    terms.push_back(t);
  }
  return terms;
}

// Information-form fusion of the tempered hit-cell likelihoods:
//   Sigma^-1 = Sigma_bar^-1 + (gamma/N_h) sum H^T R^-1 H
//   mu       = Sigma (Sigma_bar^-1 mu_bar + (gamma/N_h) sum H^T R^-1 (z - h + H mu_bar))
// with H and h evaluated at mu_bar.
inline PoseBelief fuse_hit_terms(const PoseBelief& pred, const std::vector<HitTerm>& terms,
                                 double gamma) {
  if (terms.empty()) return pred;
  const double scale = gamma / static_cast<double>(terms.size());
  Mat3 info_sum = Mat3::Zero();
  Vec3 vec_sum = Vec3::Zero();
  for (const auto& t : terms) {
    const Vec3 ht = t.h.transpose();
    info_sum.noalias() += ht * (1.0 / t.variance) * t.h;
    vec_sum.noalias() += ht * ((t.z - t.expected) / t.variance);
  }
  // (Sigma_bar^-1 + A)^-1 = Sigma_bar (I + A Sigma_bar)^-1, which needs no
  // inverse of a possibly singular prior
  const Mat3 post_cov =
      symmetrized(pred.cov * (Mat3::Identity() + scale * info_sum * pred.cov).partialPivLu().inverse());
  // mu_bar + Sigma * (gamma/N_h) sum H^T R^-1 (z - h), the same quantity as
  // the information form above after expanding Sigma * Sigma^-1 mu_bar.
  const Vec3 delta = post_cov * (scale * vec_sum);
  PoseBelief out;
  out.mean = {pred.mean.x + delta(0), pred.mean.y + delta(1), wrap_angle(pred.mean.theta + delta(2))};
  out.cov = post_cov;
  return out;
}

inline PoseBelief update(const PoseBelief& belief_pred, const BeamScan& scan,
                         const OccupancyGrid& map_prior, const SensorSpec& spec,
                         const UpdateOptions& opts = {}) {
  if (opts.mode == LocalizationMode::odom_only) return belief_pred;
  return fuse_hit_terms(belief_pred, collect_hit_terms(belief_pred, scan, map_prior, spec, opts),
                        opts.gamma);
}

// --- heading search ---------------------------------------------------------

struct HeadingSearch {
  double half_width{0.05};  // rad
  int samples{21};
};

// Summed log two-hypothesis likelihood of the beam endpoints at heading
// theta + dtheta. Cells still at the unknown prior carry no alignment evidence
// and are skipped.
inline double heading_objective(const PoseBelief& belief, const BeamScan& scan,
                                const OccupancyGrid& map, const SensorSpec& spec, double dtheta) {
  double total = 0.0;
  const Point2 from = belief.mean.position();
  for (std::size_t k = 0; k < scan.size(); ++k) {
    const double z = scan.ranges[k];
    if (!(z < spec.z_max)) continue;
    const double a = belief.mean.theta + dtheta + scan.angles[k];
    const Point2 end{from.x + z * std::cos(a), from.y + z * std::sin(a)};
    const auto cell = map.try_world_to_cell(end);
    if (!cell) continue;
    const double p = map.prob(*cell);
    if (std::abs(p - kProbUnknown) < 1e-3) continue;
    const double d = distance(from, map.cell_center(*cell));
    total += std::log(p * dvl_likelihood(z, d, true, spec) +
                      (1.0 - p) * dvl_likelihood(z, d, false, spec));
  }
  return total;
}

// Grid search for the heading offset; samples are visited from 0 outwards and
// only a strict improvement moves the choice, so flat objectives return 0.
inline double heading_offset(const PoseBelief& belief, const BeamScan& scan,
                             const OccupancyGrid& map, const SensorSpec& spec,
                             const HeadingSearch& search = {}) {
  if (search.samples < 2) return 0.0;
  const int half = (search.samples - 1) / 2;
  const double step = search.half_width / half;
  double best = 0.0;
  double best_val = heading_objective(belief, scan, map, spec, 0.0);
  for (int i = 1; i <= half; ++i) {
    for (const int sgn : {-1, 1}) {
      const double d = sgn * i * step;
      const double v = heading_objective(belief, scan, map, spec, d);
      if (v > best_val) {
        best_val = v;
        best = d;
      }
    }
  }
  return best;
}

inline PoseBelief heading_align(const PoseBelief& belief, const BeamScan& scan,
                                const OccupancyGrid& map_prior, const SensorSpec& spec,
                                const HeadingSearch& search = {}) {
  PoseBelief out = belief;
  out.mean.theta = wrap_angle(belief.mean.theta + heading_offset(belief, scan, map_prior, spec, search));
  return out;
}

}  // namespace coupled_explore
