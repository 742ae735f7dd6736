#pragma once

// Occupancy updates. The tempered Bayes update marginalises the beam
// likelihood over the pose posterior (projected range variance) and tempers
// each hypothesis by a weight derived from the cell's accumulated hit count.
// The classical log-odds inverse sensor model is kept as a baseline.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coupled_explore/grid_map.hpp"
#include "coupled_explore/localization.hpp"
#include "coupled_explore/sensor.hpp"

namespace coupled_explore {

// Weights used for cells a beam only passes through.
enum class PassCellWeighting {
  as_stored,   // same hit-count weights as any other cell
  forced_one,  // w_occ = w_unocc = 1
};

struct MapUpdateParams {
  int n_max{3};
  double l_occ{0.85};
  double l_free{-0.4};
  PassCellWeighting pass_weighting{PassCellWeighting::as_stored};

  void validate() const {
    if (n_max < 1) throw std::invalid_argument("MapUpdateParams: n_max must be >= 1");
    if (!(l_occ > 0.0) || !(l_free < 0.0))
      throw std::invalid_argument("MapUpdateParams: need l_occ > 0 > l_free");
  }
};

inline double temper_weight(int n_acc, bool occupied_hypothesis, int n_max) {
  const int n = std::clamp(n_acc, 0, n_max);
  return occupied_hypothesis ? static_cast<double>(n_max - n) / n_max
                             : static_cast<double>(n) / n_max;
}

// H Sigma H^T + R_{o,u}
inline double projected_variance(const Mat3& pose_cov, const RowVec3& h, bool occupied,
                                 const SensorSpec& spec) {
  const double proj = h * pose_cov * h.transpose();
  return std::max(proj, 0.0) + (occupied ? spec.r_occ : spec.r_unocc);
}

// Two-hypothesis tempered Bayes step with explicit weights and variances.
// Evaluated in log-odds so that vanishing likelihoods do not underflow; the
// result equals L1^w1 p / (L1^w1 p + L0^w0 (1-p)) before clamping.
inline double tempered_bayes(double p_prior, double z, double expected, double w_occ,
                             double w_unocc, double var_occ, double var_unocc) {
  const double lo = prob_to_logodds(clamp_prob(p_prior)) +
                    w_occ * gaussian_log_density(z, expected, var_occ) -
                    w_unocc * gaussian_log_density(z, expected, var_unocc);
  return clamp_prob(logodds_to_prob(lo));
}

inline double tbayes_update_cell(double p_prior, double z, double expected, int n_acc,
                                 const PoseBelief& pose_belief, const RowVec3& h,
                                 const MapUpdateParams& params, const SensorSpec& spec) {
  return tempered_bayes(p_prior, z, expected, temper_weight(n_acc, true, params.n_max),
                        temper_weight(n_acc, false, params.n_max),
                        projected_variance(pose_belief.cov, h, true, spec),
                        projected_variance(pose_belief.cov, h, false, spec));
}

namespace detail {

inline void tbayes_cell_in_place(OccupancyGrid& map, CellIndex cell, bool is_hit, double z,
                                 const PoseBelief& belief, const MapUpdateParams& params,
                                 const SensorSpec& spec) {
  const Point2 from = belief.mean.position();
  const Point2 c = map.cell_center(cell);
  const double d = distance(from, c);
  const RowVec3 h = d > 1e-9 ? range_jacobian(from, c, d) : RowVec3::Zero();
  const int n = map.hits(cell);
  double w_occ = temper_weight(n, true, params.n_max);
  double w_unocc = temper_weight(n, false, params.n_max);
  if (!is_hit && params.pass_weighting == PassCellWeighting::forced_one) w_occ = w_unocc = 1.0;
  map.set_prob(cell, tempered_bayes(map.prob(cell), z, d, w_occ, w_unocc,
                                    projected_variance(belief.cov, h, true, spec),
                                    projected_variance(belief.cov, h, false, spec)));
}

}  // namespace detail

// In-place scan update. Beams are applied in ascending index; within a beam
// the hit cell's count is raised (saturating at n_max) before its weights are
// computed. Cells off every beam are untouched.
inline void apply_tbayes_scan(OccupancyGrid& map, const BeamScan& scan, const PoseBelief& belief,
                              const MapUpdateParams& params, const SensorSpec& spec,
                              std::size_t beam_stride = 1) {
  const Point2 from = belief.mean.position();
  if (!map.contains(from)) return;
  for (std::size_t k = 0; k < scan.size(); k += beam_stride) {
    const double z = std::clamp(scan.ranges[k], 0.0, spec.z_max);
    for_each_ray_cell(map, from, belief.mean.theta + scan.angles[k], z, spec.z_max,
                      [&](CellIndex c, bool is_hit) {
                        if (is_hit) map.set_hits(c, std::min(map.hits(c) + 1, params.n_max));
                        detail::tbayes_cell_in_place(map, c, is_hit, z, belief, params, spec);
                      });
  }
}

inline OccupancyGrid tbayes_update_scan(const OccupancyGrid& map, const BeamScan& scan,
                                        const PoseBelief& belief, const MapUpdateParams& params,
                                        const SensorSpec& spec) {
  OccupancyGrid out = map;
  apply_tbayes_scan(out, scan, belief, params, spec);
  return out;
}

// Log-odds inverse sensor model: hit cell += l_occ, pass cells += l_free.
inline void apply_inverse_scan(OccupancyGrid& map, const BeamScan& scan, const Pose2& pose_mean,
                               const MapUpdateParams& params, double z_max,
                               std::size_t beam_stride = 1) {
  const Point2 from = pose_mean.position();
  if (!map.contains(from)) return;
  for (std::size_t k = 0; k < scan.size(); k += beam_stride) {
    const double z = std::clamp(scan.ranges[k], 0.0, z_max);
    for_each_ray_cell(map, from, pose_mean.theta + scan.angles[k], z, z_max,
                      [&](CellIndex c, bool is_hit) {
                        const double l = prob_to_logodds(map.prob(c)) +
                                         (is_hit ? params.l_occ : params.l_free);
                        map.set_prob(c, logodds_to_prob(l));
                        if (is_hit) map.set_hits(c, std::min(map.hits(c) + 1, params.n_max));
                      });
  }
}

inline OccupancyGrid inverse_update_scan(const OccupancyGrid& map, const BeamScan& scan,
                                         const Pose2& pose_mean, const MapUpdateParams& params,
                                         double z_max) {
  OccupancyGrid out = map;
  apply_inverse_scan(out, scan, pose_mean, params, z_max);
  return out;
}

}  // namespace coupled_explore
