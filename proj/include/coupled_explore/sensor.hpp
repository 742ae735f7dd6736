#pragma once

// Range-sensor model: the two-variance beam likelihood, ground-truth scan
// simulation and noiseless scan prediction against an estimated map.

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "coupled_explore/geometry.hpp"
#include "coupled_explore/grid_map.hpp"

namespace coupled_explore {

struct SensorSpec {
  int n_beams{360};
  double fov{2.0 * std::numbers::pi};
  double z_max{10.0};
  double r_occ{0.39 * 0.39};   // variance for the occupied-cell hypothesis
  double r_unocc{3.0 * 3.0};   // variance for the unoccupied-cell hypothesis
  double beam_noise_std{0.01};

  // Throws on hard violations; returns soft warnings (variance ratio outside
  // the recommended 5..15 band).
  std::vector<std::string> validate() const {
    if (n_beams < 1) throw std::invalid_argument("SensorSpec: n_beams must be >= 1");
    if (!(z_max > 0.0)) throw std::invalid_argument("SensorSpec: z_max must be positive");
    if (!(fov > 0.0) || fov > 2.0 * std::numbers::pi + 1e-12)
      throw std::invalid_argument("SensorSpec: fov must lie in (0, 2pi]");
    if (!(r_occ > 0.0)) throw std::invalid_argument("SensorSpec: r_occ must be positive");
    if (!(r_unocc > r_occ)) throw std::invalid_argument("SensorSpec: r_unocc must exceed r_occ");
    if (beam_noise_std < 0.0) throw std::invalid_argument("SensorSpec: negative beam noise");
    std::vector<std::string> warnings;
    if (r_unocc < 5.0 * r_occ || r_unocc > 15.0 * r_occ)
      warnings.emplace_back("SensorSpec: r_unocc/r_occ = " + std::to_string(r_unocc / r_occ) +
                            " outside the recommended [5, 15] band");
    return warnings;
  }

  // Beam bearings in the sensor frame, strictly increasing. A full circle
  // omits the duplicate bearing at +pi.
  std::vector<double> beam_angles() const {
    std::vector<double> a(static_cast<std::size_t>(n_beams));
    const bool full = fov >= 2.0 * std::numbers::pi - 1e-12;
    if (n_beams == 1) {
      a[0] = 0.0;
      return a;
    }
    const double step = full ? fov / n_beams : fov / (n_beams - 1);
    const double start = full ? -std::numbers::pi + step : -0.5 * fov;
    for (int k = 0; k < n_beams; ++k) a[k] = start + k * step;
    return a;
  }
};

struct BeamScan {
  std::vector<double> ranges;
  std::vector<double> angles;
  long timestamp{0};

  std::size_t size() const { return ranges.size(); }
};

class RobotInWallError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double gaussian_density(double x, double mean, double variance) {
  const double r = x - mean;
  return std::exp(-0.5 * r * r / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

inline double gaussian_log_density(double x, double mean, double variance) {
  const double r = x - mean;
  return -0.5 * r * r / variance - 0.5 * std::log(2.0 * std::numbers::pi * variance);
}

// Beam likelihood p(z | x, m^i): Gaussian around the expected range with
// variance r_occ if the cell is occupied, r_unocc otherwise.
inline double dvl_likelihood(double z, double expected, bool occupied, const SensorSpec& spec) {
  return gaussian_density(z, expected, occupied ? spec.r_occ : spec.r_unocc);
}

inline double dvl_log_likelihood(double z, double expected, bool occupied, const SensorSpec& spec) {
  return gaussian_log_density(z, expected, occupied ? spec.r_occ : spec.r_unocc);
}

// Ray-casts every beam against the ground truth (occupied iff p > 0.5) and
// adds N(0, beam_noise_std) to each reading.
template <typename Rng>
BeamScan simulate_scan(const Pose2& true_pose, const OccupancyGrid& truth, const SensorSpec& spec,
                       Rng& rng) {
  const CellIndex start = truth.world_to_cell(true_pose.position());
  if (truth.prob(start) > 0.5) throw RobotInWallError("simulate_scan: pose lies in an occupied cell");
  BeamScan scan;
  scan.angles = spec.beam_angles();
  scan.ranges.resize(scan.angles.size());
  std::normal_distribution<double> noise(0.0, spec.beam_noise_std);
  auto occupied = [&](CellIndex c) { return truth.prob(c) > 0.5; };
  for (std::size_t k = 0; k < scan.angles.size(); ++k) {
    const double r = cast_ray(truth, true_pose.position(), true_pose.theta + scan.angles[k],
                              spec.z_max, occupied);
    const double n = spec.beam_noise_std > 0.0 ? noise(rng) : 0.0;
    scan.ranges[k] = std::clamp(r + n, 0.0, spec.z_max);
  }
  return scan;
}

// Noiseless expected scan on the estimated map. Cells at or above
// occ_threshold block the beam; everything else, unknown included, is
// traversable.
inline BeamScan predict_scan(const Pose2& belief_mean, const OccupancyGrid& est_map,
                             const SensorSpec& spec, double occ_threshold,
                             const std::vector<double>* angles = nullptr) {
  BeamScan scan;
  scan.angles = angles ? *angles : spec.beam_angles();
  scan.ranges.resize(scan.angles.size());
  auto blocked = [&](CellIndex c) { return est_map.prob(c) >= occ_threshold; };
  for (std::size_t k = 0; k < scan.angles.size(); ++k)
    scan.ranges[k] = cast_ray(est_map, belief_mean.position(), belief_mean.theta + scan.angles[k],
                              spec.z_max, blocked);
  return scan;
}

}  // namespace coupled_explore
