// One scan, three map updates: the inverse sensor model, T-BayesMap with a
// tight pose and T-BayesMap with a loose pose. Prints a row of cells along
// the forward beam.

#include <cstdio>
#include <random>

#include "coupled_explore/coupled_explore.hpp"

namespace ce = coupled_explore;

int main() {
  const ce::OccupancyGrid truth = ce::corridor_fixture();
  const ce::SensorSpec sensor;
  const ce::Pose2 pose{4.1, 12.5, 0.0};
  std::mt19937_64 rng(7);
  const ce::BeamScan scan = ce::simulate_scan(pose, truth, sensor, rng);

  const ce::OccupancyGrid prior(truth.width(), truth.height(), truth.resolution(), truth.origin(),
                                ce::kProbUnknown);
  const ce::MapUpdateParams params;
  const ce::PoseBelief tight{pose, ce::Mat3::Identity() * 1e-4};
  const ce::PoseBelief loose{pose, ce::Mat3::Identity() * 1e-2};
  const auto inv = ce::inverse_update_scan(prior, scan, pose, params, sensor.z_max);
  const auto tb_tight = ce::tbayes_update_scan(prior, scan, tight, params, sensor);
  const auto tb_loose = ce::tbayes_update_scan(prior, scan, loose, params, sensor);

  std::printf("%6s %8s %8s %8s\n", "x_m", "inverse", "tight", "loose");
  const int row = truth.world_to_cell(pose.position()).row;
  for (int col = truth.world_to_cell(pose.position()).col; col < truth.width(); col += 5) {
    const ce::CellIndex c{row, col};
    std::printf("%6.1f %8.3f %8.3f %8.3f\n", truth.cell_center(c).x, inv.prob(c), tb_tight.prob(c),
                tb_loose.prob(c));
  }
  const auto spec = ce::EntropySpec::behavioral(1.0);
  std::printf("entropy gain  inverse %.1f  tight %.1f  loose %.1f nats\n",
              ce::information_gain(prior, inv, spec).gain, ce::information_gain(prior, tb_tight, spec).gain,
              ce::information_gain(prior, tb_loose, spec).gain);
  return 0;
}
