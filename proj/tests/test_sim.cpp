#include <gtest/gtest.h>

#include <cmath>

#include "coupled_explore/fixtures.hpp"
#include "coupled_explore/sim.hpp"
#include "generators.hpp"

using namespace coupled_explore;

namespace {

SimParams noiseless() {
  SimParams p;
  p.noise = {0.0, 0.0, 0.0};
  return p;
}

// 10 x 4 m box with an internal wall whose face is at x = 5.0
OccupancyGrid wall_box() {
  OccupancyGrid g = blank_fixture(10.0, 4.0);
  MapPainter(g).border(0.4).wall(5.0, 0.0, 5.4, 4.0);
  return g;
}

}  // namespace

TEST(StepSim, ZeroNoiseOdometryEqualsCommand) {
  SimWorld w(corridor_fixture(), {3.0, 12.5, 0.0}, 1, noiseless());
  for (int i = 0; i < 50; ++i) {
    const MotionInput u{0.7, 0.3 * std::sin(0.1 * i), 0.02, {}};
    const auto r = step_sim(w, u);
    EXPECT_FALSE(r.collision);
    EXPECT_EQ(r.odometry.v, u.v);
    EXPECT_EQ(r.odometry.omega, u.omega);
    EXPECT_EQ(r.odometry.dt, u.dt);
  }
}

TEST(StepSim, WallStopsAtRadius) {
  SimParams prm = noiseless();
  SimWorld w(wall_box(), {4.5, 2.0, 0.0}, 1, prm);
  bool hit = false;
  // 1 m of commanded travel at 1 m/s
  for (int i = 0; i < 50; ++i) hit |= step_sim(w, {1.0, 0.0, prm.dt, {}}).collision;
  EXPECT_TRUE(hit);
  EXPECT_NEAR(w.true_pose.x, 5.0 - prm.robot_radius, 1e-6);
  EXPECT_NEAR(w.true_pose.y, 2.0, 1e-12);
}

TEST(StepSim, TranslationalOdometryNoise) {
  SimWorld w(blank_fixture(400.0, 10.0), {1.0, 5.0, 0.0}, 5);
  double sum = 0.0, sq = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const double e = step_sim(w, {1.0, 0.0, 0.02, {}}).odometry.v - 1.0;
    sum += e;
    sq += e * e;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(sd, 0.05, 0.05 * 0.05);
}

TEST(StepSim, ScansAtLidarRate) {
  SimWorld w(corridor_fixture(), {3.0, 12.5, 0.0}, 1);
  int scans = 0;
  for (int i = 1; i <= 20; ++i) {
    const auto r = step_sim(w, {0.2, 0.0, 0.02, {}});
    EXPECT_EQ(r.scan.has_value(), i % w.params.lidar_period == 0);
    EXPECT_EQ(r.lidar_step, r.scan.has_value());
    scans += r.scan.has_value();
  }
  EXPECT_EQ(scans, 4);
}

TEST(StepSim, StartInWallThrows) {
  EXPECT_THROW(SimWorld(wall_box(), {5.1, 2.0, 0.0}, 1), RobotInWallError);
}

TEST(StepSim, ReproducibleAndTruthUntouched) {
  gen::check_all(81, 10, [](gen::Gen& g, int) {
    const auto truth = corridor_fixture();
    const auto seed = static_cast<std::uint64_t>(g.integer(0, 1 << 30));
    SimWorld a(truth, {3.0, 12.5, 0.0}, seed), b(truth, {3.0, 12.5, 0.0}, seed);
    for (int i = 0; i < 200; ++i) {
      const MotionInput u{g.uniform(-0.5, 1.5), g.uniform(-2, 2), 0.02, {}};
      const auto ra = step_sim(a, u);
      const auto rb = step_sim(b, u);
      ASSERT_EQ(a.true_pose, b.true_pose);
      EXPECT_EQ(ra.odometry.v, rb.odometry.v);
      EXPECT_EQ(ra.odometry.omega, rb.odometry.omega);
      if (ra.scan) {
        EXPECT_EQ(ra.scan->ranges, rb.scan->ranges);
      }
    }
    EXPECT_EQ(a.truth.probs(), truth.probs());
  });
}

TEST(StepSim, NeverEntersOccupiedCell) {
  gen::check_all(82, 10, [](gen::Gen& g, int) {
    SimWorld w(rooms_fixture(), {5.0, 5.0, g.uniform(-3, 3)}, 1);
    for (int i = 0; i < 2000; ++i) {
      step_sim(w, {g.uniform(0.0, 1.5), g.uniform(-3, 3), 0.02, {}});
      ASSERT_TRUE(w.clear_at(w.true_pose.position())) << i;
    }
  });
}

TEST(ProcessNoise, MatchesOdometryModel) {
  const OdometryNoise n;
  const Mat3 q = process_noise({0, 0, 0}, n, 0.02, false);
  // plus kCovJitter on the diagonal
  EXPECT_NEAR(q(0, 0), 0.05 * 0.05 * 0.02 * 0.02 + kCovJitter, 1e-15);
  EXPECT_NEAR(q(2, 2), 0.02 * 0.02 * 0.02 * 0.02 + kCovJitter, 1e-15);
  const Mat3 ql = process_noise({0, 0, 0}, n, 0.02, true);
  EXPECT_NEAR(ql(2, 2) - q(2, 2), 0.01 * 0.01, 1e-12);
}

TEST(MetricsTranslation, Identical) {
  const std::vector<Pose2> t{{0, 0, 0}, {1, 2, 0}};
  const auto e = metrics_translation(t, t);
  EXPECT_EQ(e.rmse, 0.0);
  EXPECT_EQ(e.mae, 0.0);
}

TEST(MetricsTranslation, ConstantOffset) {
  const std::vector<Pose2> t{{0, 0, 0}, {1, 2, 0}, {3, 3, 1}};
  std::vector<Pose2> e = t;
  for (auto& p : e) p.y += 0.3;
  const auto m = metrics_translation(e, t);
  EXPECT_NEAR(m.rmse, 0.3, 1e-12);
  EXPECT_NEAR(m.mae, 0.3, 1e-12);
}

TEST(MetricsTranslation, TwoTerms) {
  const std::vector<Pose2> t{{0, 0, 0}, {0, 0, 0}};
  const std::vector<Pose2> e{{0.1, 0, 0}, {0, 0.3, 0}};
  const auto m = metrics_translation(e, t);
  EXPECT_NEAR(m.rmse, std::sqrt(0.05), 1e-12);
  EXPECT_NEAR(m.rmse, 0.2236, 1e-4);
  EXPECT_NEAR(m.mae, 0.2, 1e-12);
}

TEST(MetricsTranslation, LengthMismatch) {
  EXPECT_THROW(metrics_translation({{0, 0, 0}}, {}), std::invalid_argument);
}

TEST(MetricsMapError, ClampedTruth) {
  OccupancyGrid truth = corridor_fixture();
  OccupancyGrid est = truth;
  for (std::size_t i = 0; i < est.size(); ++i)
    est.set_prob(est.cell_at(i), truth.probs()[i] > 0.5 ? kProbMax : kProbMin);
  const auto m = metrics_map_error(est, truth);
  ASSERT_TRUE(m);
  EXPECT_NEAR(*m, 100.0 * std::sqrt(2.0) * kProbMin, 1e-9);
  EXPECT_NEAR(*m, 0.014, 5e-4);
}

TEST(MetricsMapError, AllUnknownIsSentinel) {
  const OccupancyGrid truth = corridor_fixture();
  const OccupancyGrid est(truth.width(), truth.height(), truth.resolution(), truth.origin(), 0.5);
  EXPECT_FALSE(metrics_map_error(est, truth).has_value());
}

TEST(MetricsMapError, TwoCells) {
  OccupancyGrid truth(2, 1, 0.2), est(2, 1, 0.2);
  truth.set_prob({0, 0}, kProbMax);
  truth.set_prob({0, 1}, kProbMin);
  est.set_prob({0, 0}, 0.9);
  est.set_prob({0, 1}, 0.1);
  EXPECT_NEAR(*metrics_map_error(est, truth), 100.0 * std::sqrt(0.02), 1e-9);
  EXPECT_NEAR(*metrics_map_error(est, truth), 14.142, 1e-3);
}

TEST(MetricsUncertainty, Constant) { EXPECT_EQ(metrics_uncertainty_reduction({4, 4, 4, 4}), 0.0); }

TEST(MetricsUncertainty, OneBitPerStep) {
  std::vector<double> s;
  for (int i = 0; i < 10; ++i) s.push_back(20.0 - i * std::log(2.0));
  EXPECT_NEAR(metrics_uncertainty_reduction(s), 1.0, 1e-12);
}

TEST(MetricsUncertainty, ThreeSteps) {
  EXPECT_NEAR(metrics_uncertainty_reduction({10, 8, 7}), 1.5 / std::log(2.0), 1e-12);
  EXPECT_NEAR(metrics_uncertainty_reduction({10, 8, 7}), 2.164, 1e-3);
}
