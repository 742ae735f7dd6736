#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "coupled_explore/entropy.hpp"
#include "coupled_explore/localization.hpp"
#include "coupled_explore/tbayesmap.hpp"
#include "generators.hpp"

using namespace coupled_explore;

namespace {

const double kLn2 = std::numbers::ln2;

std::vector<double> p_grid(double step = 1e-3) {
  std::vector<double> ps;
  for (double p = kProbMin; p <= kProbMax + 1e-15; p += step) ps.push_back(std::min(p, kProbMax));
  ps.push_back(kProbMax);
  return ps;
}

// -sum w ln w written out with the Prelec weight, independent of the library's
// rearranged form.
double behavioral_direct(double p, double alpha) {
  const double beta = std::pow(std::log(2.0), 1.0 - alpha);
  double h = 0.0;
  for (double q : {p, 1.0 - p}) {
    const double w = std::exp(-beta * std::pow(-std::log(q), alpha));
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

}  // namespace

TEST(EntropySpec, BetaClosedForm) {
  for (double a : {0.2, 0.5, 1.0, 2.0, 3.0})
    EXPECT_NEAR(EntropySpec::behavioral(a).beta(), std::pow(kLn2, 1.0 - a), 1e-14);
  EXPECT_DOUBLE_EQ(EntropySpec::behavioral(1.0).beta(), 1.0);
}

TEST(EntropySpec, RejectsNonPositiveAlpha) {
  EXPECT_THROW(EntropySpec::behavioral(0.0), std::invalid_argument);
  EXPECT_THROW(EntropySpec::renyi(-1.0), std::invalid_argument);
}

TEST(EntropySpec, ParseFamily) {
  EXPECT_EQ(parse_entropy_family("renyi"), EntropyFamily::renyi);
  EXPECT_THROW(parse_entropy_family("tsallis"), std::invalid_argument);
}

TEST(CellEntropy, UniformBehavioralAlphaOne) {
  EXPECT_NEAR(cell_entropy(0.5, EntropySpec::behavioral(1.0)), 0.693147, 1e-6);
}

TEST(CellEntropy, UniformBehavioralAlphaThree) {
  EXPECT_NEAR(cell_entropy(0.5, EntropySpec::behavioral(3.0)), kLn2, 1e-12);
}

TEST(CellEntropy, NearDegenerateCell) {
  // holds for Shannon and for alpha >= 1; see the next test for alpha < 1
  for (const auto& spec : {EntropySpec::shannon(), EntropySpec::renyi(2.0), EntropySpec::renyi(3.0),
                           EntropySpec::behavioral(1.0), EntropySpec::behavioral(2.0),
                           EntropySpec::behavioral(3.0)}) {
    const double h = cell_entropy(kProbMin, spec);
    EXPECT_GE(h, 0.0) << to_string(spec.family()) << spec.alpha();
    EXPECT_LE(h, 0.01) << to_string(spec.family()) << spec.alpha();
  }
}

TEST(CellEntropy, SubunitAlphaKeepsMoreEntropyAtFloor) {
  // the weighting inflates small probabilities when alpha < 1, so a clamped
  // cell is not near zero entropy
  EXPECT_GT(cell_entropy(kProbMin, EntropySpec::behavioral(0.2)), 0.01);
  EXPECT_GT(cell_entropy(kProbMin, EntropySpec::renyi(0.5)), 0.01);
}

TEST(CellEntropy, RenyiAlphaOneIsShannon) {
  for (double p : {0.01, 0.3, 0.5, 0.9}) EXPECT_DOUBLE_EQ(renyi_entropy(p, 1.0), shannon_entropy(p));
}

TEST(CellEntropy, BehavioralMatchesDirectForm) {
  gen::check_all(61, 300, [](gen::Gen& g, int) {
    const double p = g.probability();
    const double a = g.uniform(0.1, 4.0);
    EXPECT_NEAR(cell_entropy(p, EntropySpec::behavioral(a)), behavioral_direct(p, a), 1e-12);
  });
}

TEST(CellEntropy, BehavioralAlphaOneCoincidesWithShannon) {
  double worst = 0.0;
  for (double p : p_grid())
    worst = std::max(worst, std::abs(cell_entropy(p, EntropySpec::behavioral(1.0)) - shannon_entropy(p)));
  EXPECT_LT(worst, 1e-9);
}

TEST(CellEntropy, UniformPreservedForEveryAlpha) {
  for (double a : {0.2, 0.5, 1.0, 2.0, 3.0})
    EXPECT_LT(std::abs(cell_entropy(0.5, EntropySpec::behavioral(a)) - kLn2), 1e-9) << a;
}

TEST(CellEntropy, AlphaOrdering) {
  for (double p : p_grid()) {
    if (p == 0.5) continue;
    const double h3 = cell_entropy(p, EntropySpec::behavioral(3.0));
    const double hs = shannon_entropy(p);
    const double h02 = cell_entropy(p, EntropySpec::behavioral(0.2));
    EXPECT_LE(h3, hs + 1e-15) << p;
    EXPECT_LE(hs, h02 + 1e-15) << p;
    if (std::abs(p - 0.5) > 0.01) {
      EXPECT_LT(h3, hs - 1e-12) << p;
      EXPECT_LT(hs, h02 - 1e-12) << p;
    }
  }
}

TEST(CellEntropy, SymmetryAndNonnegativity) {
  gen::check_all(62, 500, [](gen::Gen& g, int) {
    const double p = g.probability();
    const double a = g.uniform(0.1, 4.0);
    for (const auto& spec : {EntropySpec::shannon(), EntropySpec::renyi(a), EntropySpec::behavioral(a)}) {
      EXPECT_NEAR(cell_entropy(p, spec), cell_entropy(1.0 - p, spec), 1e-12);
      EXPECT_GE(cell_entropy(p, spec), 0.0);
    }
  });
}

TEST(CellEntropy, SensitivityGrowsWithAlpha) {
  auto slope = [](double p, double a) {
    const double h = 1e-6;
    const auto s = EntropySpec::behavioral(a);
    return std::abs(cell_entropy(p + h, s) - cell_entropy(p - h, s)) / (2 * h);
  };
  for (double p : {0.3, 0.7}) {
    EXPECT_GT(slope(p, 3.0), 1.05 * slope(p, 1.0)) << p;
    EXPECT_GT(slope(p, 1.0), 1.05 * slope(p, 0.2)) << p;
  }
}

TEST(MapEntropy, AllUnknown) {
  OccupancyGrid g(13, 7, 0.2, {}, kProbUnknown);
  for (double a : {0.2, 1.0, 3.0})
    EXPECT_NEAR(map_entropy(g, EntropySpec::behavioral(a)), 13 * 7 * kLn2, 1e-9);
}

TEST(MapEntropy, AllAtFloor) {
  OccupancyGrid g(13, 7, 0.2, {}, kProbMin);
  EXPECT_LE(map_entropy(g, EntropySpec::shannon()), 13 * 7 * 0.01);
}

TEST(MapEntropy, HighAlphaNeverExceedsShannon) {
  gen::check_all(63, 30, [](gen::Gen& g, int) {
    const auto m = g.random_map(20, 20);
    EXPECT_LE(map_entropy(m, EntropySpec::behavioral(3.0)), map_entropy(m, EntropySpec::shannon()) + 1e-12);
  });
}

TEST(InformationGain, IdenticalMaps) {
  gen::Gen g(64);
  const auto m = g.random_map(10, 10);
  EXPECT_EQ(information_gain(m, m, EntropySpec::behavioral(2.0)).gain, 0.0);
}

TEST(InformationGain, OneCellResolved) {
  OccupancyGrid now(5, 5, 0.2, {}, kProbUnknown);
  OccupancyGrid pred = now;
  pred.set_prob({2, 2}, 0.9);
  const auto r = information_gain(now, pred, EntropySpec::shannon(), true);
  EXPECT_NEAR(r.gain, 0.368064, 1e-6);
  EXPECT_NEAR(r.gain, kLn2 - (-0.9 * std::log(0.9) - 0.1 * std::log(0.1)), 1e-12);
  EXPECT_DOUBLE_EQ(r.gain, r.current_entropy - r.predicted_entropy);
  EXPECT_NEAR(r.per_cell[now.index({2, 2})], r.gain, 1e-12);
}

TEST(InformationGain, GeometryMismatchThrows) {
  OccupancyGrid a(5, 5, 0.2), b(5, 6, 0.2);
  EXPECT_THROW(information_gain(a, b, EntropySpec::shannon()), GeometryMismatch);
}

TEST(InformationGain, TighterPoseGivesMoreGain) {
  // same prior map and readings, pose covariance Sigma vs 4 Sigma. Cells that
  // reach N_max hits within the scan are updated with the unoccupied
  // likelihood alone and move the other way (see the saturation tests in
  // test_tbayesmap), so draws that saturate a cell are not counted.
  SensorSpec s;
  s.n_beams = 24;
  MapUpdateParams prm;
  int checked = 0;
  gen::check_all(65, 40, [&](gen::Gen& g, int) {
    OccupancyGrid prior(20, 20, 0.2, {}, kProbUnknown);
    const Pose2 pose{2.0, 2.0, g.uniform(-3, 3)};
    BeamScan scan;
    scan.angles = s.beam_angles();
    for (std::size_t k = 0; k < scan.angles.size(); ++k) scan.ranges.push_back(g.uniform(0.5, 1.8));
    const Mat3 sigma = g.covariance(1e-3, 0.01);
    const auto m1 = tbayes_update_scan(prior, scan, {pose, sigma}, prm, s);
    if (*std::max_element(m1.hit_counts().begin(), m1.hit_counts().end()) >= prm.n_max) return;
    ++checked;
    const auto m4 = tbayes_update_scan(prior, scan, {pose, 4.0 * sigma}, prm, s);
    for (double a : {0.2, 1.0, 3.0}) {
      const auto spec = EntropySpec::behavioral(a);
      EXPECT_GE(information_gain(prior, m1, spec).gain, information_gain(prior, m4, spec).gain) << a;
    }
  });
  EXPECT_GE(checked, 20);
}
