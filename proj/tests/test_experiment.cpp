#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "coupled_explore/experiment.hpp"

using namespace coupled_explore;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream is(p);
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("cexp_test_" + name);
  fs::remove_all(d);
  return d;
}

RunConfig small_run(const std::string& name) {
  RunConfig c;
  c.seeds = {3, 4};
  c.max_steps = 300;
  c.decision.rollout_beam_stride = 8;
  c.output_dir = scratch(name);
  return c;
}

}  // namespace

TEST(Ablation, Expansion) {
  EXPECT_EQ(expand_ablation("A5"), (AblationTriple{LocalizationMode::coupled, MapModel::tbayes,
                                                   DecisionMapSource::estimate}));
  EXPECT_EQ(expand_ablation("A1").localization, LocalizationMode::odom_only);
  EXPECT_EQ(expand_ablation("A2").map_model, MapModel::inverse);
  EXPECT_EQ(expand_ablation("A4").localization, LocalizationMode::decoupled);
  EXPECT_EQ(expand_ablation("B1").decision, DecisionMapSource::inverse);
  EXPECT_EQ(expand_ablation("B3").decision, DecisionMapSource::coupled);
  EXPECT_THROW(expand_ablation("A6"), ConfigError);
}

TEST(Ablation, EveryTagExpands) {
  for (const auto& t : ablation_tags()) EXPECT_NO_THROW(expand_ablation(t)) << t;
}

TEST(Config, ParsesSectionsAndDefaults) {
  std::istringstream is(
      "map = fixture:rooms\nseeds = 7, 8\n"
      "[entropy]\nalpha = 3\nfamily = renyi\n"
      "[sensor]\nz_max = 8\n"
      "[estimator]\ngamma = 1.5\n");
  const RunConfig c = parse_config(is);
  EXPECT_EQ(c.map, "fixture:rooms");
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{7, 8}));
  EXPECT_EQ(c.decision.entropy.family(), EntropyFamily::renyi);
  EXPECT_EQ(c.decision.entropy.alpha(), 3.0);
  EXPECT_EQ(c.sensor.z_max, 8.0);
  EXPECT_EQ(c.decision.gamma, 1.5);
  EXPECT_EQ(c.map_params.n_max, 3);
}

TEST(Config, UnknownKey) {
  std::istringstream is("[sensor]\nbeams = 10\n");
  EXPECT_THROW(parse_config(is), ConfigError);
}

TEST(Config, BadValue) {
  std::istringstream is("[sensor]\nz_max = far\n");
  EXPECT_THROW(parse_config(is), ConfigError);
}

TEST(Config, BadAblation) {
  std::istringstream is("ablation = Z9\n");
  EXPECT_THROW(parse_config(is), ConfigError);
}

TEST(Config, MissingFile) { EXPECT_THROW(load_config("/nonexistent/run.ini"), ConfigError); }

TEST(Config, WorldErrors) {
  RunConfig c;
  c.map = "fixture:nowhere";
  EXPECT_THROW(load_world(c), ConfigError);
  c.map = "/nonexistent/map.pgm";
  EXPECT_THROW(load_world(c), MapIoError);
}

TEST(StartSampling, ClearOfWallsAndSeeded) {
  const auto truth = named_fixture("rooms");
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const Pose2 p = sample_start(truth, 2.0, 0.2, s);
    EXPECT_EQ(p, sample_start(truth, 2.0, 0.2, s));
    EXPECT_TRUE(SimWorld::clearance_ok(truth, p.position(), 2.0 - truth.resolution()));
  }
}

TEST(RunExperiment, MetricsCsvByteIdenticalAcrossRunsAndWorkers) {
  RunConfig a = small_run("det_a");
  RunConfig b = small_run("det_b");
  RunConfig c = small_run("det_c");
  c.decision.workers = 4;
  run_experiment(a, 1);
  run_experiment(b, 1);
  run_experiment(c, 4);
  for (auto seed : a.seeds) {
    const std::string sub = "seed_" + std::to_string(seed);
    const std::string ma = slurp(a.output_dir / sub / "metrics.csv");
    ASSERT_FALSE(ma.empty());
    EXPECT_EQ(ma, slurp(b.output_dir / sub / "metrics.csv"));
    EXPECT_EQ(ma, slurp(c.output_dir / sub / "metrics.csv"));
    EXPECT_EQ(slurp(a.output_dir / sub / "decisions.jsonl"), slurp(c.output_dir / sub / "decisions.jsonl"));
  }
}

TEST(RunExperiment, SummaryRecomputableFromSeedFiles) {
  RunConfig c = small_run("summary");
  const auto res = run_experiment(c, 1);
  ASSERT_FALSE(res.any_failed);
  const auto summary = read_csv(c.output_dir / "summary.csv");
  ASSERT_EQ(summary.size(), 1 + c.seeds.size() + 2);
  EXPECT_EQ(summary[0][0], "schema");
  std::vector<double> rmse;
  for (std::size_t i = 0; i < c.seeds.size(); ++i) {
    const auto metrics = read_csv(c.output_dir / ("seed_" + std::to_string(c.seeds[i])) / "metrics.csv");
    ASSERT_GE(metrics.size(), 2u);
    EXPECT_EQ(metrics[0][1], "step");
    const auto& last = metrics.back();
    const auto& row = summary[1 + i];
    EXPECT_EQ(row[1], std::to_string(c.seeds[i]));
    EXPECT_EQ(row[3], last[1]);  // steps
    EXPECT_EQ(row[5], last[2]);  // rmse
    EXPECT_EQ(row[7], last[4]);  // map error
    std::vector<double> h;
    for (std::size_t r = 1; r < metrics.size(); ++r) h.push_back(std::stod(metrics[r][5]));
    EXPECT_NEAR(std::stod(row[8]), metrics_uncertainty_reduction(h), 1e-6);
    rmse.push_back(std::stod(last[2]));
  }
  const auto& mean = summary[1 + c.seeds.size()];
  EXPECT_EQ(mean[1], "mean");
  EXPECT_NEAR(std::stod(mean[5]), aggregate(rmse).mean, 1e-8);
  EXPECT_NEAR(std::stod(summary.back()[5]), aggregate(rmse).std, 1e-8);
}

TEST(RunExperiment, WritesSnapshotsAndTrace) {
  RunConfig c = small_run("files");
  c.seeds = {5};
  c.snapshot_every = 1;
  const auto res = run_experiment(c, 1);
  const fs::path d = c.output_dir / "seed_5";
  std::size_t pgms = 0;
  for (const auto& e : fs::directory_iterator(d / "snapshots")) pgms += e.path().extension() == ".pgm";
  EXPECT_GE(pgms, res.seeds[0].decisions.size());
  std::ifstream is(d / "decisions.jsonl");
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("frontiers"));
    EXPECT_TRUE(j.contains("chosen"));
    ++n;
  }
  EXPECT_EQ(n, res.seeds[0].decisions.size());
}

TEST(RunExperiment, SeedFailureIsRecorded) {
  RunConfig c = small_run("fail");
  c.start = Pose2{0.1, 0.1, 0.0};  // inside the border wall
  const auto res = run_experiment(c, 1);
  EXPECT_TRUE(res.any_failed);
  EXPECT_TRUE(fs::exists(c.output_dir / "seed_3" / "error.txt"));
}

TEST(Sweep, ThreeAlphasThreeRows) {
  RunConfig c = small_run("sweep");
  c.seeds = {2};
  c.max_steps = 150;
  const auto rows = sweep_alpha(c, {0.2, 1.0, 3.0}, 1);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].divergence, 0.0);
  EXPECT_EQ(read_csv(c.output_dir / "sweep.csv").size(), 4u);
  EXPECT_THROW(sweep_alpha(c, {1.0}, 1), ConfigError);
}

TEST(Sweep, RepeatedAlphaGivesIdenticalRows) {
  RunConfig c = small_run("sweep_same");
  c.seeds = {2};
  c.max_steps = 150;
  const auto rows = sweep_alpha(c, {1.0, 1.0}, 1, false);
  EXPECT_EQ(rows[0].map_error.mean, rows[1].map_error.mean);
  EXPECT_EQ(rows[0].rmse.mean, rows[1].rmse.mean);
  EXPECT_EQ(rows[1].divergence, 0.0);
}
