#pragma once

// Experiment runner: key=value configs with [section] headers, the A1-A5 /
// B1-B3 ablation table, per-seed exploration runs and result files.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coupled_explore/entropy.hpp"
#include "coupled_explore/explore.hpp"
#include "coupled_explore/fixtures.hpp"
#include "coupled_explore/grid_map.hpp"
#include "coupled_explore/sim.hpp"

namespace coupled_explore {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- ablations ----------------------------------------------------------------

// Which map the planner rolls out from.
enum class DecisionMapSource {
  estimate,  // the estimated map itself
  inverse,   // separately maintained inverse-model map, pose covariance ignored
  dvl,       // separately maintained T-BayesMap with zero pose covariance
  coupled,   // the coupled estimate (same as `estimate` under A5 estimation)
};

struct AblationTriple {
  LocalizationMode localization{LocalizationMode::coupled};
  MapModel map_model{MapModel::tbayes};
  DecisionMapSource decision{DecisionMapSource::estimate};

  friend bool operator==(const AblationTriple&, const AblationTriple&) = default;
};

inline const std::vector<std::string>& ablation_tags() {
  static const std::vector<std::string> tags{"A1", "A2", "A3", "A4", "A5", "B1", "B2", "B3"};
  return tags;
}

inline AblationTriple expand_ablation(const std::string& tag) {
  using L = LocalizationMode;
  using M = MapModel;
  using D = DecisionMapSource;
  if (tag == "A1") return {L::odom_only, M::inverse, D::estimate};
  if (tag == "A2") return {L::decoupled, M::inverse, D::estimate};
  if (tag == "A3") return {L::coupled, M::inverse, D::estimate};
  if (tag == "A4") return {L::decoupled, M::tbayes, D::estimate};
  if (tag == "A5") return {L::coupled, M::tbayes, D::estimate};
  if (tag == "B1") return {L::coupled, M::tbayes, D::inverse};
  if (tag == "B2") return {L::coupled, M::tbayes, D::dvl};
  if (tag == "B3") return {L::coupled, M::tbayes, D::coupled};
  throw ConfigError("unknown ablation tag '" + tag + "' (expected A1..A5, B1..B3 or custom)");
}

inline std::string to_string(LocalizationMode m) {
  switch (m) {
    case LocalizationMode::odom_only: return "odom_only";
    case LocalizationMode::decoupled: return "decoupled";
    case LocalizationMode::coupled: return "coupled";
  }
  return "?";
}

inline std::string to_string(MapModel m) { return m == MapModel::inverse ? "inverse" : "tbayes"; }

inline std::string to_string(DecisionMapSource d) {
  switch (d) {
    case DecisionMapSource::estimate: return "estimate";
    case DecisionMapSource::inverse: return "inverse";
    case DecisionMapSource::dvl: return "dvl";
    case DecisionMapSource::coupled: return "coupled";
  }
  return "?";
}

// --- configuration --------------------------------------------------------------

struct RunConfig {
  std::string map{"fixture:corridor"};  // "fixture:<name>" or a map file path
  MapLoadOptions map_load{};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string ablation{"A5"};
  AblationTriple custom{};
  long max_steps{2000};
  std::optional<Pose2> start;
  double start_clearance{2.0};
  bool heading_align{true};
  int snapshot_every{10};
  std::filesystem::path output_dir{"cexp_out"};

  SensorSpec sensor{};
  SimParams sim{};
  DecisionConfig decision{};
  UpdateOptions update{};
  MapUpdateParams map_params{};

  AblationTriple triple() const { return ablation == "custom" ? custom : expand_ablation(ablation); }

  void validate() const {
    try {
      (void)triple();
      (void)sensor.validate();
      decision.validate();
      map_params.validate();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    if (seeds.empty()) throw ConfigError("config: at least one seed is required");
    if (max_steps < 1) throw ConfigError("config: run.max_steps must be positive");
    if (!(sim.dt > 0.0) || sim.lidar_period < 1) throw ConfigError("config: bad sim.dt or sim.lidar_period");
    if (!(update.gamma > 0.0)) throw ConfigError("config: estimator.gamma must be positive");
  }
};

namespace detail {

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  T v{};
  is >> v;
  if (!is || !(is >> std::ws).eof())
    throw ConfigError("config: cannot parse '" + text + "' for key " + key);
  return v;
}

template <>
inline bool parse_value<bool>(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("config: expected a boolean for key " + key + ", got '" + text + "'");
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

inline LocalizationMode parse_localization(const std::string& s) {
  if (s == "odom_only") return LocalizationMode::odom_only;
  if (s == "decoupled") return LocalizationMode::decoupled;
  if (s == "coupled") return LocalizationMode::coupled;
  throw ConfigError("config: unknown localization mode '" + s + "'");
}

inline MapModel parse_map_model(const std::string& s) {
  if (s == "inverse") return MapModel::inverse;
  if (s == "tbayes") return MapModel::tbayes;
  throw ConfigError("config: unknown map model '" + s + "'");
}

inline DecisionMapSource parse_decision_source(const std::string& s) {
  if (s == "estimate") return DecisionMapSource::estimate;
  if (s == "inverse") return DecisionMapSource::inverse;
  if (s == "dvl") return DecisionMapSource::dvl;
  if (s == "coupled") return DecisionMapSource::coupled;
  throw ConfigError("config: unknown decision map source '" + s + "'");
}

}  // namespace detail

// Applies one "section.key" = value setting. Unknown keys are errors so that
// typos do not silently fall back to defaults.
inline void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_value;
  auto num = [&](auto& field) { field = parse_value<std::decay_t<decltype(field)>>(key, value); };
  double alpha = c.decision.entropy.alpha();

  if (key == "run.map") c.map = value;
  else if (key == "run.pgm_encoding") {
    if (value == "binary") c.map_load.encoding = PgmEncoding::binary;
    else if (value == "probability") c.map_load.encoding = PgmEncoding::probability;
    else throw ConfigError("config: run.pgm_encoding must be binary or probability");
  }
  else if (key == "run.resolution") num(c.map_load.resolution);
  else if (key == "run.origin_x") num(c.map_load.origin.x);
  else if (key == "run.origin_y") num(c.map_load.origin.y);
  else if (key == "run.seeds") {
    c.seeds.clear();
    for (const auto& s : detail::split_list(value)) c.seeds.push_back(parse_value<std::uint64_t>(key, s));
  }
  else if (key == "run.seed_count") {
    const auto n = parse_value<int>(key, value);
    if (n < 1) throw ConfigError("config: run.seed_count must be >= 1");
    const std::uint64_t base = c.seeds.empty() ? 1 : c.seeds.front();
    c.seeds.clear();
    for (int i = 0; i < n; ++i) c.seeds.push_back(base + static_cast<std::uint64_t>(i));
  }
  else if (key == "run.ablation") c.ablation = value;
  else if (key == "run.max_steps") num(c.max_steps);
  else if (key == "run.start") {
    if (value == "random") {
      c.start.reset();
    } else {
      const auto parts = detail::split_list(value);
      if (parts.size() != 3) throw ConfigError("config: run.start must be 'random' or 'x, y, theta'");
      c.start = Pose2{parse_value<double>(key, parts[0]), parse_value<double>(key, parts[1]),
                      wrap_angle(parse_value<double>(key, parts[2]))};
    }
  }
  else if (key == "run.start_clearance") num(c.start_clearance);
  else if (key == "run.heading_align") c.heading_align = parse_value<bool>(key, value);
  else if (key == "run.snapshot_every") num(c.snapshot_every);
  else if (key == "run.output_dir") c.output_dir = value;
  else if (key == "custom.localization") c.custom.localization = detail::parse_localization(value);
  else if (key == "custom.map_model") c.custom.map_model = detail::parse_map_model(value);
  else if (key == "custom.decision_map") c.custom.decision = detail::parse_decision_source(value);
  else if (key == "entropy.family") {
    const auto f = parse_entropy_family(value);
    c.decision.entropy = EntropySpec(f, f == EntropyFamily::shannon ? 1.0 : alpha);
  }
  else if (key == "entropy.alpha") {
    alpha = parse_value<double>(key, value);
    if (!(alpha > 0.0)) throw ConfigError("config: entropy.alpha must be positive");
    c.decision.entropy = EntropySpec(c.decision.entropy.family(), alpha);
  }
  else if (key == "estimator.gamma") { num(c.update.gamma); c.decision.gamma = c.update.gamma; }
  else if (key == "estimator.n_max") num(c.map_params.n_max);
  else if (key == "estimator.l_occ") num(c.map_params.l_occ);
  else if (key == "estimator.l_free") num(c.map_params.l_free);
  else if (key == "estimator.occ_threshold") num(c.update.occ_threshold);
  else if (key == "estimator.association_window") num(c.update.association_window);
  else if (key == "estimator.pass_weighting") {
    if (value == "as_stored") c.map_params.pass_weighting = PassCellWeighting::as_stored;
    else if (value == "forced_one") c.map_params.pass_weighting = PassCellWeighting::forced_one;
    else throw ConfigError("config: estimator.pass_weighting must be as_stored or forced_one");
  }
  else if (key == "estimator.variance_combination") {
    if (value == "squared_weights") c.update.combination = VarianceCombination::squared_weights;
    else if (value == "moment_matched") c.update.combination = VarianceCombination::moment_matched;
    else throw ConfigError("config: estimator.variance_combination must be squared_weights or moment_matched");
  }
  else if (key == "sensor.n_beams") num(c.sensor.n_beams);
  else if (key == "sensor.z_max") num(c.sensor.z_max);
  else if (key == "sensor.r_occ") num(c.sensor.r_occ);
  else if (key == "sensor.r_unocc") num(c.sensor.r_unocc);
  else if (key == "sensor.beam_noise_std") num(c.sensor.beam_noise_std);
  else if (key == "noise.trans_std") num(c.sim.noise.trans_std);
  else if (key == "noise.rot_std") num(c.sim.noise.rot_std);
  else if (key == "noise.heading_extra_std") num(c.sim.noise.heading_extra_std);
  else if (key == "sim.dt") num(c.sim.dt);
  else if (key == "sim.lidar_period") num(c.sim.lidar_period);
  else if (key == "sim.robot_radius") num(c.sim.robot_radius);
  else if (key == "decision.min_cluster_size") num(c.decision.min_cluster_size);
  else if (key == "decision.free_threshold") num(c.decision.free_threshold);
  else if (key == "decision.occ_threshold") num(c.decision.occ_threshold);
  else if (key == "decision.h_max") num(c.decision.h_max);
  else if (key == "decision.rollout_scan_stride") num(c.decision.rollout_scan_stride);
  else if (key == "decision.rollout_beam_stride") num(c.decision.rollout_beam_stride);
  else if (key == "decision.inflation_radius") num(c.decision.inflation_radius);
  else if (key == "decision.v_nom") num(c.decision.v_nom);
  else if (key == "decision.lookahead") num(c.decision.lookahead);
  else if (key == "decision.goal_tolerance") num(c.decision.goal_tolerance);
  else if (key == "decision.replan_interval") num(c.decision.replan_interval);
  else if (key == "decision.waypoint_spacing") num(c.decision.waypoint_spacing);
  else if (key == "decision.unknown_cost") num(c.decision.unknown_cost);
  else if (key == "decision.backoff_steps") num(c.decision.backoff_steps);
  else if (key == "decision.backoff_speed") num(c.decision.backoff_speed);
  else if (key == "decision.workers") num(c.decision.workers);
  else throw ConfigError("config: unknown key '" + key + "'");
}

// Keys outside any [section] belong to [run].
inline RunConfig parse_config(std::istream& is, const std::string& name = "<config>") {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(name + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig c;
  // entropy.family must be applied before entropy.alpha, so sections are
  // visited in a fixed order rather than file order
  std::vector<std::pair<std::string, std::string>> settings;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      settings.emplace_back("run." + section, body.data());
      continue;
    }
    for (const auto& [key, leaf] : body) settings.emplace_back(section + "." + key, leaf.data());
  }
  std::stable_sort(settings.begin(), settings.end(), [](const auto& a, const auto& b) {
    auto rank = [](const std::string& k) { return k == "entropy.family" ? 0 : k == "entropy.alpha" ? 1 : 2; };
    return rank(a.first) < rank(b.first);
  });
  for (const auto& [k, v] : settings) apply_setting(c, k, v);
  c.decision.gamma = c.update.gamma;
  c.validate();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path.string());
  return parse_config(is, path.string());
}

inline OccupancyGrid load_world(const RunConfig& c) {
  const std::string prefix = "fixture:";
  if (c.map.rfind(prefix, 0) == 0) {
    try {
      return named_fixture(c.map.substr(prefix.size()));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return load_map(c.map, guess_map_format(c.map), c.map_load);
}

// Worker count from CEXP_WORKERS, default 1.
inline unsigned workers_from_env() {
  const char* v = std::getenv("CEXP_WORKERS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError(std::string("CEXP_WORKERS must be a positive integer, got '") + v + "'");
  return static_cast<unsigned>(n);
}

// --- single seed ----------------------------------------------------------------

struct MetricsRow {
  long step{0};
  double rmse{0.0};
  double mae{0.0};
  std::optional<double> map_error;
  double entropy_nats{0.0};
  double trace_cov{0.0};
  long decisions{0};
};

struct SeedSummary {
  std::string status;
  long steps{0};
  long decisions{0};
  double rmse{0.0};
  double mae{0.0};
  std::optional<double> map_error;
  double uncertainty_reduction_bits{0.0};
  double final_entropy_nats{0.0};
};

struct SeedResult {
  std::uint64_t seed{0};
  bool failed{false};
  std::string error;
  Pose2 start{};
  std::vector<MetricsRow> rows;
  std::vector<DecisionRecord> decisions;
  std::vector<std::pair<long, OccupancyGrid>> snapshots;  // (decision count, map)
  SeedSummary summary;
};

// Free cell centre at least `clearance` metres from every occupied cell,
// drawn uniformly; falls back to the most open cell when none qualifies.
inline Pose2 sample_start(const OccupancyGrid& truth, double clearance, double robot_radius,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 0x5851F42D4C957F2DULL);
  const int reach = static_cast<int>(std::ceil(clearance / truth.resolution()));
  std::vector<CellIndex> ok;
  CellIndex best{};
  double best_clear = -1.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const CellIndex c = truth.cell_at(i);
    if (truth.prob(c) > 0.5) continue;
    double nearest = std::numeric_limits<double>::infinity();
    for (int dr = -reach; dr <= reach; ++dr)
      for (int dc = -reach; dc <= reach; ++dc) {
        const CellIndex n{c.row + dr, c.col + dc};
        if (truth.contains(n) && truth.prob(n) <= 0.5) continue;
        nearest = std::min(nearest, std::hypot(dr, dc) * truth.resolution());
      }
    if (nearest >= clearance) ok.push_back(c);
    if (nearest > best_clear && SimWorld::clearance_ok(truth, truth.cell_center(c), robot_radius)) {
      best_clear = nearest;
      best = c;
    }
  }
  if (best_clear < 0.0) throw RobotInWallError("sample_start: map has no free cell");
  CellIndex pick = best;
  if (!ok.empty()) pick = ok[std::uniform_int_distribution<std::size_t>(0, ok.size() - 1)(rng)];
  const double theta = std::uniform_real_distribution<double>(-std::numbers::pi, std::numbers::pi)(rng);
  const Point2 p = truth.cell_center(pick);
  return {p.x, p.y, wrap_angle(theta)};
}

inline ExplorerState make_explorer_state(const RunConfig& c, const OccupancyGrid& truth, const Pose2& start) {
  const AblationTriple t = c.triple();
  ExplorerState st{PoseBelief{start, Mat3::Identity() * 1e-4},
                   OccupancyGrid(truth.width(), truth.height(), truth.resolution(), truth.origin(), kProbUnknown),
                   std::nullopt,
                   EstimatorModel{},
                   std::nullopt,
                   c.heading_align};
  st.estimator.localization = t.localization;
  st.estimator.map = t.map_model;
  st.estimator.update = c.update;
  st.estimator.update.mode = t.localization;
  st.estimator.map_params = c.map_params;
  st.estimator.noise = c.sim.noise;
  if (t.decision == DecisionMapSource::inverse || t.decision == DecisionMapSource::dvl) {
    EstimatorModel d = st.estimator;
    d.localization = LocalizationMode::coupled;
    d.update.mode = LocalizationMode::coupled;
    d.map = t.decision == DecisionMapSource::inverse ? MapModel::inverse : MapModel::tbayes;
    d.ignore_pose_cov = true;
    st.decision_model = d;
    st.decision_map = st.map;
  }
  return st;
}

// Full exploration run for one seed. Never throws; failures are reported in
// the result.
inline SeedResult run_seed(const RunConfig& c, const OccupancyGrid& truth, std::uint64_t seed,
                           unsigned candidate_workers = 1) {
  SeedResult res;
  res.seed = seed;
  try {
    res.start = c.start ? *c.start : sample_start(truth, c.start_clearance, c.sim.robot_radius, seed);
    SimWorld world(truth, res.start, seed, c.sim, c.sensor);
    ExplorerState st = make_explorer_state(c, truth, res.start);
    DecisionConfig dcfg = c.decision;
    dcfg.workers = candidate_workers;

    double sq_sum = 0.0, abs_sum = 0.0;
    long samples = 0;
    auto record = [&] {
      const double e = distance(st.belief.mean.position(), world.true_pose.position());
      sq_sum += e * e;
      abs_sum += e;
      ++samples;
      MetricsRow row;
      row.step = world.step;
      row.rmse = std::sqrt(sq_sum / static_cast<double>(samples));
      row.mae = abs_sum / static_cast<double>(samples);
      row.map_error = metrics_map_error(st.map, truth);
      row.entropy_nats = map_entropy(st.map, EntropySpec::shannon());
      row.trace_cov = st.belief.cov.trace();
      row.decisions = st.decisions;
      res.rows.push_back(row);
    };

    // initial scan from the known start pose
    const BeamScan first = simulate_scan(world.true_pose, world.truth, world.sensor, world.rng);
    apply_map_update(st.map, first, st.belief, st.estimator, c.sensor);
    if (st.decision_map) apply_map_update(*st.decision_map, first, st.belief, *st.decision_model, c.sensor);
    record();

    std::string status = "max_steps";
    while (world.step < c.max_steps) {
      const auto out = explore_step(st, dcfg, c.sensor, world, c.max_steps, [&](const StepResult& r) {
        if (r.lidar_step) record();
      });
      res.decisions.push_back(out.decision);
      if (c.snapshot_every > 0 && st.decisions % c.snapshot_every == 0)
        res.snapshots.emplace_back(st.decisions, st.map);
      if (out.status == StepStatus::complete) {
        status = "complete";
        break;
      }
      if (out.executed_steps == 0) {
        // nothing executable from here; rotate in place once to refresh the view
        const StepResult r = step_sim(world, MotionInput{0.0, dcfg.omega_max, c.sim.dt});
        ingest_step(st, r, c.sensor, dcfg.gamma);
        if (r.lidar_step) record();
      }
    }
    res.snapshots.emplace_back(st.decisions, st.map);

    std::vector<double> entropy;
    for (const auto& r : res.rows) entropy.push_back(r.entropy_nats);
    const MetricsRow& last = res.rows.back();
    res.summary = {status, last.step, last.decisions, last.rmse, last.mae, last.map_error,
                   metrics_uncertainty_reduction(entropy, 1), last.entropy_nats};
  } catch (const std::exception& e) {
    res.failed = true;
    res.error = e.what();
    res.summary.status = "failed";
  }
  return res;
}

// --- output ---------------------------------------------------------------------

inline constexpr int kCsvSchema = 1;

inline std::string fmt_num(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_num(*v) : "nan"; }

inline void write_metrics_csv(const SeedResult& r, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw MapIoError("cannot write " + path.string());
  os << "schema,step,rmse,mae,map_error,map_entropy_nats,trace_cov,decisions\n";
  for (const auto& m : r.rows)
    os << kCsvSchema << ',' << m.step << ',' << fmt_num(m.rmse) << ',' << fmt_num(m.mae) << ','
       << fmt_opt(m.map_error) << ',' << fmt_num(m.entropy_nats) << ',' << fmt_num(m.trace_cov) << ','
       << m.decisions << '\n';
}

inline void write_decisions_jsonl(const SeedResult& r, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw MapIoError("cannot write " + path.string());
  for (const auto& d : r.decisions) os << to_json(d).dump() << '\n';
}

struct Aggregate {
  double mean{std::numeric_limits<double>::quiet_NaN()};
  double std{std::numeric_limits<double>::quiet_NaN()};
};

// Mean and sample standard deviation over the finite values.
inline Aggregate aggregate(const std::vector<double>& xs) {
  std::vector<double> v;
  for (double x : xs)
    if (std::isfinite(x)) v.push_back(x);
  Aggregate a;
  if (v.empty()) return a;
  double s = 0.0;
  for (double x : v) s += x;
  a.mean = s / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - a.mean) * (x - a.mean);
  a.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return a;
}

struct ExperimentResult {
  std::filesystem::path dir;
  std::vector<SeedResult> seeds;
  bool any_failed{false};

  std::vector<double> column(double SeedSummary::*field) const {
    std::vector<double> v;
    for (const auto& s : seeds)
      if (!s.failed) v.push_back(s.summary.*field);
    return v;
  }
  std::vector<double> map_errors() const {
    std::vector<double> v;
    for (const auto& s : seeds)
      if (!s.failed) v.push_back(s.summary.map_error.value_or(std::numeric_limits<double>::quiet_NaN()));
    return v;
  }
};

inline void write_summary_csv(const ExperimentResult& r, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw MapIoError("cannot write " + path.string());
  os << "schema,seed,status,steps,decisions,rmse,mae,map_error,uncertainty_reduction_bits,final_entropy_nats\n";
  for (const auto& s : r.seeds) {
    const auto& m = s.summary;
    os << kCsvSchema << ',' << s.seed << ',' << m.status << ',' << m.steps << ',' << m.decisions << ','
       << fmt_num(m.rmse) << ',' << fmt_num(m.mae) << ',' << fmt_opt(m.map_error) << ','
       << fmt_num(m.uncertainty_reduction_bits) << ',' << fmt_num(m.final_entropy_nats) << '\n';
  }
  std::vector<double> steps, decisions;
  for (const auto& s : r.seeds)
    if (!s.failed) {
      steps.push_back(static_cast<double>(s.summary.steps));
      decisions.push_back(static_cast<double>(s.summary.decisions));
    }
  const Aggregate cols[] = {aggregate(steps),
                            aggregate(decisions),
                            aggregate(r.column(&SeedSummary::rmse)),
                            aggregate(r.column(&SeedSummary::mae)),
                            aggregate(r.map_errors()),
                            aggregate(r.column(&SeedSummary::uncertainty_reduction_bits)),
                            aggregate(r.column(&SeedSummary::final_entropy_nats))};
  for (const bool mean : {true, false}) {
    os << kCsvSchema << ',' << (mean ? "mean" : "std") << ",aggregate";
    for (const auto& a : cols) os << ',' << fmt_num(mean ? a.mean : a.std);
    os << '\n';
  }
}

// Runs every seed (CEXP_WORKERS at a time when workers is 0) and writes the
// run directory: seed_<n>/{metrics.csv,decisions.jsonl,snapshots/}, summary.csv.
inline ExperimentResult run_experiment(const RunConfig& c, unsigned workers = 0, bool write_files = true) {
  c.validate();
  const OccupancyGrid truth = load_world(c);
  if (workers == 0) workers = workers_from_env();
  ExperimentResult out;
  out.dir = c.output_dir;
  out.seeds.resize(c.seeds.size());
  parallel_for(c.seeds.size(), workers,
               [&](std::size_t i) { out.seeds[i] = run_seed(c, truth, c.seeds[i], c.decision.workers); });
  for (const auto& s : out.seeds) out.any_failed = out.any_failed || s.failed;
  if (!write_files) return out;

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out.dir, ec);
  if (ec) throw MapIoError("cannot create output directory " + out.dir.string() + ": " + ec.message());
  for (const auto& s : out.seeds) {
    const fs::path d = out.dir / ("seed_" + std::to_string(s.seed));
    fs::create_directories(d / "snapshots");
    if (s.failed) {
      std::ofstream(d / "error.txt") << s.error << '\n';
      continue;
    }
    write_metrics_csv(s, d / "metrics.csv");
    write_decisions_jsonl(s, d / "decisions.jsonl");
    for (const auto& [k, grid] : s.snapshots) {
      char name[32];
      std::snprintf(name, sizeof name, "decision_%04ld.pgm", k);
      save_map(grid, d / "snapshots" / name);
    }
  }
  write_summary_csv(out, out.dir / "summary.csv");
  return out;
}

// --- alpha sweep ----------------------------------------------------------------

struct SweepRow {
  double alpha{0.0};
  Aggregate map_error, rmse, uncertainty_reduction;
  double mean_decisions{0.0};
  double divergence{0.0};  // share of aligned decisions whose chosen goal differs from the first alpha
};

inline std::optional<CellIndex> chosen_goal(const DecisionRecord& d) {
  if (!d.chosen) return std::nullopt;
  return d.candidates[*d.chosen].goal;
}

inline std::vector<SweepRow> sweep_alpha(const RunConfig& base, const std::vector<double>& alphas,
                                         unsigned workers = 0, bool write_files = true) {
  if (alphas.size() < 2) throw ConfigError("sweep: need at least two alphas");
  std::vector<SweepRow> rows;
  std::vector<ExperimentResult> runs;
  for (const double a : alphas) {
    RunConfig c = base;
    c.decision.entropy = EntropySpec(base.decision.entropy.family(), a);
    c.output_dir = base.output_dir / ("alpha_" + fmt_num(a));
    runs.push_back(run_experiment(c, workers, write_files));
  }
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const auto& r = runs[k];
    SweepRow row;
    row.alpha = alphas[k];
    row.map_error = aggregate(r.map_errors());
    row.rmse = aggregate(r.column(&SeedSummary::rmse));
    row.uncertainty_reduction = aggregate(r.column(&SeedSummary::uncertainty_reduction_bits));
    std::vector<double> dec;
    for (const auto& s : r.seeds) dec.push_back(static_cast<double>(s.summary.decisions));
    row.mean_decisions = aggregate(dec).mean;
    long differ = 0, total = 0;
    for (std::size_t s = 0; s < r.seeds.size(); ++s) {
      const auto& a = runs[0].seeds[s].decisions;
      const auto& b = r.seeds[s].decisions;
      for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        ++total;
        if (chosen_goal(a[i]) != chosen_goal(b[i])) ++differ;
      }
    }
    row.divergence = total > 0 ? static_cast<double>(differ) / static_cast<double>(total) : 0.0;
    rows.push_back(row);
  }
  if (write_files) {
    std::filesystem::create_directories(base.output_dir);
    std::ofstream os(base.output_dir / "sweep.csv");
    if (!os) throw MapIoError("cannot write sweep.csv");
    os << "schema,family,alpha,map_error_mean,map_error_std,rmse_mean,rmse_std,"
          "uncertainty_reduction_bits_mean,uncertainty_reduction_bits_std,decisions_mean,divergence\n";
    for (const auto& r : rows)
      os << kCsvSchema << ',' << to_string(base.decision.entropy.family()) << ',' << fmt_num(r.alpha) << ','
         << fmt_num(r.map_error.mean) << ',' << fmt_num(r.map_error.std) << ',' << fmt_num(r.rmse.mean) << ','
         << fmt_num(r.rmse.std) << ',' << fmt_num(r.uncertainty_reduction.mean) << ','
         << fmt_num(r.uncertainty_reduction.std) << ',' << fmt_num(r.mean_decisions) << ','
         << fmt_num(r.divergence) << '\n';
  }
  return rows;
}

}  // namespace coupled_explore
