// cexplore: run exploration experiments, alpha sweeps and fixture exports.
//
// Exit codes: 0 success, 2 config error, 3 map I/O error, 4 seed failure(s).

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coupled_explore/coupled_explore.hpp"

namespace ce = coupled_explore;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitMapIo = 3;
constexpr int kExitSeedFailure = 4;

struct CommonArgs {
  std::string config;
  std::optional<int> seed_count;
  std::optional<std::string> ablation;
  std::optional<double> alpha;
  std::optional<std::string> family;
  std::optional<long> max_steps;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "INI config file (defaults are used when omitted)");
  cmd->add_option("--seed-count", a.seed_count, "run seeds 1..N")->check(CLI::PositiveNumber);
  cmd->add_option("--ablation", a.ablation, "A1..A5, B1..B3 or custom");
  cmd->add_option("--family", a.family, "entropy family: shannon, renyi or behavioral");
  cmd->add_option("--max-steps", a.max_steps, "simulator steps per seed")->check(CLI::PositiveNumber);
  cmd->add_option("--out", a.out, "output directory");
}

ce::RunConfig build_config(const CommonArgs& a) {
  ce::RunConfig c = a.config.empty() ? ce::RunConfig{} : ce::load_config(a.config);
  if (a.seed_count) {
    c.seeds.clear();
    for (int i = 1; i <= *a.seed_count; ++i) c.seeds.push_back(static_cast<std::uint64_t>(i));
  }
  if (a.ablation) c.ablation = *a.ablation;
  if (a.family) ce::apply_setting(c, "entropy.family", *a.family);
  if (a.alpha) ce::apply_setting(c, "entropy.alpha", std::to_string(*a.alpha));
  if (a.max_steps) c.max_steps = *a.max_steps;
  if (a.out) c.output_dir = *a.out;
  c.validate();
  return c;
}

int cmd_run(const CommonArgs& a) {
  const ce::RunConfig c = build_config(a);
  const auto res = ce::run_experiment(c);
  std::printf("%-6s %-10s %6s %9s %10s %10s %12s\n", "seed", "status", "steps", "decisions", "rmse_m",
              "map_error", "unc_red_bits");
  for (const auto& s : res.seeds) {
    if (s.failed) {
      std::printf("%-6llu failed: %s\n", static_cast<unsigned long long>(s.seed), s.error.c_str());
      continue;
    }
    const auto& m = s.summary;
    std::printf("%-6llu %-10s %6ld %9ld %10.4f %10s %12.4f\n", static_cast<unsigned long long>(s.seed),
                m.status.c_str(), m.steps, m.decisions, m.rmse, ce::fmt_opt(m.map_error).c_str(),
                m.uncertainty_reduction_bits);
  }
  std::printf("wrote %s\n", (res.dir / "summary.csv").string().c_str());
  return res.any_failed ? kExitSeedFailure : kExitOk;
}

int cmd_sweep(const CommonArgs& a, const std::string& alphas_text) {
  const ce::RunConfig c = build_config(a);
  std::vector<double> alphas;
  for (const auto& s : ce::detail::split_list(alphas_text))
    alphas.push_back(ce::detail::parse_value<double>("--alphas", s));
  const auto rows = ce::sweep_alpha(c, alphas);
  std::printf("%-8s %12s %10s %12s %10s\n", "alpha", "map_error", "rmse_m", "unc_red_bits", "divergence");
  for (const auto& r : rows)
    std::printf("%-8g %12.4f %10.4f %12.4f %10.3f\n", r.alpha, r.map_error.mean, r.rmse.mean,
                r.uncertainty_reduction.mean, r.divergence);
  std::printf("wrote %s\n", (c.output_dir / "sweep.csv").string().c_str());
  return kExitOk;
}

int cmd_fixture(const std::string& name, const std::string& out) {
  ce::OccupancyGrid g;
  try {
    g = ce::named_fixture(name);
  } catch (const std::invalid_argument& e) {
    throw ce::ConfigError(e.what());
  }
  ce::save_map(g, out);
  std::printf("wrote %s (%d x %d cells, %.2f m)\n", out.c_str(), g.width(), g.height(), g.resolution());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled-uncertainty active exploration experiments"};
  app.require_subcommand(1);

  CommonArgs run_args;
  auto* run = app.add_subcommand("run", "run one ablation over a set of seeds");
  add_common(run, run_args);
  run->add_option("--alpha", run_args.alpha, "entropy alpha");

  CommonArgs sweep_args;
  std::string alphas = "0.2,1.0,3.0";
  auto* sweep = app.add_subcommand("sweep", "compare entropy alphas on the same seeds");
  add_common(sweep, sweep_args);
  sweep->add_option("--alphas", alphas, "comma-separated alphas")->capture_default_str();

  std::string fixture_name = "corridor";
  std::string fixture_out = "fixture.pgm";
  auto* fixture = app.add_subcommand("fixture", "export a bundled floor plan");
  fixture->add_option("--name", fixture_name, "corridor, rooms or loop")->capture_default_str();
  fixture->add_option("--out", fixture_out, "output .pgm; a .meta sidecar is written next to it")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*sweep) return cmd_sweep(sweep_args, alphas);
    if (*fixture) return cmd_fixture(fixture_name, fixture_out);
  } catch (const ce::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ce::MapIoError& e) {
    std::cerr << "map error: " << e.what() << '\n';
    return kExitMapIo;
  } catch (const ce::FormatError& e) {
    std::cerr << "map error: " << e.what() << '\n';
    return kExitMapIo;
  }
  return kExitOk;
}
