// swarmctl: run, sweep (Monte Carlo over seeds) and validate scenarios.
#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swarm/error.hpp"
#include "swarm/export.hpp"
#include "swarm/scenario.hpp"
#include "swarm/sim.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigFailure = 2;
constexpr int kSolverFailure = 3;

std::vector<double> parse_gamma_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double g = 0.0;
    try {
      g = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      swarm::fail(swarm::ErrorCode::kConfigError, "bad gamma value '" + item + "'");
    }
    out.push_back(g);
  }
  return out;
}

void print_summary(const swarm::sim::ScenarioResult& r, std::ostream& os) {
  os << "ilqr: " << r.ilqr_iterations << " iterations, converged=" << r.ilqr_converged
     << ", distance " << r.nominal_distance_initial << " -> " << r.nominal_distance_final
     << "\n";
  os << "baseline: nnz=" << r.K_c.nnz() << " J_c=" << r.J_c << "\n";
  os << "gamma            nnz   nnz_ratio     J_ratio        edges\n";
  for (const auto& e : r.records) {
    if (e.failed) {
      os << e.gamma << "  FAILED: " << e.error << "\n";
      continue;
    }
    char line[160];
    std::snprintf(line, sizeof line, "%-14.6g %5ld  %10.4f  %12.4e  %5d\n", e.gamma, e.nnz,
                  e.nnz_ratio, e.J_ratio, e.edges);
    os << line;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse RFS swarm control scenarios"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", gamma_text, loop_mode;
  std::uint64_t seed = 0;
  int seeds = 1;

  auto* run = app.add_subcommand("run", "Run one scenario and export results");
  run->add_option("--config", config_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory");
  auto* seed_opt = run->add_option("--seed", seed, "RNG seed (overrides config)");
  auto* gamma_opt = run->add_option("--gamma", gamma_text, "Comma-separated gamma list");
  auto* mode_opt = run->add_option("--loop-mode", loop_mode, "true_state | phd_estimate")
                       ->check(CLI::IsMember({"true_state", "phd_estimate"}));

  auto* sweep = app.add_subcommand("sweep", "Monte Carlo over consecutive seeds");
  sweep->add_option("--config", config_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--seeds", seeds, "Number of seeds")->required()->check(CLI::PositiveNumber);
  sweep->add_option("--out", out_dir, "Output directory");

  auto* validate = app.add_subcommand("validate", "Check a config file");
  validate->add_option("--config", config_path, "Scenario JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }

  swarm::ScenarioConfig cfg;
  try {
    cfg = swarm::load_config(config_path);
    if (*run) {
      if (*seed_opt) cfg.seed = seed;
      if (*gamma_opt) cfg.gamma_list = parse_gamma_list(gamma_text);
      if (*mode_opt) cfg.loop_mode = swarm::parse_loop_mode(loop_mode);
      swarm::validate(cfg);
    }
  } catch (const swarm::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigFailure;
  }

  if (*validate) {
    std::cout << swarm::config_to_json(cfg) << "\n";
    return kOk;
  }

  try {
    if (*run) {
      const auto res = swarm::sim::run_scenario(cfg);
      swarm::export_results(res, out_dir);
      print_summary(res, std::cout);
      return kOk;
    }
    const std::uint64_t first = cfg.seed;
    for (int s = 0; s < seeds; ++s) {
      cfg.seed = first + static_cast<std::uint64_t>(s);
      const auto res = swarm::sim::run_scenario(cfg);
      const std::string dir = out_dir + "/seed_" + std::to_string(cfg.seed);
      swarm::export_results(res, dir);
      std::cout << "seed " << cfg.seed << "\n";
      print_summary(res, std::cout);
    }
    return kOk;
  } catch (const swarm::Error& e) {
    std::cerr << "solver error (" << swarm::to_string(e.code()) << "): " << e.what() << "\n";
    return e.code() == swarm::ErrorCode::kConfigError ? kConfigFailure : kSolverFailure;
  }
}
