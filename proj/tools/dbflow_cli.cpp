#include "dbflow/config.hpp"
#include "dbflow/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Double-bracket flow laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  dbf::CliOverrides o;
  std::string model, policy, out;
  int sites = 0, steps = 0;
  double coupling = 0.0;
  std::uint64_t seed = 0;

  const std::pair<const char*, const char*> commands[] = {
      {"flow", "discretized flow with step search; trace, states, spectrum, circuit"},
      {"emulate", "circuit emulation: convergence levels or repeated components"},
      {"pinch-bench", "randomized pinching failure rate and balance envelope"},
      {"certify", "component error bounds and their log-log slopes"},
      {"spectrum", "exact spectrum against sorted diagonals along a flow"},
  };
  for (const auto& [name, about] : commands) {
    auto* sub = app.add_subcommand(name, about);
    sub->add_option("--config", config_path, "INI experiment config");
    sub->add_option("--model", model, "tfim, tlfim or a Pauli-sum file");
    sub->add_option("--sites", sites, "number of sites L");
    sub->add_option("--coupling", coupling, "coupling J_X");
    sub->add_option("--steps", steps, "flow steps N");
    sub->add_option("--policy", policy, "canonical, variational or list");
    sub->add_option("--seed", seed, "RNG seed");
    sub->add_option("--out", out, "output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dbf::exit_config_error;
  }

  const CLI::App* sub = app.get_subcommands().front();
  o.experiment = dbf::parse_experiment(sub->get_name());
  if (sub->count("--model")) o.model = model;
  if (sub->count("--sites")) o.sites = sites;
  if (sub->count("--coupling")) o.coupling = coupling;
  if (sub->count("--steps")) o.steps = steps;
  if (sub->count("--policy")) o.policy = policy;
  if (sub->count("--seed")) o.seed = seed;
  if (sub->count("--out")) o.out = out;

  dbf::RunConfig config;
  try {
    config = config_path.empty() ? dbf::config_from_overrides(o) : dbf::parse_config(config_path, o);
  } catch (const dbf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return dbf::exit_config_error;
  }

  try {
    const dbf::RunManifest m = dbf::execute(config);
    std::cerr << m.status << " (" << m.files.size() << " files in " << config.out.string() << ", "
              << m.wall_seconds << " s)\n";
    return m.exit_code;
  } catch (const dbf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return dbf::exit_config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
