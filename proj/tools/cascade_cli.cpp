// Command-line front end for the cascade analysis library.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cascade/commands.hpp"

namespace {

struct Flags {
  std::string config, out;
  std::uint64_t seed = 0;
  int runs = 0;
  bool force = false;
  double h_min = 0.0, h_max = 0.0;
  int points = 0;
  std::vector<double> mu, gamma;
  double tau = 0.0;
};

cascade::CommandOptions to_options(CLI::App& sub, const Flags& f) {
  cascade::CommandOptions o;
  if (sub.count("--config")) o.config = f.config;
  if (sub.count("--out")) o.out = f.out;
  if (sub.count("--seed")) o.seed = f.seed;
  if (sub.count("--runs")) o.runs = f.runs;
  if (sub.count("--h-min")) o.h_min = f.h_min;
  if (sub.count("--h-max")) o.h_max = f.h_max;
  if (sub.count("--points")) o.points = f.points;
  if (sub.count("--tau")) o.tau = f.tau;
  o.force = f.force;
  o.mu = f.mu;
  o.gamma = f.gamma;
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stability analysis and simulation of delayed feedback cascades"};
  app.require_subcommand(1);
  Flags flags;

  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "Integrate the configured system and write its trajectory"},
      {"check-stability", "Global-stability verdict for a linearisation or a config"},
      {"check-hes1", "Global-stability test for the Hes1 model"},
      {"hopf", "Critical frequency and delay of the Hopf boundary"},
      {"region-curve", "Critical ratio as a function of the Hill exponent"},
      {"attractor", "Nested-box strong-attractor certificate"},
      {"sweep", "Monte Carlo convergence test from random initial histories"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config, "Config file")->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "Directory for CSV output (default: stdout)");
    sub->add_option("--seed", flags.seed, "Seed (first seed for sweep)");
    sub->add_option("--runs", flags.runs, "Number of sweep runs")->check(CLI::PositiveNumber);
    sub->add_flag("--force", flags.force, "Sweep uncertified parameters");
    sub->add_option("--h-min", flags.h_min, "Smallest Hill exponent");
    sub->add_option("--h-max", flags.h_max, "Largest Hill exponent");
    sub->add_option("--points", flags.points, "Number of exponents")->check(CLI::PositiveNumber);
    sub->add_option("--mu", flags.mu, "Rates mu_j")->delimiter(',');
    sub->add_option("--gamma", flags.gamma, "Slopes gamma_j")->delimiter(',');
    sub->add_option("--tau", flags.tau, "Total point delay")->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cascade::kExitError;
  }
  CLI::App* sub = app.get_subcommands().front();
  return cascade::run_command(sub->get_name(), to_options(*sub, flags), std::cout, std::cerr);
}
