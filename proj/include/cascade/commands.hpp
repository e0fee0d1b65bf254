#ifndef CASCADE_COMMANDS_HPP
#define CASCADE_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cascade/config.hpp"
#include "cascade/solver.hpp"
#include "cascade/stability.hpp"

namespace cascade {

/// Exit statuses: a negative verdict is still a successful computation.
enum ExitStatus : int { kExitOk = 0, kExitError = 1, kExitNegative = 2 };

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  bool force = false;
  std::optional<double> h_min;
  std::optional<double> h_max;
  std::optional<int> points;
  std::vector<double> mu;
  std::vector<double> gamma;
  std::optional<double> tau;
};

/// A configured system ready to integrate from an initial history.
struct SystemSetup {
  std::string kind;
  int k = 1;
  double tau = 0.0;
  Vector target;
  std::function<Trajectory(const InitialHistory&)> integrate;
};

SystemSetup make_system(const RunConfig& cfg);
InitialHistory make_history(const RunConfig& cfg, const SystemSetup& sys, std::uint64_t seed);

/// Slopes gamma_j of the cascade translated to its steady state; Dirac
/// kernels fill tau_points, any other kernel clears point_delays.
LinearizationData linearize(const CascadeSpec& spec, const SteadyState& ss);

/// Cone slopes (alpha_1, ..., alpha_k) of the cascade at its steady state.
/// Exact for Hill feedback, sampled otherwise (a note says which).
Vector cone_slopes(const CascadeSpec& spec, const SteadyState& ss, std::vector<std::string>& notes);

struct SweepRun {
  std::uint64_t seed = 0;
  bool converged = false;
  double deviation = 0.0;
  std::string error;
};

struct SweepReport {
  int runs = 0;
  int converged = 0;
  double worst_deviation = 0.0;
  std::vector<SweepRun> failures;
  std::vector<SweepRun> all;
};

/// Integrates from random histories with seeds first_seed .. first_seed + runs - 1
/// on up to `threads` workers (0: hardware concurrency). Results are
/// independent of the thread count.
SweepReport run_sweep(const RunConfig& cfg, int runs, std::uint64_t first_seed,
                      unsigned threads = 0);

/// Whether the configured system is certified globally stable.
bool certified_stable(const RunConfig& cfg, std::string& reason);

int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& log);
int cmd_check_stability(const CommandOptions& opts, std::ostream& out, std::ostream& log);
int cmd_check_hes1(const CommandOptions& opts, std::ostream& out, std::ostream& log);
int cmd_hopf(const CommandOptions& opts, std::ostream& out, std::ostream& log);
int cmd_region(const CommandOptions& opts, std::ostream& out, std::ostream& log);
int cmd_attractor(const CommandOptions& opts, std::ostream& out, std::ostream& log);
int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& log);

/// Dispatches by subcommand name; any exception becomes kExitError with the
/// message on `log`.
int run_command(const std::string& name, const CommandOptions& opts, std::ostream& out,
                std::ostream& log);

/// Write-then-rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace cascade

#endif  // CASCADE_COMMANDS_HPP
