#ifndef CASCADE_CONFIG_HPP
#define CASCADE_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascade/model.hpp"

namespace cascade {

/// Parse or validation failure; key() names the offending entry, e.g. "model.mu[1]".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& msg)
      : std::runtime_error(key.empty() ? msg : key + ": " + msg), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Delay kernel of one equation: dirac (params {at}), uniform (params {a, b})
/// or table (path to an s,density CSV).
struct KernelEntry {
  std::string kind;
  std::vector<double> params;
  std::string path;
  bool operator==(const KernelEntry&) const = default;
};

struct ModelSection {
  int k = 1;
  std::vector<double> mu;
  std::vector<double> alpha;
  /// hill | table | affine
  std::string feedback = "hill";
  /// {hill.mu, hill.b, hill.h}
  std::vector<double> hill;
  std::vector<double> table_x;
  std::vector<double> table_y;
  double slope = 0.0;
  double intercept = 0.0;
  bool operator==(const ModelSection&) const = default;
};

struct DelaysSection {
  double tau = 0.0;
  std::vector<KernelEntry> kernels;
  bool operator==(const DelaysSection&) const = default;
};

/// x' = b x(t - tau)(1 - x) - c x
struct CookeSection {
  double b = 0.5;
  double c = 1.0;
  double tau = 1.0;
  bool operator==(const CookeSection&) const = default;
};

struct SimulationSection {
  double t_end = 200.0;
  double step = 0.01;
  /// constant | random
  std::string history = "random";
  std::vector<double> history_value;
  std::vector<double> history_bounds{0.0, 3.0};
  int history_nodes = 32;
  std::uint64_t seed = 1;
  int mc_runs = 100;
  /// Convergence test: sup |x - x*| <= tol over the trailing window.
  double tol = 1e-6;
  double window = 10.0;
  bool operator==(const SimulationSection&) const = default;
};

struct AnalysisSection {
  int m_max = 200;
  int samples_per_face = 1000;
  int majorant_nodes = 4096;
  double cone_margin = 1e-3;
  double attractor_tol = 1e-8;
  double omega_max = 1e4;
  int mikhailov_samples = 200000;
  bool operator==(const AnalysisSection&) const = default;
};

struct OutputSection {
  std::string dir;
  int precision = 17;
  bool operator==(const OutputSection&) const = default;
};

struct RunConfig {
  std::optional<ModelSection> model;
  std::optional<Hes1RawParams> hes1;
  std::optional<CookeSection> cooke;
  std::optional<DelaysSection> delays;
  SimulationSection simulation;
  AnalysisSection analysis;
  OutputSection output;
  /// Directory relative paths are resolved against.
  std::filesystem::path base_dir;

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = {});
std::string serialize_config(const RunConfig& cfg);

/// The cascade described by [model] and [delays].
CascadeSpec build_cascade(const RunConfig& cfg);

/// Reads a two-column CSV (s, density) for a tabulated kernel.
std::pair<std::vector<double>, std::vector<double>> read_kernel_table(
    const std::filesystem::path& path);

}  // namespace cascade

#endif  // CASCADE_CONFIG_HPP
