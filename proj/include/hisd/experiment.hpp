#pragma once

#include "hisd/core.hpp"
#include "hisd/energy.hpp"
#include "hisd/errors.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hisd {

enum class Mode { Run, Converge, Lemmas, Pathway, IndexRobust };
enum class EnergyKind { FourWell, Rosenbrock, Quadratic };

[[nodiscard]] std::optional<Mode> parse_mode(std::string_view name);
[[nodiscard]] std::string_view mode_name(Mode mode);

/// Rejected configuration; key() names the offending entry.
class ConfigError : public ArgumentError {
public:
  ConfigError(std::string key, const std::string& message)
      : ArgumentError("config key '" + key + "': " + message), key_(std::move(key)) {}

  [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

/// Output file could not be created or written.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Mode mode = Mode::Run;
  EnergyKind energy = EnergyKind::FourWell;
  std::vector<double> energy_params;
  int d = 0;
  int k = 1;
  double alpha = 1.0;
  double beta = 1.0;
  double tau = 0.0;
  double T = 1.0;
  double theta = 0.1;
  std::optional<Vector> x0;
  std::optional<Frame> V0;  ///< d x k, columns are the raw frame vectors
  std::vector<double> tau_list;
  double tau_ref = 1.0 / 8192.0;
  std::uint64_t seed = 0;
  std::string output_dir = ".";
  std::size_t record_every = 1;
  /// pathway: starting points (x0 is used when empty) and the expected saddle
  std::vector<Vector> initials;
  std::optional<Vector> target;
  /// index-robust: indices to sweep and alpha = beta = q0 / k
  std::vector<int> k_list;
  double q0 = 1.0;

  [[nodiscard]] SaddleParams saddle_params() const;
};

/**
 * Parses a flat JSON document. Keys: energy, energy_params, d, k, alpha, beta,
 * tau, T, theta, x0, V0, tau_list, tau_ref, seed, mode, output_dir,
 * record_every, initials, target, k_list, q0. Step sizes may be numbers or
 * strings of the form "2^-m". `mode_override` takes precedence over the
 * document's mode. Throws ConfigError naming the offending key.
 */
[[nodiscard]] ExperimentConfig parse_config(std::string_view text, std::optional<Mode> mode_override = std::nullopt);

[[nodiscard]] std::unique_ptr<EnergyLandscape> make_landscape(const ExperimentConfig& config);

/// From x0/V0 when given, otherwise seeded random data (see random_initial_state).
[[nodiscard]] SolverState initial_state(const ExperimentConfig& config, const Vector* x0_override = nullptr);

/// Runs the configured experiment and writes its CSV files into output_dir.
/// Returns 0 on success, 1 for configuration errors, 2 for solver errors and
/// 3 for I/O errors; the failing stage is reported on `log`.
int run_experiment(const ExperimentConfig& config, std::ostream& log);

}  // namespace hisd
