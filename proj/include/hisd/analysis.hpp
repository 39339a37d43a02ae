#pragma once

#include "hisd/core.hpp"
#include "hisd/energy.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hisd {

/// True when tau is exactly 2^{-m} (or 2^m) for some integer m.
[[nodiscard]] bool is_dyadic(double tau);

/// Worker count from HISD_WORKERS, falling back to the hardware concurrency.
[[nodiscard]] unsigned worker_count();

struct ErrorReport {
  double tau = 0.0;
  double err_x = 0.0;               ///< max_n |x(t_n) - x_n|
  std::vector<double> err_v;        ///< max_n |v_i(t_n) - v_{i,n}|, one per i
  double err_v_avg = 0.0;           ///< max_n (1/k) sum_i |v_i(t_n) - v_{i,n}|

  [[nodiscard]] double err_v_sum() const;
};

/**
 * Integrates at tau_ref, keeping a snapshot at every node of the coarsest
 * grid that still resolves all of coarse_taus. Every coarse tau must be an
 * integer multiple of tau_ref.
 */
[[nodiscard]] Trajectory reference_solution(const EnergyLandscape& landscape, const SolverState& initial,
                                            const SaddleParams& params, double tau_ref,
                                            std::span<const double> coarse_taus);

/// Max-over-n errors of `coarse` against `reference` at every coarse node n = 1 ... N.
[[nodiscard]] ErrorReport pointwise_errors(const Trajectory& coarse, const Trajectory& reference);

struct ConvergenceRow {
  ErrorReport errors;
  std::optional<double> rate_x;
  std::vector<std::optional<double>> rate_v;
  std::optional<double> rate_avg;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double reference_tau = 0.0;
};

[[nodiscard]] double log2_rate(double coarse_error, double fine_error);

/// Fills in log2 rates between consecutive rows.
[[nodiscard]] ConvergenceTable make_convergence_table(std::vector<ErrorReport> reports, double reference_tau);

/// One run per tau against a single reference at tau_ref; tau_list must be
/// dyadic, strictly decreasing and coarser than tau_ref.
[[nodiscard]] ConvergenceTable convergence_study(const EnergyLandscape& landscape, const SolverState& initial,
                                                 const SaddleParams& params, std::span<const double> tau_list,
                                                 double tau_ref);

struct ProbeScaling {
  const char* name = "";
  std::vector<double> taus;
  std::vector<double> max_values;
  /// Least-squares slope of log2(max value) against log2(tau); empty when the
  /// probe is exactly zero, or only rounding noise, for every tau.
  std::optional<double> exponent;
  /// Nonzero but below kRoundoffFloor at every tau.
  bool roundoff_zero = false;
  /// exponent < 1.7
  bool flagged = false;
};

/// Probe maxima below this are treated as rounding noise around a structural zero.
inline constexpr double kRoundoffFloor = 1e-13;

/// "exact-zero", "roundoff-zero" or the fitted exponent.
[[nodiscard]] std::string exponent_label(const ProbeScaling& probe);

struct LemmaScalingReport {
  std::vector<ProbeScaling> probes;  // kProbeCount entries, in kProbeNames order

  [[nodiscard]] bool all_second_order() const;
};

[[nodiscard]] double fit_log2_slope(std::span<const double> taus, std::span<const double> values);

[[nodiscard]] LemmaScalingReport lemma_scaling_study(const EnergyLandscape& landscape, const SolverState& initial,
                                                     const SaddleParams& params, std::span<const double> tau_list);

struct PathwayRow {
  double tau = 0.0;
  double cauchy_difference = 0.0;  ///< max_n |x^tau(t_n) - x^{tau/2}(t_n)|
  double endpoint_distance = 0.0;  ///< |x^tau(T) - target|
};

struct PathwayResult {
  std::vector<PathwayRow> rows;
  /// Trajectories for tau_list plus the extra half step, finest last.
  std::vector<Trajectory> trajectories;
};

/// max_n |x^coarse(t_n) - x^fine(t_n)| over the coarse nodes; the fine step
/// must divide the coarse one and the fine run must be recorded every step.
[[nodiscard]] double cauchy_difference(const Trajectory& coarse, const Trajectory& fine);

/// For each initial state, runs every tau in tau_list and tau_min / 2, and
/// compares each run with its refinement.
[[nodiscard]] std::vector<PathwayResult> pathway_convergence_study(const EnergyLandscape& landscape,
                                                                   std::span<const SolverState> initials,
                                                                   const SaddleParams& params,
                                                                   std::span<const double> tau_list,
                                                                   const Vector& target);

/// x0 is e_1 reflected through a seeded Gaussian hyperplane; the frame is a
/// seeded Gaussian d x k matrix repaired by prepare_initial_state. The first
/// columns of the raw frame do not depend on k.
[[nodiscard]] SolverState random_initial_state(Eigen::Index d, int k, unsigned long long seed);

enum class RelaxationScaling {
  PerIndex,  ///< alpha = beta = q0 / k
  Fixed,     ///< alpha = beta = q0
};

struct IndexRobustConfig {
  Eigen::Index d = 40;
  std::vector<int> k_list{2, 4, 8};
  double q0 = 1.0;
  double tau = 1.0 / 256.0;
  double tau_ref = 1.0 / 8192.0;
  double T = 1.0;
  unsigned long long seed = 0;
  /// Defaults to 1, 2, ..., d.
  std::optional<Vector> eigenvalues;
  RelaxationScaling scaling = RelaxationScaling::PerIndex;
};

struct IndexRobustRow {
  int k = 0;
  double alpha = 0.0;
  double beta = 0.0;
  ErrorReport errors;

  [[nodiscard]] double total() const { return errors.err_x + errors.err_v_avg; }
};

struct IndexRobustReport {
  std::vector<IndexRobustRow> rows;
  /// max_k / min_k of err_x + err_v_avg
  double ratio = 1.0;
};

[[nodiscard]] IndexRobustReport index_robust_study(const IndexRobustConfig& config);

/**
 * Classical fourth-order Runge-Kutta on the exact right-hand side with step
 * params.tau. After each step x is renormalized and the frame is repaired as
 * in prepare_initial_state. Probes are not recorded.
 */
[[nodiscard]] Trajectory integrate_oracle_rk4(const EnergyLandscape& landscape, const SolverState& initial,
                                              const SaddleParams& params, std::size_t record_every = 1);

}  // namespace hisd
