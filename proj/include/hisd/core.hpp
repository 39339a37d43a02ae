#pragma once

#include "hisd/energy.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <vector>

namespace hisd {

/// Columns are the tangent directions v_1 ... v_k (d x k).
using Frame = Eigen::MatrixXd;

struct SaddleParams {
  int k = 1;
  double alpha = 1.0;
  double beta = 1.0;
  double tau = 0.0;
  double T = 1.0;
  double theta = 0.1;
  double orthonormality_tol = 1e-10;
  double y_degenerate_tol = 1e-12;
  /// Cross-check the residual-norm normalization against the closed-form Y_i.
  bool verify_gram_schmidt = false;

  /// Throws ArgumentError unless k >= 1, alpha, beta, tau > 0, T >= tau, 0 < theta < 1.
  void validate() const;
};

struct SolverState {
  std::size_t n = 0;
  Vector x;
  Frame V;

  [[nodiscard]] int k() const { return static_cast<int>(V.cols()); }
};

/// Per-step defects whose O(tau^2) size underpins the first-order error estimate.
struct StepProbes {
  double retraction_defect = 0.0;      ///< |1 - |x~||
  double max_tilde_cross = 0.0;        ///< max_{m<i} |v~_m . v~_i|
  double max_tilde_norm_defect = 0.0;  ///< max_i ||v~_i|^2 - 1|
  double max_transport_shift = 0.0;    ///< max_i |v^_i - v~_i|
  double max_hat_cross = 0.0;          ///< max_{m<i} |v^_m . v^_i|
  double max_hat_norm_defect = 0.0;    ///< max_i ||v^_i|^2 - 1|
  double max_gs_shift = 0.0;           ///< max_i |v_i - v^_i|
};

inline constexpr std::size_t kProbeCount = 7;
inline constexpr const char* kProbeNames[kProbeCount] = {
    "retraction_defect", "max_tilde_cross",    "max_tilde_norm_defect", "max_transport_shift",
    "max_hat_cross",     "max_hat_norm_defect", "max_gs_shift"};

[[nodiscard]] double probe_value(const StepProbes& probes, std::size_t field);

struct Trajectory {
  SaddleParams params;
  std::vector<double> times;
  std::vector<SolverState> states;
  /// probes[n - 1] belongs to the step producing x_n.
  std::vector<StepProbes> probes;
  /// Estimate of max |F| + |H| used for the step-size check.
  double operator_bound = 0.0;
  /// sqrt(2) beta L tau > 1 - theta for the estimated L.
  bool step_size_warning = false;

  [[nodiscard]] std::size_t steps() const { return probes.size(); }
};

/// Largest violation of |x| = 1, v_i . x = 0 and v_i . v_j = delta_ij.
struct ConstraintDefects {
  double sphere = 0.0;
  double tangency = 0.0;
  double orthonormality = 0.0;
};

[[nodiscard]] ConstraintDefects constraint_defects(const SolverState& state);
[[nodiscard]] ConstraintDefects constraint_defects(const Vector& x, const Frame& V);

// --- Individual stages of one step -----------------------------------------

/// x + tau alpha (F - (x.F) x - 2 sum_j (v_j.F) v_j), with F = F(x).
[[nodiscard]] Vector drift_x(const EnergyLandscape& landscape, const SolverState& state, const SaddleParams& params);
[[nodiscard]] Vector drift_x(const SolverState& state, const Vector& force, const SaddleParams& params);

[[nodiscard]] Vector retract(const Vector& x_tilde, double degenerate_tol = 1e-12);

/**
 * v_i + tau beta [w - (x.w) x - (v_i.w) v_i - 2 sum_{j<i} (v_j.w) v_j] + tau beta (v_i.F) x,
 * with w = H(x) v_i. The index i is zero-based; x and all v_j are taken
 * from the old state.
 */
[[nodiscard]] Vector drift_v(const EnergyLandscape& landscape, const SolverState& state, int i,
                             const SaddleParams& params);
[[nodiscard]] Vector drift_v(const SolverState& state, int i, const Vector& hv, const Vector& force,
                             const SaddleParams& params);

/// v~ - (v~ . x_new) x_new
[[nodiscard]] Vector transport(const Vector& v_tilde, const Vector& x_new);

/// Gram-Schmidt on the columns, in order: v_i is the normalized residual of
/// v^_i after removing its components along v_1 ... v_{i-1}. Throws
/// DegenerateError naming the column whose residual collapses.
[[nodiscard]] Frame orthonormalize(const Frame& V_hat, const SaddleParams& params);

struct StepResult {
  SolverState state;
  StepProbes probes;
};

/// One step of the constrained scheme: drift, retraction, transport, Gram-Schmidt.
/// Evaluates the force once and the Hessian action k times.
[[nodiscard]] StepResult step(const EnergyLandscape& landscape, const SolverState& state, const SaddleParams& params);

/// Explicit Euler on the unconstrained dynamics followed by Gram-Schmidt of the frame.
[[nodiscard]] SolverState step_unconstrained(const EnergyLandscape& landscape, const SolverState& state,
                                             const SaddleParams& params);

struct IntegrateOptions {
  std::size_t record_every = 1;
  /// Skip the operator-bound estimate (and therefore the step-size warning).
  bool check_step_size = true;
};

/// Runs N = T / tau steps. Snapshots at n = 0, every record_every steps and n = N.
[[nodiscard]] Trajectory integrate(const EnergyLandscape& landscape, const SolverState& initial,
                                   const SaddleParams& params, const IntegrateOptions& options = {});

/// Retracts x0 onto the sphere, projects each frame column onto its tangent
/// space and orthonormalizes. Throws DegenerateError if the frame collapses.
[[nodiscard]] SolverState prepare_initial_state(const Vector& x0_raw, const Frame& V0_raw,
                                                const SaddleParams& params = {});

struct RhsValue {
  Vector dx;
  Frame dV;
};

/// Exact right-hand side of the constrained dynamics. Requires (x, V) to
/// satisfy the constraints within 1e-6.
[[nodiscard]] RhsValue continuous_rhs(const EnergyLandscape& landscape, const Vector& x, const Frame& V,
                                      const SaddleParams& params);
/// Same as continuous_rhs without the constraint check (used by integrators
/// whose intermediate stages leave the sphere slightly).
[[nodiscard]] RhsValue continuous_rhs_unchecked(const EnergyLandscape& landscape, const Vector& x, const Frame& V,
                                                const SaddleParams& params);

/// N = T / tau, requiring T / tau to be a positive integer.
[[nodiscard]] std::size_t step_count(double T, double tau);

}  // namespace hisd
