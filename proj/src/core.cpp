#include "hisd/core.hpp"

#include "hisd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace hisd {

namespace {

constexpr unsigned long long kStepCheckSeed = 0x5eedULL;
constexpr std::size_t kStepCheckSamples = 64;

bool all_finite(const Vector& v) { return v.allFinite(); }

void require_same_dimension(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw ArgumentError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
  }
}

void require_state_shape(const SolverState& state) {
  if (state.V.rows() != state.x.size()) {
    throw ArgumentError("frame rows (" + std::to_string(state.V.rows()) + ") differ from dimension of x (" +
                        std::to_string(state.x.size()) + ")");
  }
}

void check_invariants(const SolverState& state, const SaddleParams& params) {
  const ConstraintDefects defects = constraint_defects(state);
  if (defects.sphere > 1e-12 || defects.tangency > params.orthonormality_tol ||
      defects.orthonormality > params.orthonormality_tol) {
    std::ostringstream msg;
    msg << "step " << state.n << " left the constraint set: | |x|-1 | = " << defects.sphere
        << ", max |v.x| = " << defects.tangency << ", max |v.v - delta| = " << defects.orthonormality;
    throw ConsistencyError(msg.str());
  }
}

}  // namespace

void SaddleParams::validate() const {
  if (k < 1) throw ArgumentError("k must be >= 1");
  if (!(alpha > 0.0)) throw ArgumentError("alpha must be positive");
  if (!(beta > 0.0)) throw ArgumentError("beta must be positive");
  if (!(tau > 0.0)) throw ArgumentError("tau must be positive");
  if (!(T >= tau)) throw ArgumentError("T must be >= tau");
  if (!(theta > 0.0 && theta < 1.0)) throw ArgumentError("theta must lie in (0, 1)");
}

double probe_value(const StepProbes& probes, std::size_t field) {
  switch (field) {
    case 0: return probes.retraction_defect;
    case 1: return probes.max_tilde_cross;
    case 2: return probes.max_tilde_norm_defect;
    case 3: return probes.max_transport_shift;
    case 4: return probes.max_hat_cross;
    case 5: return probes.max_hat_norm_defect;
    case 6: return probes.max_gs_shift;
    default: throw ArgumentError("probe field out of range");
  }
}

ConstraintDefects constraint_defects(const Vector& x, const Frame& V) {
  ConstraintDefects out;
  out.sphere = std::abs(x.norm() - 1.0);
  if (V.cols() > 0) {
    out.tangency = (V.transpose() * x).cwiseAbs().maxCoeff();
    const Eigen::MatrixXd gram = V.transpose() * V - Eigen::MatrixXd::Identity(V.cols(), V.cols());
    out.orthonormality = gram.cwiseAbs().maxCoeff();
  }
  return out;
}

ConstraintDefects constraint_defects(const SolverState& state) { return constraint_defects(state.x, state.V); }

std::size_t step_count(double T, double tau) {
  if (!(tau > 0.0) || !(T > 0.0)) {
    throw ArgumentError("T and tau must be positive");
  }
  const double ratio = T / tau;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) {
    std::ostringstream msg;
    msg << "T / tau = " << ratio << " is not a positive integer";
    throw ArgumentError(msg.str());
  }
  return static_cast<std::size_t>(rounded);
}

// ---------------------------------------------------------------------------

Vector drift_x(const SolverState& state, const Vector& force, const SaddleParams& params) {
  require_same_dimension(state.x, force, "drift_x");
  Vector dir = force - state.x.dot(force) * state.x;
  dir.noalias() -= 2.0 * state.V * (state.V.transpose() * force);
  return state.x + params.tau * params.alpha * dir;
}

Vector drift_x(const EnergyLandscape& landscape, const SolverState& state, const SaddleParams& params) {
  require_state_shape(state);
  const Vector force = landscape.force(state.x);
  if (!all_finite(force)) {
    throw NumericalError("non-finite force at step " + std::to_string(state.n), state.n);
  }
  return drift_x(state, force, params);
}

Vector retract(const Vector& x_tilde, double degenerate_tol) {
  const double norm = x_tilde.norm();
  if (!(norm > degenerate_tol)) {
    std::ostringstream msg;
    msg << "degenerate retraction: |x~| = " << norm;
    throw DegenerateError(msg.str());
  }
  return x_tilde / norm;
}

Vector drift_v(const SolverState& state, int i, const Vector& hv, const Vector& force, const SaddleParams& params) {
  if (i < 0 || i >= state.k()) {
    throw ArgumentError("drift_v: eigen-index " + std::to_string(i) + " out of range");
  }
  const Vector& x = state.x;
  const auto v = state.V.col(i);
  Vector dir = hv - x.dot(hv) * x - v.dot(hv) * v;
  if (i > 0) {
    const auto previous = state.V.leftCols(i);
    dir.noalias() -= 2.0 * previous * (previous.transpose() * hv);
  }
  const double step = params.tau * params.beta;
  return v + step * dir + (step * v.dot(force)) * x;
}

Vector drift_v(const EnergyLandscape& landscape, const SolverState& state, int i, const SaddleParams& params) {
  require_state_shape(state);
  if (i < 0 || i >= state.k()) {
    throw ArgumentError("drift_v: eigen-index " + std::to_string(i) + " out of range");
  }
  const Vector force = landscape.force(state.x);
  const Vector hv = landscape.hessian_action(state.x, state.V.col(i));
  if (!all_finite(force)) {
    throw NumericalError("non-finite force at step " + std::to_string(state.n), state.n);
  }
  if (!all_finite(hv)) {
    throw NumericalError("non-finite Hessian action at step " + std::to_string(state.n) + ", eigen-index " +
                             std::to_string(i + 1),
                         state.n);
  }
  return drift_v(state, i, hv, force, params);
}

Vector transport(const Vector& v_tilde, const Vector& x_new) {
  require_same_dimension(v_tilde, x_new, "transport");
  return v_tilde - v_tilde.dot(x_new) * x_new;
}

Frame orthonormalize(const Frame& V_hat, const SaddleParams& params) {
  Frame V(V_hat.rows(), V_hat.cols());
  for (Eigen::Index i = 0; i < V_hat.cols(); ++i) {
    const auto hat = V_hat.col(i);
    if (!hat.allFinite()) {
      throw NumericalError("non-finite frame vector " + std::to_string(i + 1), 0);
    }
    Vector residual = hat;
    double projected_sq = 0.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double c = hat.dot(V.col(j));
      residual.noalias() -= c * V.col(j);
      projected_sq += c * c;
    }
    const double norm = residual.norm();
    if (!(norm > params.y_degenerate_tol)) {
      std::ostringstream msg;
      msg << "degenerate frame: residual of vector " << (i + 1) << " has norm " << norm;
      throw DegenerateError(msg.str());
    }
    if (params.verify_gram_schmidt) {
      const double y = std::sqrt(std::max(0.0, hat.squaredNorm() - projected_sq));
      if (std::abs(norm - y) > 1e-8) {
        std::ostringstream msg;
        msg << "Gram-Schmidt normalizer mismatch at vector " << (i + 1) << ": residual " << norm << ", Y " << y;
        throw ConsistencyError(msg.str());
      }
    }
    V.col(i) = residual / norm;
  }
  return V;
}

StepResult step(const EnergyLandscape& landscape, const SolverState& state, const SaddleParams& params) {
  require_state_shape(state);
  const std::size_t n = state.n + 1;
  const int k = state.k();

  const Vector force = landscape.force(state.x);
  if (!all_finite(force)) {
    throw NumericalError("non-finite force at step " + std::to_string(n), n);
  }

  StepProbes probes;
  const Vector x_tilde = drift_x(state, force, params);
  probes.retraction_defect = std::abs(1.0 - x_tilde.norm());
  Vector x_new = retract(x_tilde, params.y_degenerate_tol);

  Frame V_tilde(state.V.rows(), k);
  for (int i = 0; i < k; ++i) {
    const Vector hv = landscape.hessian_action(state.x, state.V.col(i));
    if (!all_finite(hv)) {
      throw NumericalError("non-finite Hessian action at step " + std::to_string(n) + ", eigen-index " +
                               std::to_string(i + 1),
                           n);
    }
    V_tilde.col(i) = drift_v(state, i, hv, force, params);
  }

  Frame V_hat(state.V.rows(), k);
  for (int i = 0; i < k; ++i) {
    V_hat.col(i) = transport(V_tilde.col(i), x_new);
  }

  Frame V_new;
  try {
    V_new = orthonormalize(V_hat, params);
  } catch (const DegenerateError& e) {
    throw DegenerateError(std::string(e.what()) + " at step " + std::to_string(n));
  }

  for (int i = 0; i < k; ++i) {
    probes.max_tilde_norm_defect = std::max(probes.max_tilde_norm_defect, std::abs(V_tilde.col(i).squaredNorm() - 1));
    probes.max_hat_norm_defect = std::max(probes.max_hat_norm_defect, std::abs(V_hat.col(i).squaredNorm() - 1));
    probes.max_transport_shift = std::max(probes.max_transport_shift, (V_hat.col(i) - V_tilde.col(i)).norm());
    probes.max_gs_shift = std::max(probes.max_gs_shift, (V_new.col(i) - V_hat.col(i)).norm());
    for (int m = 0; m < i; ++m) {
      probes.max_tilde_cross = std::max(probes.max_tilde_cross, std::abs(V_tilde.col(m).dot(V_tilde.col(i))));
      probes.max_hat_cross = std::max(probes.max_hat_cross, std::abs(V_hat.col(m).dot(V_hat.col(i))));
    }
  }

  StepResult result{SolverState{n, std::move(x_new), std::move(V_new)}, probes};
  check_invariants(result.state, params);
  return result;
}

SolverState step_unconstrained(const EnergyLandscape& landscape, const SolverState& state,
                               const SaddleParams& params) {
  require_state_shape(state);
  const std::size_t n = state.n + 1;
  const Vector force = landscape.force(state.x);
  if (!all_finite(force)) {
    throw NumericalError("non-finite force at step " + std::to_string(n), n);
  }
  Vector dir = force;
  dir.noalias() -= 2.0 * state.V * (state.V.transpose() * force);
  Vector x_new = state.x + params.tau * params.alpha * dir;

  Frame V_tilde(state.V.rows(), state.k());
  for (int i = 0; i < state.k(); ++i) {
    const Vector hv = landscape.hessian_action(state.x, state.V.col(i));
    if (!all_finite(hv)) {
      throw NumericalError("non-finite Hessian action at step " + std::to_string(n), n);
    }
    const auto v = state.V.col(i);
    Vector dv = hv - v.dot(hv) * v;
    if (i > 0) {
      const auto previous = state.V.leftCols(i);
      dv.noalias() -= 2.0 * previous * (previous.transpose() * hv);
    }
    V_tilde.col(i) = v + params.tau * params.beta * dv;
  }
  return SolverState{n, std::move(x_new), orthonormalize(V_tilde, params)};
}

Trajectory integrate(const EnergyLandscape& landscape, const SolverState& initial, const SaddleParams& params,
                     const IntegrateOptions& options) {
  params.validate();
  require_state_shape(initial);
  if (initial.x.size() != landscape.dimension()) {
    throw ArgumentError("initial state dimension does not match the landscape");
  }
  if (initial.k() != params.k) {
    throw ArgumentError("initial frame has " + std::to_string(initial.k()) + " vectors, params.k = " +
                        std::to_string(params.k));
  }
  if (options.record_every == 0) {
    throw ArgumentError("record_every must be positive");
  }
  const std::size_t N = step_count(params.T, params.tau);
  check_invariants(initial, params);

  Trajectory traj;
  traj.params = params;
  if (options.check_step_size) {
    std::vector<Vector> samples = random_sphere_points(landscape.dimension(), kStepCheckSamples, kStepCheckSeed);
    samples.push_back(initial.x);
    traj.operator_bound = estimate_operator_bound(landscape, samples);
    traj.step_size_warning = std::sqrt(2.0) * params.beta * traj.operator_bound * params.tau > 1.0 - params.theta;
  }

  traj.probes.reserve(N);
  traj.states.reserve(N / options.record_every + 2);
  traj.times.reserve(N / options.record_every + 2);

  SolverState current = initial;
  current.n = 0;
  traj.times.push_back(0.0);
  traj.states.push_back(current);
  for (std::size_t n = 1; n <= N; ++n) {
    StepResult next;
    try {
      next = step(landscape, current, params);
    } catch (const NumericalError& e) {
      std::ostringstream msg;
      msg << e.what() << " (t = " << static_cast<double>(n) * params.tau << ")";
      throw NumericalError(msg.str(), n);
    } catch (const DegenerateError& e) {
      std::ostringstream msg;
      msg << e.what() << " (t = " << static_cast<double>(n) * params.tau << ")";
      throw DegenerateError(msg.str());
    }
    current = std::move(next.state);
    traj.probes.push_back(next.probes);
    if (n % options.record_every == 0 || n == N) {
      traj.times.push_back(static_cast<double>(n) * params.tau);
      traj.states.push_back(current);
    }
  }
  return traj;
}

SolverState prepare_initial_state(const Vector& x0_raw, const Frame& V0_raw, const SaddleParams& params) {
  if (V0_raw.rows() != x0_raw.size()) {
    throw ArgumentError("initial frame rows do not match the dimension of x0");
  }
  if (V0_raw.cols() >= x0_raw.size()) {
    throw ArgumentError("frame size k must be smaller than the dimension");
  }
  Vector x0;
  try {
    x0 = retract(x0_raw, params.y_degenerate_tol);
  } catch (const DegenerateError&) {
    throw DegenerateError("initial point x0 is zero");
  }
  Frame projected(V0_raw.rows(), V0_raw.cols());
  for (Eigen::Index i = 0; i < V0_raw.cols(); ++i) {
    projected.col(i) = transport(V0_raw.col(i), x0);
  }
  Frame V0;
  try {
    // A second pass cleans up the rounding left by a nearly dependent raw frame.
    V0 = orthonormalize(orthonormalize(projected, params), params);
  } catch (const DegenerateError& e) {
    throw DegenerateError(std::string("initial frame: ") + e.what());
  }
  return SolverState{0, std::move(x0), std::move(V0)};
}

RhsValue continuous_rhs_unchecked(const EnergyLandscape& landscape, const Vector& x, const Frame& V,
                                  const SaddleParams& params) {
  const Vector force = landscape.force(x);
  RhsValue out;
  out.dx = force - x.dot(force) * x;
  out.dx.noalias() -= 2.0 * V * (V.transpose() * force);
  out.dx *= params.alpha;

  out.dV.resize(V.rows(), V.cols());
  for (Eigen::Index i = 0; i < V.cols(); ++i) {
    const auto v = V.col(i);
    const Vector hv = landscape.hessian_action(x, v);
    Vector dv = hv - x.dot(hv) * x - v.dot(hv) * v;
    if (i > 0) {
      const auto previous = V.leftCols(i);
      dv.noalias() -= 2.0 * previous * (previous.transpose() * hv);
    }
    dv += v.dot(force) * x;
    out.dV.col(i) = params.beta * dv;
  }
  return out;
}

RhsValue continuous_rhs(const EnergyLandscape& landscape, const Vector& x, const Frame& V,
                        const SaddleParams& params) {
  if (V.rows() != x.size()) {
    throw ArgumentError("continuous_rhs: frame rows do not match dimension of x");
  }
  const ConstraintDefects defects = constraint_defects(x, V);
  if (std::max({defects.sphere, defects.tangency, defects.orthonormality}) > 1e-6) {
    throw ArgumentError("continuous_rhs: (x, V) violates the sphere/frame constraints");
  }
  return continuous_rhs_unchecked(landscape, x, V, params);
}

}  // namespace hisd
