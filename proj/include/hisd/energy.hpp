#pragma once

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <vector>

namespace hisd {

using Vector = Eigen::VectorXd;

/**
 * @brief Smooth energy E: R^d -> R together with its natural force and
 *        negative-Hessian action.
 *
 * Conventions: force(x) = -grad E(x), hessian_action(x, w) = -Hess E(x) w.
 * The Hessian is only ever exposed as a matrix-vector product. Subclasses
 * that do not override hessian_action get a central difference of force.
 *
 * Implementations are immutable after construction, so a landscape may be
 * evaluated concurrently from several threads.
 */
class EnergyLandscape {
public:
  virtual ~EnergyLandscape() = default;

  [[nodiscard]] virtual Eigen::Index dimension() const = 0;

  [[nodiscard]] double energy(const Vector& x) const;
  [[nodiscard]] Vector force(const Vector& x) const;
  [[nodiscard]] Vector hessian_action(const Vector& x, const Vector& w) const;

  /// Step length used by the finite-difference Hessian fallback.
  [[nodiscard]] virtual double fd_step() const { return 1e-4; }

protected:
  [[nodiscard]] virtual double energy_impl(const Vector& x) const = 0;
  [[nodiscard]] virtual Vector force_impl(const Vector& x) const = 0;
  [[nodiscard]] virtual Vector hessian_action_impl(const Vector& x, const Vector& w) const;

private:
  void check_dimension(const Vector& v, const char* what) const;
};

/// H(x) w ~ (F(x + l w/|w|) - F(x - l w/|w|)) |w| / (2 l).
[[nodiscard]] Vector fd_hessian_action(const EnergyLandscape& landscape, const Vector& x, const Vector& w,
                                       double step);

/// E(x1, x2) = x1^4 - p x1^2 + x2^4 - x2^2 + q x1^2 x2^2.
class FourWellEnergy final : public EnergyLandscape {
public:
  FourWellEnergy(double p, double q) : p_(p), q_(q) {}

  [[nodiscard]] Eigen::Index dimension() const override { return 2; }
  [[nodiscard]] double p() const { return p_; }
  [[nodiscard]] double q() const { return q_; }

protected:
  [[nodiscard]] double energy_impl(const Vector& x) const override;
  [[nodiscard]] Vector force_impl(const Vector& x) const override;
  [[nodiscard]] Vector hessian_action_impl(const Vector& x, const Vector& w) const override;

private:
  double p_;
  double q_;
};

/// Two coupled Rosenbrock valleys in R^3:
/// E = a(s x2 - 3x1^2)^2 + b(s x1 - 1)^2 + a(s x3 - 3x2^2)^2 + b(s x2 - 1)^2, s = sqrt(3).
class RosenbrockChainEnergy final : public EnergyLandscape {
public:
  RosenbrockChainEnergy(double a, double b) : a_(a), b_(b) {}

  [[nodiscard]] Eigen::Index dimension() const override { return 3; }

protected:
  [[nodiscard]] double energy_impl(const Vector& x) const override;
  [[nodiscard]] Vector force_impl(const Vector& x) const override;
  [[nodiscard]] Vector hessian_action_impl(const Vector& x, const Vector& w) const override;

private:
  double a_;
  double b_;
};

/// E(x) = x^T D x / 2 with D = diag(eigenvalues). On the unit sphere the basis
/// vector e_{k+1} is an index-k constrained saddle when the eigenvalues increase.
class QuadraticSphereEnergy final : public EnergyLandscape {
public:
  explicit QuadraticSphereEnergy(Vector eigenvalues);

  /// eigenvalues 1, 2, ..., d
  static QuadraticSphereEnergy with_linear_spectrum(Eigen::Index d);

  [[nodiscard]] Eigen::Index dimension() const override { return eigenvalues_.size(); }
  [[nodiscard]] const Vector& eigenvalues() const { return eigenvalues_; }

protected:
  [[nodiscard]] double energy_impl(const Vector& x) const override;
  [[nodiscard]] Vector force_impl(const Vector& x) const override;
  [[nodiscard]] Vector hessian_action_impl(const Vector& x, const Vector& w) const override;

private:
  Vector eigenvalues_;
};

struct OperatorBoundOptions {
  int power_iterations = 30;
  double power_tolerance = 1e-6;
};

/// Spectral norm of w -> H(x) w by power iteration from a fixed start vector.
[[nodiscard]] double hessian_norm_estimate(const EnergyLandscape& landscape, const Vector& x,
                                           const OperatorBoundOptions& options = {});

/**
 * Estimate of max over the sphere of |F(x)| + |H(x)|, taken over the given
 * sample points (each normalized first). Used to check the step-size
 * condition sqrt(2) beta L tau <= 1 - theta and the retraction defect bound.
 */
[[nodiscard]] double estimate_operator_bound(const EnergyLandscape& landscape, std::span<const Vector> samples,
                                             const OperatorBoundOptions& options = {});

/// Uniform points on S^{d-1} (normalized Gaussians) from a seeded generator.
[[nodiscard]] std::vector<Vector> random_sphere_points(Eigen::Index d, std::size_t count, unsigned long long seed);

}  // namespace hisd
