#include "hisd/energy.hpp"

#include "hisd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace hisd {

void EnergyLandscape::check_dimension(const Vector& v, const char* what) const {
  if (v.size() != dimension()) {
    throw ArgumentError(std::string(what) + " has dimension " + std::to_string(v.size()) + ", landscape expects " +
                        std::to_string(dimension()));
  }
}

double EnergyLandscape::energy(const Vector& x) const {
  check_dimension(x, "x");
  return energy_impl(x);
}

Vector EnergyLandscape::force(const Vector& x) const {
  check_dimension(x, "x");
  return force_impl(x);
}

Vector EnergyLandscape::hessian_action(const Vector& x, const Vector& w) const {
  check_dimension(x, "x");
  check_dimension(w, "w");
  return hessian_action_impl(x, w);
}

Vector EnergyLandscape::hessian_action_impl(const Vector& x, const Vector& w) const {
  return fd_hessian_action(*this, x, w, fd_step());
}

Vector fd_hessian_action(const EnergyLandscape& landscape, const Vector& x, const Vector& w, double step) {
  const double norm = w.norm();
  if (norm == 0.0) {
    return Vector::Zero(x.size());
  }
  const Vector dir = w / norm;
  return (landscape.force(x + step * dir) - landscape.force(x - step * dir)) * (norm / (2.0 * step));
}

// ---------------------------------------------------------------------------
// Four-well

double FourWellEnergy::energy_impl(const Vector& x) const {
  const double a = x[0] * x[0];
  const double b = x[1] * x[1];
  return a * a - p_ * a + b * b - b + q_ * a * b;
}

Vector FourWellEnergy::force_impl(const Vector& x) const {
  const double x1 = x[0];
  const double x2 = x[1];
  Vector f(2);
  f[0] = -(4 * x1 * x1 * x1 - 2 * p_ * x1 + 2 * q_ * x1 * x2 * x2);
  f[1] = -(4 * x2 * x2 * x2 - 2 * x2 + 2 * q_ * x1 * x1 * x2);
  return f;
}

Vector FourWellEnergy::hessian_action_impl(const Vector& x, const Vector& w) const {
  const double x1 = x[0];
  const double x2 = x[1];
  const double h11 = 12 * x1 * x1 - 2 * p_ + 2 * q_ * x2 * x2;
  const double h12 = 4 * q_ * x1 * x2;
  const double h22 = 12 * x2 * x2 - 2 + 2 * q_ * x1 * x1;
  Vector out(2);
  out[0] = -(h11 * w[0] + h12 * w[1]);
  out[1] = -(h12 * w[0] + h22 * w[1]);
  return out;
}

// ---------------------------------------------------------------------------
// Rosenbrock chain

namespace {
const double kSqrt3 = std::sqrt(3.0);
}

double RosenbrockChainEnergy::energy_impl(const Vector& x) const {
  const double u1 = kSqrt3 * x[1] - 3 * x[0] * x[0];
  const double u2 = kSqrt3 * x[2] - 3 * x[1] * x[1];
  const double r1 = kSqrt3 * x[0] - 1;
  const double r2 = kSqrt3 * x[1] - 1;
  return a_ * u1 * u1 + b_ * r1 * r1 + a_ * u2 * u2 + b_ * r2 * r2;
}

Vector RosenbrockChainEnergy::force_impl(const Vector& x) const {
  const double u1 = kSqrt3 * x[1] - 3 * x[0] * x[0];
  const double u2 = kSqrt3 * x[2] - 3 * x[1] * x[1];
  Vector g(3);
  g[0] = -12 * a_ * u1 * x[0] + 2 * kSqrt3 * b_ * (kSqrt3 * x[0] - 1);
  g[1] = 2 * kSqrt3 * a_ * u1 - 12 * a_ * u2 * x[1] + 2 * kSqrt3 * b_ * (kSqrt3 * x[1] - 1);
  g[2] = 2 * kSqrt3 * a_ * u2;
  return -g;
}

Vector RosenbrockChainEnergy::hessian_action_impl(const Vector& x, const Vector& w) const {
  const double u1 = kSqrt3 * x[1] - 3 * x[0] * x[0];
  const double u2 = kSqrt3 * x[2] - 3 * x[1] * x[1];
  const double h11 = 72 * a_ * x[0] * x[0] - 12 * a_ * u1 + 6 * b_;
  const double h12 = -12 * kSqrt3 * a_ * x[0];
  const double h22 = 6 * a_ + 72 * a_ * x[1] * x[1] - 12 * a_ * u2 + 6 * b_;
  const double h23 = -12 * kSqrt3 * a_ * x[1];
  const double h33 = 6 * a_;
  Vector out(3);
  out[0] = -(h11 * w[0] + h12 * w[1]);
  out[1] = -(h12 * w[0] + h22 * w[1] + h23 * w[2]);
  out[2] = -(h23 * w[1] + h33 * w[2]);
  return out;
}

// ---------------------------------------------------------------------------
// Quadratic

QuadraticSphereEnergy::QuadraticSphereEnergy(Vector eigenvalues) : eigenvalues_(std::move(eigenvalues)) {
  if (eigenvalues_.size() == 0) {
    throw ArgumentError("quadratic energy needs at least one eigenvalue");
  }
}

QuadraticSphereEnergy QuadraticSphereEnergy::with_linear_spectrum(Eigen::Index d) {
  return QuadraticSphereEnergy(Vector::LinSpaced(d, 1.0, static_cast<double>(d)));
}

double QuadraticSphereEnergy::energy_impl(const Vector& x) const {
  return 0.5 * x.dot(eigenvalues_.cwiseProduct(x));
}

Vector QuadraticSphereEnergy::force_impl(const Vector& x) const { return -eigenvalues_.cwiseProduct(x); }

Vector QuadraticSphereEnergy::hessian_action_impl(const Vector& /*x*/, const Vector& w) const {
  return -eigenvalues_.cwiseProduct(w);
}

// ---------------------------------------------------------------------------
// Operator bound

double hessian_norm_estimate(const EnergyLandscape& landscape, const Vector& x, const OperatorBoundOptions& options) {
  const Eigen::Index d = landscape.dimension();
  // Fixed, generic start vector; deterministic across runs.
  Vector w(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    w[i] = 1.0 + 0.5 * std::sin(1.0 + 2.0 * static_cast<double>(i));
  }
  w.normalize();

  double estimate = 0.0;
  for (int it = 0; it < options.power_iterations; ++it) {
    Vector hw = landscape.hessian_action(x, w);
    const double next = hw.norm();
    if (next == 0.0) {
      return 0.0;
    }
    w = hw / next;
    const bool converged = std::abs(next - estimate) <= options.power_tolerance * next;
    estimate = next;
    if (converged) {
      break;
    }
  }
  return estimate;
}

double estimate_operator_bound(const EnergyLandscape& landscape, std::span<const Vector> samples,
                               const OperatorBoundOptions& options) {
  if (samples.empty()) {
    throw ArgumentError("estimate_operator_bound: empty sample list");
  }
  double bound = 0.0;
  for (const Vector& raw : samples) {
    const double norm = raw.norm();
    if (norm == 0.0) {
      throw ArgumentError("estimate_operator_bound: zero sample point");
    }
    const Vector x = raw / norm;
    bound = std::max(bound, landscape.force(x).norm() + hessian_norm_estimate(landscape, x, options));
  }
  return bound;
}

std::vector<Vector> random_sphere_points(Eigen::Index d, std::size_t count, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Vector> points;
  points.reserve(count);
  while (points.size() < count) {
    Vector x(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      x[i] = normal(rng);
    }
    const double norm = x.norm();
    if (norm > 0.0) {
      points.emplace_back(x / norm);
    }
  }
  return points;
}

}  // namespace hisd
