#pragma once

#include "hisd/core.hpp"
#include "hisd/energy.hpp"

#include <atomic>
#include <cstddef>

namespace hisd::test {

/// Forwards to another landscape and counts evaluations.
class CountingLandscape final : public EnergyLandscape {
public:
  explicit CountingLandscape(const EnergyLandscape& inner) : inner_(inner) {}

  [[nodiscard]] Eigen::Index dimension() const override { return inner_.dimension(); }

  mutable std::atomic<std::size_t> forces{0};
  mutable std::atomic<std::size_t> hessian_actions{0};

protected:
  [[nodiscard]] double energy_impl(const Vector& x) const override { return inner_.energy(x); }
  [[nodiscard]] Vector force_impl(const Vector& x) const override {
    ++forces;
    return inner_.force(x);
  }
  [[nodiscard]] Vector hessian_action_impl(const Vector& x, const Vector& w) const override {
    ++hessian_actions;
    return inner_.hessian_action(x, w);
  }

private:
  const EnergyLandscape& inner_;
};

/// Four-well landscape without an analytic Hessian, so the finite-difference fallback applies.
class FourWellNoHessian final : public EnergyLandscape {
public:
  FourWellNoHessian(double p, double q) : inner_(p, q) {}
  [[nodiscard]] Eigen::Index dimension() const override { return 2; }

protected:
  [[nodiscard]] double energy_impl(const Vector& x) const override { return inner_.energy(x); }
  [[nodiscard]] Vector force_impl(const Vector& x) const override { return inner_.force(x); }

private:
  FourWellEnergy inner_;
};

class ZeroLandscape final : public EnergyLandscape {
public:
  explicit ZeroLandscape(Eigen::Index d) : d_(d) {}
  [[nodiscard]] Eigen::Index dimension() const override { return d_; }

protected:
  [[nodiscard]] double energy_impl(const Vector&) const override { return 0.0; }
  [[nodiscard]] Vector force_impl(const Vector&) const override { return Vector::Zero(d_); }
  [[nodiscard]] Vector hessian_action_impl(const Vector&, const Vector&) const override { return Vector::Zero(d_); }

private:
  Eigen::Index d_;
};

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double value : values) v[i++] = value;
  return v;
}

/// Frame from column vectors.
inline Frame frame(std::initializer_list<Vector> columns) {
  const Eigen::Index d = columns.begin()->size();
  Frame V(d, static_cast<Eigen::Index>(columns.size()));
  Eigen::Index j = 0;
  for (const Vector& c : columns) V.col(j++) = c;
  return V;
}

inline SaddleParams params_with(int k, double tau, double T = 1.0, double alpha = 1.0, double beta = 1.0) {
  SaddleParams p;
  p.k = k;
  p.tau = tau;
  p.T = T;
  p.alpha = alpha;
  p.beta = beta;
  return p;
}

}  // namespace hisd::test
