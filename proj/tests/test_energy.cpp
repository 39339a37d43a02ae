#include "hisd/energy.hpp"
#include "hisd/errors.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

using namespace hisd;
using hisd::test::vec;

namespace {

const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

std::vector<std::unique_ptr<EnergyLandscape>> builtins() {
  std::vector<std::unique_ptr<EnergyLandscape>> out;
  out.push_back(std::make_unique<FourWellEnergy>(5, 1));
  out.push_back(std::make_unique<FourWellEnergy>(10, 5));
  out.push_back(std::make_unique<RosenbrockChainEnergy>(2, -9.8));
  out.push_back(std::make_unique<QuadraticSphereEnergy>(vec({1, 2, 3, 4, 5})));
  return out;
}

}  // namespace

TEST_CASE("four-well energy values") {
  const FourWellEnergy e(5, 1);
  CHECK(e.energy(vec({0, 0})) == 0.0);
  CHECK(e.energy(vec({kInvSqrt2, kInvSqrt2})) == doctest::Approx(-2.25).epsilon(1e-14));

  const Vector f0 = e.force(vec({0, 0}));
  CHECK(f0.norm() == 0.0);

  const Vector f = e.force(vec({kInvSqrt2, kInvSqrt2}));
  CHECK(f[0] == doctest::Approx(4.9497474683058327).epsilon(1e-14));
  CHECK(f[1] == doctest::Approx(-0.70710678118654713).epsilon(1e-14));
}

TEST_CASE("four-well Hessian at the origin is diag(2p, 2)") {
  const FourWellEnergy e(5, 1);
  const Vector hw = e.hessian_action(vec({0, 0}), vec({1, 0}));
  CHECK(hw[0] == doctest::Approx(10.0));
  CHECK(hw[1] == doctest::Approx(0.0));
  // independent check: central difference of the force
  const Vector fd = fd_hessian_action(e, vec({0, 0}), vec({1, 0}), 1e-4);
  CHECK(fd[0] == doctest::Approx(10.0).epsilon(1e-7));
  CHECK(std::abs(fd[1]) < 1e-10);
}

TEST_CASE("quadratic energy") {
  const QuadraticSphereEnergy two(vec({1, 2}));
  CHECK(two.energy(vec({1, 0})) == doctest::Approx(0.5));
  const Vector f = two.force(vec({0, 1}));
  CHECK(f[0] == 0.0);
  CHECK(f[1] == -2.0);

  const QuadraticSphereEnergy three(vec({1, 2, 3}));
  const Vector hw = three.hessian_action(vec({0.3, -0.2, 0.9}), vec({1, 1, 1}));
  CHECK(hw[0] == -1.0);
  CHECK(hw[1] == -2.0);
  CHECK(hw[2] == -3.0);

  const auto linear = QuadraticSphereEnergy::with_linear_spectrum(4);
  CHECK(linear.eigenvalues()[3] == 4.0);
  CHECK_THROWS_AS(QuadraticSphereEnergy{Vector()}, ArgumentError);
}

TEST_CASE("dimension mismatch is an argument error") {
  const FourWellEnergy e(5, 1);
  CHECK_THROWS_AS((void)e.energy(vec({1, 2, 3})), ArgumentError);
  CHECK_THROWS_AS((void)e.force(vec({1})), ArgumentError);
  CHECK_THROWS_AS((void)e.hessian_action(vec({1, 0}), vec({1, 0, 0})), ArgumentError);
}

TEST_CASE("force and Hessian match central differences on the sphere") {
  const double h = 1e-5;
  for (const auto& e : builtins()) {
    const Eigen::Index d = e->dimension();
    for (const Vector& x : random_sphere_points(d, 20, 7)) {
      const Vector f = e->force(x);
      for (Eigen::Index i = 0; i < d; ++i) {
        const Vector ei = Vector::Unit(d, i);
        const double dE = (e->energy(x + h * ei) - e->energy(x - h * ei)) / (2 * h);
        CHECK(std::abs(dE + f[i]) <= 1e-6 * (1 + std::abs(f[i])));
      }
      for (Eigen::Index j = 0; j < d; ++j) {
        const Vector ej = Vector::Unit(d, j);
        const Vector column = (e->force(x + h * ej) - e->force(x - h * ej)) / (2 * h);
        const Vector hej = e->hessian_action(x, ej);
        for (Eigen::Index i = 0; i < d; ++i) {
          CHECK(std::abs(column[i] - hej[i]) <= 1e-5 * (1 + std::abs(hej[i])));
        }
      }
    }
  }
}

TEST_CASE("Hessian action is symmetric") {
  for (const auto& e : builtins()) {
    const Eigen::Index d = e->dimension();
    const auto xs = random_sphere_points(d, 10, 11);
    const auto ws = random_sphere_points(d, 20, 12);
    for (std::size_t s = 0; s < xs.size(); ++s) {
      const Vector& w1 = ws[2 * s];
      const Vector& w2 = ws[2 * s + 1];
      const double asym = w1.dot(e->hessian_action(xs[s], w2)) - w2.dot(e->hessian_action(xs[s], w1));
      CHECK(std::abs(asym) <= 1e-10 * (1 + hessian_norm_estimate(*e, xs[s])));
    }
  }
}

TEST_CASE("finite-difference fallback approximates the analytic Hessian") {
  const test::FourWellNoHessian fd(5, 1);
  const FourWellEnergy exact(5, 1);
  for (const Vector& x : random_sphere_points(2, 10, 3)) {
    const Vector w = vec({0.3, -1.7});
    const Vector approx = fd.hessian_action(x, w);
    const Vector truth = exact.hessian_action(x, w);
    CHECK((approx - truth).norm() <= 1e-6 * (1 + truth.norm()));
  }
  CHECK(fd.hessian_action(vec({0.6, 0.8}), vec({0, 0})).norm() == 0.0);
}

TEST_CASE("operator bound") {
  SUBCASE("quadratic (1, 2) over the circle is 4") {
    const QuadraticSphereEnergy e(vec({1, 2}));
    std::vector<Vector> circle;
    for (int i = 0; i < 720; ++i) {
      const double t = 2 * std::numbers::pi * i / 720;
      circle.push_back(vec({std::cos(t), std::sin(t)}));
    }
    CHECK(estimate_operator_bound(e, circle) == doctest::Approx(4.0).epsilon(1e-6));
  }
  SUBCASE("zero landscape") {
    const test::ZeroLandscape zero(3);
    const auto pts = random_sphere_points(3, 5, 1);
    CHECK(estimate_operator_bound(zero, pts) == 0.0);
  }
  SUBCASE("four-well: finite and monotone in the number of samples") {
    const FourWellEnergy e(5, 1);
    const auto pts = random_sphere_points(2, 1000, 99);
    double previous = 0.0;
    for (std::size_t count : {10U, 100U, 500U, 1000U}) {
      const double bound = estimate_operator_bound(e, std::span(pts).first(count));
      CHECK(std::isfinite(bound));
      CHECK(bound >= previous);
      previous = bound;
    }
    // dense deterministic sampling as the oracle
    std::vector<Vector> dense;
    for (int i = 0; i < 20000; ++i) {
      const double t = 2 * std::numbers::pi * i / 20000;
      dense.push_back(vec({std::cos(t), std::sin(t)}));
    }
    CHECK(previous <= estimate_operator_bound(e, dense) * (1 + 1e-6));
  }
  SUBCASE("samples are normalized first") {
    const QuadraticSphereEnergy e(vec({1, 2}));
    const std::vector<Vector> scaled{vec({0, 5})};
    CHECK(estimate_operator_bound(e, scaled) == doctest::Approx(4.0));
  }
  SUBCASE("empty sample list") {
    const QuadraticSphereEnergy e(vec({1, 2}));
    CHECK_THROWS_AS((void)estimate_operator_bound(e, std::span<const Vector>{}), ArgumentError);
  }
}
