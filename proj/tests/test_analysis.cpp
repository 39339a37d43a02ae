#include "hisd/analysis.hpp"
#include "hisd/errors.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>

using namespace hisd;
using hisd::test::frame;
using hisd::test::params_with;
using hisd::test::vec;

namespace {

SolverState fourwell_initial() {
  return prepare_initial_state(vec({1, 1}), frame({vec({-1, 1})}));
}

double pow2(int m) { return std::ldexp(1.0, m); }

std::vector<double> dyadic_range(int first, int last) {
  std::vector<double> out;
  for (int m = first; m <= last; ++m) out.push_back(pow2(-m));
  return out;
}

}  // namespace

TEST_CASE("is_dyadic") {
  CHECK(is_dyadic(1.0));
  CHECK(is_dyadic(0.25));
  CHECK(is_dyadic(pow2(-13)));
  CHECK(is_dyadic(4.0));
  CHECK_FALSE(is_dyadic(0.1));
  CHECK_FALSE(is_dyadic(0.75));
  CHECK_FALSE(is_dyadic(0.0));
  CHECK_FALSE(is_dyadic(-0.5));
}

TEST_CASE("pointwise errors") {
  const FourWellEnergy e(5, 1);
  const SaddleParams p = params_with(1, pow2(-5));
  const Trajectory coarse = integrate(e, fourwell_initial(), p);

  SUBCASE("self comparison is zero") {
    const ErrorReport r = pointwise_errors(coarse, coarse);
    CHECK(r.err_x == 0.0);
    CHECK(r.err_v[0] == 0.0);
    CHECK(r.err_v_avg == 0.0);
    const std::array<double, 1> taus{p.tau};
    const Trajectory ref = reference_solution(e, fourwell_initial(), p, p.tau, taus);
    CHECK(pointwise_errors(coarse, ref).err_x == 0.0);
  }
  SUBCASE("averaged norm is bounded by the mean of the per-direction maxima") {
    const QuadraticSphereEnergy q(Vector::LinSpaced(6, 1, 6));
    const SaddleParams pq = params_with(3, pow2(-4));
    const SolverState init = random_initial_state(6, 3, 2);
    const std::array<double, 1> taus{pq.tau};
    const Trajectory ref = reference_solution(q, init, pq, pow2(-9), taus);
    const ErrorReport r = pointwise_errors(integrate(q, init, pq), ref);
    CHECK(r.err_v_avg <= r.err_v_sum() / 3 + 1e-15);
    CHECK(r.err_v_avg > 0.0);
    for (double ev : r.err_v) CHECK(r.err_v_avg <= ev * 3);
  }
  SUBCASE("reference must be nested") {
    const SaddleParams odd = params_with(1, 0.1, 1.0);
    const Trajectory other = integrate(e, fourwell_initial(), odd);
    CHECK_THROWS_AS((void)pointwise_errors(coarse, other), ArgumentError);
    const std::array<double, 1> taus{pow2(-5)};
    CHECK_THROWS_AS((void)reference_solution(e, fourwell_initial(), p, 0.3 * pow2(-5), taus), ArgumentError);
  }
  SUBCASE("reference keeps only the coarse nodes it needs") {
    const std::array<double, 2> taus{pow2(-5), pow2(-6)};
    const Trajectory ref = reference_solution(e, fourwell_initial(), p, pow2(-10), taus);
    CHECK(ref.states.size() == 65);
    CHECK(ref.states[1].n == 16);
  }
}

TEST_CASE("convergence table rates") {
  std::vector<ErrorReport> reports(3);
  reports[0].tau = 0.5;
  reports[0].err_x = 0.4;
  reports[0].err_v = {0.8};
  reports[0].err_v_avg = 0.8;
  reports[1].tau = 0.25;
  reports[1].err_x = 0.2;
  reports[1].err_v = {0.2};
  reports[1].err_v_avg = 0.2;
  reports[2] = reports[1];
  reports[2].tau = 0.125;
  const ConvergenceTable t = make_convergence_table(reports, 1.0 / 64);
  CHECK_FALSE(t.rows[0].rate_x.has_value());
  CHECK(*t.rows[1].rate_x == doctest::Approx(1.0));
  CHECK(*t.rows[1].rate_v[0] == doctest::Approx(2.0));
  CHECK(*t.rows[2].rate_avg == doctest::Approx(0.0));
}

TEST_CASE("first-order convergence on a quadratic landscape") {
  const QuadraticSphereEnergy q(Vector::LinSpaced(5, 1, 5));
  const SaddleParams p = params_with(2, pow2(-5));
  const auto taus = dyadic_range(5, 8);
  const ConvergenceTable table = convergence_study(q, random_initial_state(5, 2, 0), p, taus, pow2(-13));
  REQUIRE(table.rows.size() == 4);
  for (std::size_t r = 1; r < table.rows.size(); ++r) {
    CHECK(*table.rows[r].rate_x >= 0.8);
    CHECK(*table.rows[r].rate_x <= 1.2);
    CHECK(*table.rows[r].rate_avg >= 0.8);
    CHECK(*table.rows[r].rate_avg <= 1.2);
    for (const auto& rate : table.rows[r].rate_v) {
      CHECK(*rate >= 0.8);
      CHECK(*rate <= 1.2);
    }
  }
}

TEST_CASE("convergence study argument checks") {
  const FourWellEnergy e(5, 1);
  const SaddleParams p = params_with(1, pow2(-5));
  const std::vector<double> increasing{pow2(-6), pow2(-5)};
  CHECK_THROWS_AS((void)convergence_study(e, fourwell_initial(), p, increasing, pow2(-10)), ArgumentError);
  const std::vector<double> non_dyadic{0.1};
  CHECK_THROWS_AS((void)convergence_study(e, fourwell_initial(), p, non_dyadic, pow2(-10)), ArgumentError);
  const std::vector<double> too_fine{pow2(-11)};
  CHECK_THROWS_AS((void)convergence_study(e, fourwell_initial(), p, too_fine, pow2(-10)), ArgumentError);
}

TEST_CASE("studies do not depend on the worker count") {
  const FourWellEnergy e(10, 5);
  const SaddleParams p = params_with(1, pow2(-4));
  const auto taus = dyadic_range(4, 7);
  ::setenv("HISD_WORKERS", "1", 1);
  const ConvergenceTable serial = convergence_study(e, fourwell_initial(), p, taus, pow2(-10));
  ::setenv("HISD_WORKERS", "4", 1);
  const ConvergenceTable parallel = convergence_study(e, fourwell_initial(), p, taus, pow2(-10));
  ::unsetenv("HISD_WORKERS");
  for (std::size_t r = 0; r < serial.rows.size(); ++r) {
    CHECK(serial.rows[r].errors.err_x == parallel.rows[r].errors.err_x);
    CHECK(serial.rows[r].errors.err_v == parallel.rows[r].errors.err_v);
  }
}

TEST_CASE("slope fit") {
  const std::vector<double> taus{0.5, 0.25, 0.125};
  const std::vector<double> values{3 * 0.25, 3 * 0.0625, 3 * 0.015625};
  CHECK(fit_log2_slope(taus, values) == doctest::Approx(2.0));
  CHECK_THROWS_AS((void)fit_log2_slope(std::span(taus).first(1), std::span(values).first(1)), ArgumentError);
}

TEST_CASE("lemma scaling") {
  SUBCASE("index one: cross probes are exactly zero, retraction scales like tau^2") {
    const FourWellEnergy e(5, 1);
    const auto taus = dyadic_range(6, 10);
    const LemmaScalingReport r = lemma_scaling_study(e, fourwell_initial(), params_with(1, pow2(-6)), taus);
    REQUIRE(r.probes.size() == kProbeCount);
    CHECK_FALSE(r.probes[1].exponent.has_value());  // max_tilde_cross
    CHECK_FALSE(r.probes[4].exponent.has_value());  // max_hat_cross
    // in two dimensions v~ is already tangent at the new point; only rounding remains
    CHECK(r.probes[3].roundoff_zero);
    CHECK(exponent_label(r.probes[3]) == "roundoff-zero");
    CHECK(exponent_label(r.probes[1]) == "exact-zero");
    REQUIRE(r.probes[0].exponent.has_value());
    CHECK(*r.probes[0].exponent >= 1.7);
    CHECK(*r.probes[0].exponent <= 2.3);
    CHECK(r.all_second_order());
  }
  SUBCASE("quadratic d = 5, k = 3: every probe is second order") {
    const QuadraticSphereEnergy q(Vector::LinSpaced(5, 1, 5));
    const auto taus = dyadic_range(6, 10);
    const LemmaScalingReport r = lemma_scaling_study(q, random_initial_state(5, 3, 0), params_with(3, pow2(-6)), taus);
    for (const ProbeScaling& probe : r.probes) {
      INFO(std::string(probe.name));
      REQUIRE(probe.exponent.has_value());
      CHECK(*probe.exponent >= 1.7);
    }
  }
}

TEST_CASE("halving tau divides every probe maximum by about four") {
  const FourWellEnergy fw(5, 1);
  const QuadraticSphereEnergy q(Vector::LinSpaced(5, 1, 5));
  const auto taus = dyadic_range(7, 9);
  const LemmaScalingReport reports[] = {
      lemma_scaling_study(fw, fourwell_initial(), params_with(1, pow2(-7)), taus),
      lemma_scaling_study(q, random_initial_state(5, 3, 0), params_with(3, pow2(-7)), taus),
  };
  for (const auto& report : reports) {
    for (const ProbeScaling& probe : report.probes) {
      if (!probe.exponent) continue;
      for (std::size_t t = 1; t < probe.taus.size(); ++t) {
        INFO(std::string(probe.name) << " at tau = " << probe.taus[t]);
        const double factor = probe.max_values[t - 1] / probe.max_values[t];
        CHECK(factor >= 3.0);
        CHECK(factor <= 5.0);
      }
    }
  }
}

TEST_CASE("pathway study") {
  const RosenbrockChainEnergy e(2, -9.8);
  const std::vector<SolverState> initials{prepare_initial_state(vec({2, -3, 4}), frame({vec({1, 1, 0})}))};
  const Vector target = Vector::Constant(3, 1 / std::sqrt(3.0));
  const auto taus = dyadic_range(9, 10);
  const auto results = pathway_convergence_study(e, initials, params_with(1, pow2(-9), 5.0), taus, target);
  REQUIRE(results.size() == 1);
  REQUIRE(results[0].rows.size() == 2);
  CHECK(results[0].trajectories.size() == 3);
  CHECK(results[0].trajectories.back().params.tau == pow2(-11));
  CHECK(results[0].rows[0].cauchy_difference > results[0].rows[1].cauchy_difference);
  CHECK(results[0].rows[1].endpoint_distance < 0.05);
  CHECK(cauchy_difference(results[0].trajectories[0], results[0].trajectories[0]) == 0.0);
}

TEST_CASE("random initial states") {
  const SolverState a = random_initial_state(10, 2, 5);
  const SolverState b = random_initial_state(10, 4, 5);
  CHECK((a.x - b.x).norm() == 0.0);
  CHECK((a.V.col(0) - b.V.col(0)).norm() < 1e-15);
  CHECK((a.V.col(1) - b.V.col(1)).norm() < 1e-15);
  const ConstraintDefects d = constraint_defects(b);
  CHECK(d.sphere < 1e-15);
  CHECK(d.tangency < 1e-14);
  CHECK(d.orthonormality < 1e-14);
  CHECK((random_initial_state(10, 2, 6).x - a.x).norm() > 0.0);
  CHECK_THROWS_AS((void)random_initial_state(3, 3, 0), ArgumentError);
}

TEST_CASE("index-robust study bookkeeping") {
  IndexRobustConfig cfg;
  cfg.d = 8;
  cfg.k_list = {1};
  cfg.tau = pow2(-4);
  cfg.tau_ref = pow2(-8);
  const IndexRobustReport single = index_robust_study(cfg);
  CHECK(single.ratio == 1.0);

  cfg.k_list = {2, 4};
  const IndexRobustReport two = index_robust_study(cfg);
  REQUIRE(two.rows.size() == 2);
  CHECK(two.rows[1].alpha == 0.25);
  CHECK(two.rows[1].beta == 0.25);
  CHECK(two.ratio >= 1.0);

  cfg.scaling = RelaxationScaling::Fixed;
  CHECK(index_robust_study(cfg).rows[1].alpha == 1.0);

  cfg.k_list = {8};
  CHECK_THROWS_AS((void)index_robust_study(cfg), ArgumentError);
}

TEST_CASE("fourth-order oracle agrees with the fine Euler reference") {
  const FourWellEnergy e(5, 1);
  const SaddleParams p = params_with(1, pow2(-13));
  const Trajectory oracle = integrate_oracle_rk4(e, fourwell_initial(), p, 32);
  const std::array<double, 1> taus{pow2(-8)};
  const Trajectory euler = reference_solution(e, fourwell_initial(), p, pow2(-13), taus);
  REQUIRE(oracle.states.size() == euler.states.size());
  double gap = 0.0;
  for (std::size_t i = 0; i < oracle.states.size(); ++i) {
    gap = std::max(gap, (oracle.states[i].x - euler.states[i].x).norm());
  }
  CHECK(gap < 5e-3);
  CHECK(gap > 0.0);
}
