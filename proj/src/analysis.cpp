#include "hisd/analysis.hpp"

#include "hisd/errors.hpp"
#include "parallel.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>

namespace hisd {

namespace {

/// tau / tau_ref as an exact positive integer, or ArgumentError.
std::size_t stride_between(double tau, double tau_ref) {
  const double ratio = tau / tau_ref;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) {
    std::ostringstream msg;
    msg << "grid tau = " << tau << " is not nested in reference grid tau_ref = " << tau_ref;
    throw ArgumentError(msg.str());
  }
  return static_cast<std::size_t>(rounded);
}

void require_decreasing_dyadic(std::span<const double> taus, double tau_ref) {
  if (taus.empty()) {
    throw ArgumentError("tau list is empty");
  }
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!is_dyadic(taus[i])) {
      throw ArgumentError("tau = " + std::to_string(taus[i]) + " is not a power of two");
    }
    if (i > 0 && !(taus[i] < taus[i - 1])) {
      throw ArgumentError("tau list must be strictly decreasing");
    }
    if (tau_ref > 0.0 && !(taus[i] > tau_ref)) {
      throw ArgumentError("every tau must be coarser than tau_ref");
    }
  }
}

Trajectory run_at(const EnergyLandscape& landscape, const SolverState& initial, SaddleParams params, double tau,
                  std::size_t record_every = 1) {
  params.tau = tau;
  return integrate(landscape, initial, params, IntegrateOptions{record_every, true});
}

}  // namespace

bool is_dyadic(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) return false;
  int exponent = 0;
  const double mantissa = std::frexp(tau, &exponent);
  return mantissa == 0.5;
}

unsigned worker_count() {
  if (const char* env = std::getenv("HISD_WORKERS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && value > 0) {
      return static_cast<unsigned>(value);
    }
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

double ErrorReport::err_v_sum() const { return std::accumulate(err_v.begin(), err_v.end(), 0.0); }

Trajectory reference_solution(const EnergyLandscape& landscape, const SolverState& initial,
                              const SaddleParams& params, double tau_ref, std::span<const double> coarse_taus) {
  if (!(tau_ref > 0.0)) {
    throw ArgumentError("tau_ref must be positive");
  }
  std::size_t stride = 0;
  for (double tau : coarse_taus) {
    const std::size_t s = stride_between(tau, tau_ref);
    stride = stride == 0 ? s : std::gcd(stride, s);
  }
  if (stride == 0) stride = 1;
  return run_at(landscape, initial, params, tau_ref, stride);
}

ErrorReport pointwise_errors(const Trajectory& coarse, const Trajectory& reference) {
  const double tau = coarse.params.tau;
  const double tau_ref = reference.params.tau;
  if (coarse.states.empty() || reference.states.empty()) {
    throw ArgumentError("pointwise_errors: empty trajectory");
  }
  const int k = coarse.states.front().k();
  if (reference.states.front().k() != k) {
    throw ArgumentError("pointwise_errors: frames have different sizes");
  }
  if (coarse.states.size() != coarse.steps() + 1 && !coarse.probes.empty()) {
    throw ArgumentError("pointwise_errors: coarse trajectory must be recorded at every step");
  }
  const std::size_t stride = stride_between(tau, tau_ref);
  const std::size_t ref_record = reference.states.size() > 1 ? reference.states[1].n : 1;

  ErrorReport report;
  report.tau = tau;
  report.err_v.assign(static_cast<std::size_t>(k), 0.0);
  for (std::size_t idx = 1; idx < coarse.states.size(); ++idx) {
    const SolverState& c = coarse.states[idx];
    const std::size_t fine_step = c.n * stride;
    if (fine_step % ref_record != 0) {
      throw ArgumentError("pointwise_errors: reference has no snapshot at coarse step " + std::to_string(c.n));
    }
    const std::size_t ref_idx = fine_step / ref_record;
    if (ref_idx >= reference.states.size() || reference.states[ref_idx].n != fine_step) {
      throw ArgumentError("pointwise_errors: reference has no snapshot at coarse step " + std::to_string(c.n));
    }
    if (std::abs(coarse.times[idx] - reference.times[ref_idx]) > 1e-14) {
      throw ArgumentError("pointwise_errors: time misalignment at coarse step " + std::to_string(c.n));
    }
    const SolverState& r = reference.states[ref_idx];
    report.err_x = std::max(report.err_x, (r.x - c.x).norm());
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
      const double e = (r.V.col(i) - c.V.col(i)).norm();
      report.err_v[static_cast<std::size_t>(i)] = std::max(report.err_v[static_cast<std::size_t>(i)], e);
      sum += e;
    }
    report.err_v_avg = std::max(report.err_v_avg, sum / k);
  }
  return report;
}

double log2_rate(double coarse_error, double fine_error) { return std::log2(coarse_error / fine_error); }

ConvergenceTable make_convergence_table(std::vector<ErrorReport> reports, double reference_tau) {
  ConvergenceTable table;
  table.reference_tau = reference_tau;
  for (std::size_t r = 0; r < reports.size(); ++r) {
    ConvergenceRow row;
    row.errors = std::move(reports[r]);
    row.rate_v.assign(row.errors.err_v.size(), std::nullopt);
    if (r > 0) {
      const ErrorReport& prev = table.rows.back().errors;
      row.rate_x = log2_rate(prev.err_x, row.errors.err_x);
      row.rate_avg = log2_rate(prev.err_v_avg, row.errors.err_v_avg);
      for (std::size_t i = 0; i < row.errors.err_v.size(); ++i) {
        row.rate_v[i] = log2_rate(prev.err_v[i], row.errors.err_v[i]);
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

ConvergenceTable convergence_study(const EnergyLandscape& landscape, const SolverState& initial,
                                   const SaddleParams& params, std::span<const double> tau_list, double tau_ref) {
  require_decreasing_dyadic(tau_list, tau_ref);
  if (!is_dyadic(tau_ref)) {
    throw ArgumentError("tau_ref must be a power of two");
  }
  // Slot 0 is the reference; the rest are the coarse runs.
  auto runs = detail::parallel_map(tau_list.size() + 1, worker_count(), [&](std::size_t i) {
    if (i == 0) return reference_solution(landscape, initial, params, tau_ref, tau_list);
    return run_at(landscape, initial, params, tau_list[i - 1]);
  });
  std::vector<ErrorReport> reports;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    reports.push_back(pointwise_errors(runs[i], runs[0]));
  }
  return make_convergence_table(std::move(reports), tau_ref);
}

bool LemmaScalingReport::all_second_order() const {
  return std::none_of(probes.begin(), probes.end(), [](const ProbeScaling& p) { return p.flagged; });
}

std::string exponent_label(const ProbeScaling& probe) {
  if (probe.exponent) return fmt::format("{:.16e}", *probe.exponent);
  return probe.roundoff_zero ? "roundoff-zero" : "exact-zero";
}

double fit_log2_slope(std::span<const double> taus, std::span<const double> values) {
  if (taus.size() != values.size() || taus.size() < 2) {
    throw ArgumentError("slope fit needs at least two matching points");
  }
  const auto n = static_cast<double>(taus.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const double lx = std::log2(taus[i]);
    const double ly = std::log2(values[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

LemmaScalingReport lemma_scaling_study(const EnergyLandscape& landscape, const SolverState& initial,
                                       const SaddleParams& params, std::span<const double> tau_list) {
  require_decreasing_dyadic(tau_list, 0.0);
  if (tau_list.size() < 2) {
    throw ArgumentError("lemma scaling needs at least two step sizes");
  }
  auto maxima = detail::parallel_map(tau_list.size(), worker_count(), [&](std::size_t t) {
    SaddleParams p = params;
    p.tau = tau_list[t];
    const std::size_t N = step_count(p.T, p.tau);
    const Trajectory traj = integrate(landscape, initial, p, IntegrateOptions{N, false});
    std::vector<double> m(kProbeCount, 0.0);
    for (const StepProbes& probe : traj.probes) {
      for (std::size_t f = 0; f < kProbeCount; ++f) {
        m[f] = std::max(m[f], probe_value(probe, f));
      }
    }
    return m;
  });

  LemmaScalingReport report;
  for (std::size_t f = 0; f < kProbeCount; ++f) {
    ProbeScaling scaling;
    scaling.name = kProbeNames[f];
    scaling.taus.assign(tau_list.begin(), tau_list.end());
    for (const auto& m : maxima) scaling.max_values.push_back(m[f]);
    const bool all_zero =
        std::all_of(scaling.max_values.begin(), scaling.max_values.end(), [](double v) { return v == 0.0; });
    const bool below_floor = std::all_of(scaling.max_values.begin(), scaling.max_values.end(),
                                         [](double v) { return v <= kRoundoffFloor; });
    if (!all_zero && below_floor) {
      scaling.roundoff_zero = true;
    } else if (!all_zero) {
      const bool any_zero =
          std::any_of(scaling.max_values.begin(), scaling.max_values.end(), [](double v) { return v == 0.0; });
      // A probe that vanishes at some but not all step sizes cannot be fitted in log space.
      scaling.exponent = any_zero ? 0.0 : fit_log2_slope(scaling.taus, scaling.max_values);
      scaling.flagged = !std::isfinite(*scaling.exponent) || *scaling.exponent < 1.7;
    }
    report.probes.push_back(std::move(scaling));
  }
  return report;
}

double cauchy_difference(const Trajectory& coarse, const Trajectory& fine) {
  const std::size_t stride = stride_between(coarse.params.tau, fine.params.tau);
  if (fine.states.size() != fine.steps() + 1) {
    throw ArgumentError("cauchy_difference: fine trajectory must be recorded at every step");
  }
  double diff = 0.0;
  for (const SolverState& c : coarse.states) {
    const std::size_t idx = c.n * stride;
    if (idx >= fine.states.size()) {
      throw ArgumentError("cauchy_difference: trajectories cover different horizons");
    }
    diff = std::max(diff, (c.x - fine.states[idx].x).norm());
  }
  return diff;
}

std::vector<PathwayResult> pathway_convergence_study(const EnergyLandscape& landscape,
                                                     std::span<const SolverState> initials,
                                                     const SaddleParams& params, std::span<const double> tau_list,
                                                     const Vector& target) {
  require_decreasing_dyadic(tau_list, 0.0);
  if (target.size() != landscape.dimension()) {
    throw ArgumentError("pathway target has the wrong dimension");
  }
  std::vector<double> taus(tau_list.begin(), tau_list.end());
  taus.push_back(tau_list.back() / 2.0);

  const std::size_t per_initial = taus.size();
  auto runs = detail::parallel_map(initials.size() * per_initial, worker_count(), [&](std::size_t job) {
    return run_at(landscape, initials[job / per_initial], params, taus[job % per_initial]);
  });

  std::vector<PathwayResult> results;
  for (std::size_t s = 0; s < initials.size(); ++s) {
    PathwayResult result;
    result.trajectories.assign(std::make_move_iterator(runs.begin() + static_cast<long>(s * per_initial)),
                               std::make_move_iterator(runs.begin() + static_cast<long>((s + 1) * per_initial)));
    for (std::size_t t = 0; t + 1 < per_initial; ++t) {
      const Trajectory& coarse = result.trajectories[t];
      const Trajectory& fine = result.trajectories[t + 1];
      PathwayRow row;
      row.tau = taus[t];
      row.cauchy_difference = cauchy_difference(coarse, fine);
      row.endpoint_distance = (coarse.states.back().x - target).norm();
      result.rows.push_back(row);
    }
    results.push_back(std::move(result));
  }
  return results;
}

SolverState random_initial_state(Eigen::Index d, int k, unsigned long long seed) {
  if (k < 1 || k >= d) {
    throw ArgumentError("random_initial_state: need 1 <= k < d");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector u(d);
  for (Eigen::Index i = 0; i < d; ++i) u[i] = normal(rng);
  Vector x0 = Vector::Unit(d, 0);
  x0 -= (2.0 * u[0] / u.squaredNorm()) * u;

  Frame raw(d, k);
  for (int j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) raw(i, j) = normal(rng);
  }
  return prepare_initial_state(x0, raw);
}

IndexRobustReport index_robust_study(const IndexRobustConfig& config) {
  if (config.k_list.empty()) {
    throw ArgumentError("index_robust_study: empty k list");
  }
  for (int k : config.k_list) {
    if (k < 1 || k >= config.d) {
      throw ArgumentError("index_robust_study: k = " + std::to_string(k) + " outside [1, d - 1]");
    }
  }
  if (!is_dyadic(config.tau) || !is_dyadic(config.tau_ref)) {
    throw ArgumentError("index_robust_study: tau and tau_ref must be powers of two");
  }
  const Vector eigenvalues = config.eigenvalues.value_or(
      Vector::LinSpaced(config.d, 1.0, static_cast<double>(config.d)));
  if (eigenvalues.size() != config.d) {
    throw ArgumentError("index_robust_study: eigenvalue count differs from d");
  }
  const QuadraticSphereEnergy landscape(eigenvalues);

  auto rows = detail::parallel_map(config.k_list.size(), worker_count(), [&](std::size_t idx) {
    const int k = config.k_list[idx];
    const double relax = config.scaling == RelaxationScaling::PerIndex ? config.q0 / k : config.q0;
    SaddleParams params;
    params.k = k;
    params.alpha = relax;
    params.beta = relax;
    params.T = config.T;
    params.tau = config.tau;
    const SolverState initial = random_initial_state(config.d, k, config.seed);
    const std::array<double, 1> coarse{config.tau};
    const Trajectory reference = reference_solution(landscape, initial, params, config.tau_ref, coarse);
    const Trajectory run = run_at(landscape, initial, params, config.tau);
    return IndexRobustRow{k, relax, relax, pointwise_errors(run, reference)};
  });

  IndexRobustReport report;
  report.rows = std::move(rows);
  double lo = report.rows.front().total();
  double hi = lo;
  for (const auto& row : report.rows) {
    lo = std::min(lo, row.total());
    hi = std::max(hi, row.total());
  }
  report.ratio = hi == lo ? 1.0 : hi / lo;
  return report;
}

Trajectory integrate_oracle_rk4(const EnergyLandscape& landscape, const SolverState& initial,
                                const SaddleParams& params, std::size_t record_every) {
  params.validate();
  if (record_every == 0) {
    throw ArgumentError("record_every must be positive");
  }
  const std::size_t N = step_count(params.T, params.tau);
  const double h = params.tau;

  Trajectory traj;
  traj.params = params;
  SolverState current = initial;
  current.n = 0;
  traj.times.push_back(0.0);
  traj.states.push_back(current);
  for (std::size_t n = 1; n <= N; ++n) {
    const Vector& x = current.x;
    const Frame& V = current.V;
    const RhsValue k1 = continuous_rhs_unchecked(landscape, x, V, params);
    const RhsValue k2 = continuous_rhs_unchecked(landscape, x + 0.5 * h * k1.dx, V + 0.5 * h * k1.dV, params);
    const RhsValue k3 = continuous_rhs_unchecked(landscape, x + 0.5 * h * k2.dx, V + 0.5 * h * k2.dV, params);
    const RhsValue k4 = continuous_rhs_unchecked(landscape, x + h * k3.dx, V + h * k3.dV, params);
    const Vector x_next = x + (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    const Frame V_next = V + (h / 6.0) * (k1.dV + 2.0 * k2.dV + 2.0 * k3.dV + k4.dV);
    current = prepare_initial_state(x_next, V_next, params);
    current.n = n;
    if (n % record_every == 0 || n == N) {
      traj.times.push_back(static_cast<double>(n) * h);
      traj.states.push_back(current);
    }
  }
  return traj;
}

}  // namespace hisd
