#include "hisd/experiment.hpp"

#include "hisd/analysis.hpp"
#include "hisd/csv.hpp"

#include <json.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <set>

namespace hisd {

namespace {

using json = nlohmann::json;

const std::set<std::string, std::less<>> kKnownKeys = {
    "energy", "energy_params", "d",          "k",        "alpha",    "beta",   "tau",
    "T",      "theta",         "x0",         "V0",       "tau_list", "tau_ref", "seed",
    "mode",   "output_dir",    "record_every", "initials", "target",  "k_list", "q0"};

double to_real(const json& value, const std::string& key) {
  if (value.is_number()) {
    return value.get<double>();
  }
  if (value.is_string()) {
    // "2^-m" or "2^m"
    const std::string text = value.get<std::string>();
    if (text.rfind("2^", 0) == 0) {
      int exponent = 0;
      const char* first = text.data() + 2;
      const char* last = text.data() + text.size();
      auto [ptr, ec] = std::from_chars(first, last, exponent);
      if (ec == std::errc() && ptr == last) {
        return std::ldexp(1.0, exponent);
      }
    }
    throw ConfigError(key, "cannot read '" + text + "' as a number");
  }
  throw ConfigError(key, "expected a number");
}

Vector to_vector(const json& value, const std::string& key) {
  if (!value.is_array() || value.empty()) {
    throw ConfigError(key, "expected a non-empty array of numbers");
  }
  Vector v(static_cast<Eigen::Index>(value.size()));
  for (std::size_t i = 0; i < value.size(); ++i) v[static_cast<Eigen::Index>(i)] = to_real(value[i], key);
  return v;
}

std::vector<double> to_reals(const json& value, const std::string& key) {
  const Vector v = to_vector(value, key);
  return {v.data(), v.data() + v.size()};
}

long long to_integer(const json& value, const std::string& key) {
  if (!value.is_number_integer()) {
    throw ConfigError(key, "expected an integer");
  }
  return value.get<long long>();
}

Eigen::Index natural_dimension(EnergyKind kind) {
  switch (kind) {
    case EnergyKind::FourWell: return 2;
    case EnergyKind::Rosenbrock: return 3;
    case EnergyKind::Quadratic: return 0;
  }
  return 0;
}

void require_dyadic(double tau, const std::string& key) {
  if (!is_dyadic(tau)) {
    throw ConfigError(key, fmt::format("{} is not a power of two", tau));
  }
}

std::vector<double> halvings(double tau, std::size_t count) {
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(std::ldexp(tau, -static_cast<int>(i)));
  return out;
}

Frame seeded_gaussian_frame(Eigen::Index d, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Frame raw(d, k);
  for (int j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) raw(i, j) = normal(rng);
  }
  return raw;
}

// --- output helpers --------------------------------------------------------

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  return out;
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out = open_output(path);
  writer(out);
  out.flush();
  if (!out) {
    throw IoError("failed writing " + path.string());
  }
}

double max_invariant_defect(const Trajectory& traj) {
  double worst = 0.0;
  for (const SolverState& s : traj.states) {
    const ConstraintDefects d = constraint_defects(s);
    worst = std::max({worst, d.sphere, d.tangency, d.orthonormality});
  }
  return worst;
}

void warn_step_size(const Trajectory& traj, std::ostream& log) {
  if (traj.step_size_warning) {
    log << fmt::format("warning: sqrt(2)*beta*L*tau = {:.3g} exceeds 1 - theta = {:.3g} (L estimate {:.4g})\n",
                       std::sqrt(2.0) * traj.params.beta * traj.operator_bound * traj.params.tau,
                       1.0 - traj.params.theta, traj.operator_bound);
  }
}

void run_mode(const ExperimentConfig& config, std::ostream& log) {
  namespace fs = std::filesystem;
  const fs::path dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  }

  const auto landscape = make_landscape(config);
  const SaddleParams params = config.saddle_params();

  switch (config.mode) {
    case Mode::Run: {
      const Trajectory traj =
          integrate(*landscape, initial_state(config), params, IntegrateOptions{config.record_every, true});
      warn_step_size(traj, log);
      write_file(dir / "trajectory.csv", [&](std::ostream& o) { csv::write_trajectory(o, traj); });
      write_file(dir / "probes.csv", [&](std::ostream& o) { csv::write_probes(o, traj); });
      log << fmt::format("tau={:.6g} final_energy={:.10g} max_invariant_defect={:.3e}\n", params.tau,
                         landscape->energy(traj.states.back().x), max_invariant_defect(traj));
      break;
    }
    case Mode::Converge: {
      const ConvergenceTable table =
          convergence_study(*landscape, initial_state(config), params, config.tau_list, config.tau_ref);
      write_file(dir / "convergence.csv", [&](std::ostream& o) { csv::write_convergence(o, table); });
      for (const ConvergenceRow& row : table.rows) {
        log << fmt::format("tau={:.6g} err_x={:.3e} rate_x={} err_v_avg={:.3e}\n", row.errors.tau, row.errors.err_x,
                           row.rate_x ? fmt::format("{:.2f}", *row.rate_x) : std::string("-"), row.errors.err_v_avg);
      }
      break;
    }
    case Mode::Lemmas: {
      const LemmaScalingReport report = lemma_scaling_study(*landscape, initial_state(config), params, config.tau_list);
      write_file(dir / "lemma_scaling.csv", [&](std::ostream& o) { csv::write_lemma_values(o, report); });
      write_file(dir / "lemma_exponents.csv", [&](std::ostream& o) { csv::write_lemma_exponents(o, report); });
      for (const ProbeScaling& p : report.probes) {
        log << fmt::format("{} exponent={}{}\n", p.name,
                           p.exponent ? fmt::format("{:.3f}", *p.exponent) : exponent_label(p),
                           p.flagged ? " FLAGGED" : "");
      }
      break;
    }
    case Mode::Pathway: {
      std::vector<SolverState> initials;
      if (config.initials.empty()) {
        initials.push_back(initial_state(config));
      } else {
        for (const Vector& x0 : config.initials) initials.push_back(initial_state(config, &x0));
      }
      const auto results = pathway_convergence_study(*landscape, initials, params, config.tau_list, *config.target);
      write_file(dir / "pathway.csv", [&](std::ostream& o) { csv::write_pathway(o, results); });
      for (std::size_t s = 0; s < results.size(); ++s) {
        for (const Trajectory& traj : results[s].trajectories) {
          int exponent = 0;
          std::frexp(traj.params.tau, &exponent);
          const auto name = fmt::format("pathway_{}_tau2m{}.csv", s + 1, 1 - exponent);
          write_file(dir / name, [&](std::ostream& o) { csv::write_trajectory(o, traj); });
        }
        for (const PathwayRow& row : results[s].rows) {
          log << fmt::format("initial={} tau={:.6g} cauchy={:.3e} endpoint_distance={:.3e}\n", s + 1, row.tau,
                             row.cauchy_difference, row.endpoint_distance);
        }
      }
      break;
    }
    case Mode::IndexRobust: {
      IndexRobustConfig study;
      study.d = config.d;
      study.k_list = config.k_list;
      study.q0 = config.q0;
      study.tau = config.tau;
      study.tau_ref = config.tau_ref;
      study.T = config.T;
      study.seed = config.seed;
      study.eigenvalues = Vector::Map(config.energy_params.data(), static_cast<Eigen::Index>(config.energy_params.size()));
      const IndexRobustReport report = index_robust_study(study);
      write_file(dir / "index_robust.csv", [&](std::ostream& o) { csv::write_index_robust(o, report); });
      for (const IndexRobustRow& row : report.rows) {
        log << fmt::format("k={} alpha=beta={:.6g} err_x={:.3e} err_v_avg={:.3e} total={:.3e}\n", row.k, row.alpha,
                           row.errors.err_x, row.errors.err_v_avg, row.total());
      }
      log << fmt::format("ratio max/min total = {:.4f}\n", report.ratio);
      break;
    }
  }
}

}  // namespace

std::optional<Mode> parse_mode(std::string_view name) {
  if (name == "run") return Mode::Run;
  if (name == "converge") return Mode::Converge;
  if (name == "lemmas") return Mode::Lemmas;
  if (name == "pathway") return Mode::Pathway;
  if (name == "index-robust") return Mode::IndexRobust;
  return std::nullopt;
}

std::string_view mode_name(Mode mode) {
  switch (mode) {
    case Mode::Run: return "run";
    case Mode::Converge: return "converge";
    case Mode::Lemmas: return "lemmas";
    case Mode::Pathway: return "pathway";
    case Mode::IndexRobust: return "index-robust";
  }
  return "?";
}

SaddleParams ExperimentConfig::saddle_params() const {
  SaddleParams p;
  p.k = k;
  p.alpha = alpha;
  p.beta = beta;
  p.tau = tau;
  p.T = T;
  p.theta = theta;
  return p;
}

ExperimentConfig parse_config(std::string_view text, std::optional<Mode> mode_override) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("<document>", "expected a JSON object");
  }
  for (const auto& [key, value] : doc.items()) {
    if (!kKnownKeys.contains(key)) {
      throw ConfigError(key, "unknown key");
    }
  }

  ExperimentConfig cfg;
  auto has = [&](const char* key) { return doc.contains(key); };

  // mode
  if (mode_override) {
    cfg.mode = *mode_override;
  } else if (has("mode")) {
    if (!doc["mode"].is_string()) throw ConfigError("mode", "expected a string");
    const auto mode = parse_mode(doc["mode"].get<std::string>());
    if (!mode) throw ConfigError("mode", "unknown mode '" + doc["mode"].get<std::string>() + "'");
    cfg.mode = *mode;
  } else {
    throw ConfigError("mode", "missing required key");
  }

  // energy
  if (!has("energy")) throw ConfigError("energy", "missing required key");
  if (!doc["energy"].is_string()) throw ConfigError("energy", "expected a string");
  const std::string energy = doc["energy"].get<std::string>();
  if (energy == "fourwell") {
    cfg.energy = EnergyKind::FourWell;
  } else if (energy == "rosenbrock") {
    cfg.energy = EnergyKind::Rosenbrock;
  } else if (energy == "quadratic") {
    cfg.energy = EnergyKind::Quadratic;
  } else {
    throw ConfigError("energy", "unknown energy '" + energy + "' (fourwell, rosenbrock, quadratic)");
  }
  if (cfg.mode == Mode::IndexRobust && cfg.energy != EnergyKind::Quadratic) {
    throw ConfigError("energy", "index-robust mode requires the quadratic energy");
  }

  if (has("energy_params")) cfg.energy_params = to_reals(doc["energy_params"], "energy_params");

  // dimension
  Eigen::Index d = natural_dimension(cfg.energy);
  if (has("d")) {
    const long long given = to_integer(doc["d"], "d");
    if (given < 1) throw ConfigError("d", "must be positive");
    if (d != 0 && given != d) throw ConfigError("d", fmt::format("energy '{}' has dimension {}", energy, d));
    d = given;
  }
  if (cfg.energy == EnergyKind::Quadratic) {
    if (cfg.energy_params.empty()) {
      if (d == 0) throw ConfigError("d", "quadratic energy needs d or energy_params");
      cfg.energy_params.resize(static_cast<std::size_t>(d));
      for (Eigen::Index i = 0; i < d; ++i) cfg.energy_params[static_cast<std::size_t>(i)] = static_cast<double>(i + 1);
    } else if (d == 0) {
      d = static_cast<Eigen::Index>(cfg.energy_params.size());
    } else if (static_cast<Eigen::Index>(cfg.energy_params.size()) != d) {
      throw ConfigError("energy_params", "quadratic energy needs d eigenvalues");
    }
  } else if (cfg.energy_params.size() != 2) {
    throw ConfigError("energy_params", energy == "fourwell" ? "expected [p, q]" : "expected [a, b]");
  }
  cfg.d = static_cast<int>(d);

  // scalars
  if (has("k")) cfg.k = static_cast<int>(to_integer(doc["k"], "k"));
  if (cfg.k < 1) throw ConfigError("k", "must be >= 1");
  if (cfg.k >= cfg.d) throw ConfigError("k", fmt::format("k = {} must be smaller than d = {}", cfg.k, cfg.d));
  if (has("alpha")) cfg.alpha = to_real(doc["alpha"], "alpha");
  if (has("beta")) cfg.beta = to_real(doc["beta"], "beta");
  if (has("T")) cfg.T = to_real(doc["T"], "T");
  if (has("theta")) cfg.theta = to_real(doc["theta"], "theta");
  if (has("tau")) cfg.tau = to_real(doc["tau"], "tau");
  if (has("tau_ref")) cfg.tau_ref = to_real(doc["tau_ref"], "tau_ref");
  if (has("q0")) cfg.q0 = to_real(doc["q0"], "q0");
  if (has("seed")) {
    const long long seed = to_integer(doc["seed"], "seed");
    if (seed < 0) throw ConfigError("seed", "must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(seed);
  }
  if (has("record_every")) {
    const long long every = to_integer(doc["record_every"], "record_every");
    if (every < 1) throw ConfigError("record_every", "must be positive");
    cfg.record_every = static_cast<std::size_t>(every);
  }
  if (has("output_dir")) {
    if (!doc["output_dir"].is_string()) throw ConfigError("output_dir", "expected a string");
    cfg.output_dir = doc["output_dir"].get<std::string>();
  }
  if (!(cfg.alpha > 0)) throw ConfigError("alpha", "must be positive");
  if (!(cfg.beta > 0)) throw ConfigError("beta", "must be positive");
  if (!(cfg.T > 0)) throw ConfigError("T", "must be positive");
  if (!(cfg.theta > 0 && cfg.theta < 1)) throw ConfigError("theta", "must lie in (0, 1)");
  if (!(cfg.q0 > 0)) throw ConfigError("q0", "must be positive");

  // vectors
  if (has("x0")) {
    cfg.x0 = to_vector(doc["x0"], "x0");
    if (cfg.x0->size() != d) throw ConfigError("x0", fmt::format("expected {} entries", d));
    if (cfg.x0->norm() == 0.0) throw ConfigError("x0", "must be nonzero");
  }
  if (has("V0")) {
    const json& rows = doc["V0"];
    if (!rows.is_array() || static_cast<int>(rows.size()) != cfg.k) {
      throw ConfigError("V0", fmt::format("expected k = {} vectors", cfg.k));
    }
    Frame V(d, cfg.k);
    for (int i = 0; i < cfg.k; ++i) {
      const Vector v = to_vector(rows[static_cast<std::size_t>(i)], "V0");
      if (v.size() != d) throw ConfigError("V0", fmt::format("vector {} must have {} entries", i + 1, d));
      V.col(i) = v;
    }
    cfg.V0 = std::move(V);
  }
  if (has("initials")) {
    const json& list = doc["initials"];
    if (!list.is_array() || list.empty()) throw ConfigError("initials", "expected a list of points");
    for (const json& item : list) {
      Vector x = to_vector(item, "initials");
      if (x.size() != d) throw ConfigError("initials", fmt::format("each point needs {} entries", d));
      if (x.norm() == 0.0) throw ConfigError("initials", "points must be nonzero");
      cfg.initials.push_back(std::move(x));
    }
  }
  if (has("target")) {
    cfg.target = to_vector(doc["target"], "target");
    if (cfg.target->size() != d) throw ConfigError("target", fmt::format("expected {} entries", d));
  }
  if (has("tau_list")) cfg.tau_list = to_reals(doc["tau_list"], "tau_list");
  if (has("k_list")) {
    const json& list = doc["k_list"];
    if (!list.is_array() || list.empty()) throw ConfigError("k_list", "expected a list of integers");
    for (const json& item : list) {
      const long long k = to_integer(item, "k_list");
      if (k < 1 || k >= d) throw ConfigError("k_list", fmt::format("k = {} outside [1, {}]", k, d - 1));
      cfg.k_list.push_back(static_cast<int>(k));
    }
  }

  // mode-specific requirements
  const bool dyadic_mode = cfg.mode != Mode::Run;
  if (cfg.mode == Mode::Run || cfg.mode == Mode::IndexRobust || cfg.tau_list.empty()) {
    if (!has("tau")) throw ConfigError("tau", "missing required key");
  }
  if (has("tau") && !(cfg.tau > 0)) throw ConfigError("tau", "must be positive");
  if (dyadic_mode) {
    if (has("tau")) require_dyadic(cfg.tau, "tau");
    require_dyadic(cfg.tau_ref, "tau_ref");
    for (double t : cfg.tau_list) require_dyadic(t, "tau_list");
  }
  if (cfg.tau_list.empty() && (cfg.mode == Mode::Converge || cfg.mode == Mode::Lemmas || cfg.mode == Mode::Pathway)) {
    cfg.tau_list = halvings(cfg.tau, cfg.mode == Mode::Converge ? 4 : 5);
  }
  for (std::size_t i = 1; i < cfg.tau_list.size(); ++i) {
    if (!(cfg.tau_list[i] < cfg.tau_list[i - 1])) throw ConfigError("tau_list", "must be strictly decreasing");
  }
  if (cfg.tau == 0.0 && !cfg.tau_list.empty()) cfg.tau = cfg.tau_list.front();
  if (cfg.mode == Mode::Converge) {
    for (double t : cfg.tau_list) {
      if (!(t > cfg.tau_ref)) throw ConfigError("tau_list", "every tau must be coarser than tau_ref");
    }
  }
  if (cfg.mode == Mode::IndexRobust && !(cfg.tau > cfg.tau_ref)) {
    throw ConfigError("tau", "must be coarser than tau_ref");
  }
  const auto check_horizon = [&](double t, const char* key) {
    try {
      (void)step_count(cfg.T, t);
    } catch (const ArgumentError&) {
      throw ConfigError(key, fmt::format("T = {} is not a multiple of {}", cfg.T, t));
    }
  };
  if (cfg.tau > 0) check_horizon(cfg.tau, "tau");
  for (double t : cfg.tau_list) check_horizon(t, "tau_list");
  if (cfg.mode == Mode::Converge || cfg.mode == Mode::IndexRobust) check_horizon(cfg.tau_ref, "tau_ref");

  const bool needs_x0 = cfg.energy != EnergyKind::Quadratic && cfg.mode != Mode::IndexRobust &&
                        !(cfg.mode == Mode::Pathway && !cfg.initials.empty());
  if (needs_x0 && !cfg.x0) throw ConfigError("x0", "missing required key");
  if (cfg.mode == Mode::Pathway && !cfg.target) throw ConfigError("target", "missing required key");
  if (cfg.mode == Mode::IndexRobust && cfg.k_list.empty()) cfg.k_list = {2, 4, 8};
  return cfg;
}

std::unique_ptr<EnergyLandscape> make_landscape(const ExperimentConfig& config) {
  switch (config.energy) {
    case EnergyKind::FourWell:
      return std::make_unique<FourWellEnergy>(config.energy_params.at(0), config.energy_params.at(1));
    case EnergyKind::Rosenbrock:
      return std::make_unique<RosenbrockChainEnergy>(config.energy_params.at(0), config.energy_params.at(1));
    case EnergyKind::Quadratic:
      return std::make_unique<QuadraticSphereEnergy>(
          Vector::Map(config.energy_params.data(), static_cast<Eigen::Index>(config.energy_params.size())));
  }
  throw ConfigError("energy", "unsupported energy");
}

SolverState initial_state(const ExperimentConfig& config, const Vector* x0_override) {
  const Vector* x0 = x0_override != nullptr ? x0_override : (config.x0 ? &*config.x0 : nullptr);
  if (x0 == nullptr) {
    return random_initial_state(config.d, config.k, config.seed);
  }
  const Frame raw = config.V0 ? *config.V0 : seeded_gaussian_frame(x0->size(), config.k, config.seed);
  return prepare_initial_state(*x0, raw, config.saddle_params());
}

int run_experiment(const ExperimentConfig& config, std::ostream& log) {
  try {
    run_mode(config, log);
    return 0;
  } catch (const ConfigError& e) {
    log << "error [config]: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    log << "error [output]: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    log << "error [" << mode_name(config.mode) << "]: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace hisd
