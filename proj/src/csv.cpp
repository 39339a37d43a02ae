#include "hisd/csv.hpp"

#include "hisd/errors.hpp"

#include <fmt/format.h>

#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

namespace hisd::csv {

namespace {

std::string optional_cell(const std::optional<double>& value) { return value ? format_double(*value) : std::string(); }

}  // namespace

std::string format_double(double value) { return fmt::format("{:.16e}", value); }

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  if (traj.states.empty()) return;
  const Eigen::Index d = traj.states.front().x.size();
  const int k = traj.states.front().k();
  out << "t";
  for (Eigen::Index j = 1; j <= d; ++j) out << ",x_" << j;
  for (int i = 1; i <= k; ++i) {
    for (Eigen::Index j = 1; j <= d; ++j) out << ",v_" << i << '_' << j;
  }
  out << '\n';
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    const SolverState& state = traj.states[s];
    out << format_double(traj.times[s]);
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << format_double(state.x[j]);
    for (int i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) out << ',' << format_double(state.V(j, i));
    }
    out << '\n';
  }
}

void write_probes(std::ostream& out, const Trajectory& traj) {
  out << "n,t";
  for (const char* name : kProbeNames) out << ',' << name;
  out << '\n';
  for (std::size_t n = 1; n <= traj.probes.size(); ++n) {
    out << n << ',' << format_double(static_cast<double>(n) * traj.params.tau);
    for (std::size_t f = 0; f < kProbeCount; ++f) out << ',' << format_double(probe_value(traj.probes[n - 1], f));
    out << '\n';
  }
}

void write_convergence(std::ostream& out, const ConvergenceTable& table) {
  const std::size_t k = table.rows.empty() ? 0 : table.rows.front().errors.err_v.size();
  out << "tau,err_x,rate_x,err_v_avg,rate_avg";
  for (std::size_t i = 1; i <= k; ++i) out << ",err_v_" << i << ",rate_v_" << i;
  out << '\n';
  for (const ConvergenceRow& row : table.rows) {
    out << format_double(row.errors.tau) << ',' << format_double(row.errors.err_x) << ',' << optional_cell(row.rate_x)
        << ',' << format_double(row.errors.err_v_avg) << ',' << optional_cell(row.rate_avg);
    for (std::size_t i = 0; i < k; ++i) {
      out << ',' << format_double(row.errors.err_v[i]) << ',' << optional_cell(row.rate_v[i]);
    }
    out << '\n';
  }
}

void write_lemma_values(std::ostream& out, const LemmaScalingReport& report) {
  out << "probe,tau,max_value\n";
  for (const ProbeScaling& probe : report.probes) {
    for (std::size_t t = 0; t < probe.taus.size(); ++t) {
      out << probe.name << ',' << format_double(probe.taus[t]) << ',' << format_double(probe.max_values[t]) << '\n';
    }
  }
}

void write_lemma_exponents(std::ostream& out, const LemmaScalingReport& report) {
  out << "probe,exponent\n";
  for (const ProbeScaling& probe : report.probes) {
    out << probe.name << ',' << exponent_label(probe) << '\n';
  }
}

void write_index_robust(std::ostream& out, const IndexRobustReport& report) {
  out << "k,alpha,beta,err_x,err_v_avg,total\n";
  for (const IndexRobustRow& row : report.rows) {
    out << row.k << ',' << format_double(row.alpha) << ',' << format_double(row.beta) << ','
        << format_double(row.errors.err_x) << ',' << format_double(row.errors.err_v_avg) << ','
        << format_double(row.total()) << '\n';
  }
}

void write_pathway(std::ostream& out, const std::vector<PathwayResult>& results) {
  out << "initial,tau,cauchy_difference,endpoint_distance\n";
  for (std::size_t s = 0; s < results.size(); ++s) {
    for (const PathwayRow& row : results[s].rows) {
      out << (s + 1) << ',' << format_double(row.tau) << ',' << format_double(row.cauchy_difference) << ','
          << format_double(row.endpoint_distance) << '\n';
    }
  }
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ArgumentError("no column named '" + name + "'");
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

Table read(std::istream& in) {
  Table table;
  std::string line;
  if (!std::getline(in, line)) {
    throw ArgumentError("empty CSV document");
  }
  table.header = split(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != table.header.size()) {
      throw ArgumentError("CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                          " cells, header has " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

double parse_double(const std::string& cell) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (cell.empty() || end != begin + cell.size()) {
    throw ArgumentError("not a number: '" + cell + "'");
  }
  return value;
}

}  // namespace hisd::csv
