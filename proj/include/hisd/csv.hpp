#pragma once

#include "hisd/analysis.hpp"
#include "hisd/core.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hisd::csv {

/// Scientific notation, 17 significant digits; parses back to the same double.
[[nodiscard]] std::string format_double(double value);

/// t,x_1..x_d,v_1_1..v_k_d with one row per snapshot.
void write_trajectory(std::ostream& out, const Trajectory& traj);

/// n,t,<seven probe fields> with one row per step.
void write_probes(std::ostream& out, const Trajectory& traj);

/// tau,err_x,rate_x,err_v_avg,rate_avg,err_v_1,rate_v_1,... (rates empty on the first row).
void write_convergence(std::ostream& out, const ConvergenceTable& table);

/// probe,tau,max_value
void write_lemma_values(std::ostream& out, const LemmaScalingReport& report);

/// probe,exponent ("exact-zero" for probes that vanish identically)
void write_lemma_exponents(std::ostream& out, const LemmaScalingReport& report);

/// k,alpha,beta,err_x,err_v_avg,total
void write_index_robust(std::ostream& out, const IndexRobustReport& report);

/// initial,tau,cauchy_difference,endpoint_distance
void write_pathway(std::ostream& out, const std::vector<PathwayResult>& results);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::size_t column(const std::string& name) const;
};

/// Plain comma-separated reader (no quoting). Throws ArgumentError on ragged rows.
[[nodiscard]] Table read(std::istream& in);

/// Parses a numeric cell; throws ArgumentError on anything but a complete number.
[[nodiscard]] double parse_double(const std::string& cell);

}  // namespace hisd::csv
