#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "mgrid/equilibrium.hpp"
#include "mgrid/linearize.hpp"
#include "mgrid/report.hpp"
#include "mgrid/sim.hpp"
#include "mgrid/stability.hpp"

namespace mgrid {

/// Unit of a state label, e.g. "rad/s" for omega_i.
std::string state_unit(const std::string& label);

// Every writer emits a header row of "name [unit]" cells followed by data
// rows formatted with format_double.

void write_equilibrium_csv(std::ostream& out, const Equilibrium& eq);
void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& labels);
void write_eigenvalues_csv(std::ostream& out, const EigenSet& set);
void write_eigenloci_csv(std::ostream& out, const EigenlociSweep& sweep);
void write_boundary_csv(std::ostream& out, const StabilityBoundary& boundary);
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const MicrogridConfig& cfg);
void write_report_csv(std::ostream& out, const Report& report);

/// Splits one CSV line on commas (no quoting is ever produced).
std::vector<std::string> split_csv_line(const std::string& line);

} // namespace mgrid
