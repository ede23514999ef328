#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mgrid {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitNumerical = 3 };

/// "lo:hi:n" as accepted by --kp-range and --kq-grid.
struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    int n = 0;
};

GridSpec parse_grid_spec(const std::string& text);

/// Full command line front end; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace mgrid
