#pragma once

#include <string>
#include <vector>

#include "mgrid/params.hpp"

namespace mgrid {

/// Thresholds turning boundary comparisons into Good/Acceptable/Unacceptable.
struct ReportThresholds {
    /// Largest relative excess over the detailed boundary still Acceptable.
    double max_excess = 0.10;
    /// Exceeding points must be fewer than this fraction of the grid.
    double minority_fraction = 0.5;
    /// Relative excesses below this are treated as ties (bisection noise).
    double tie_tolerance = 2e-3;

    void validate() const;
};

struct ConfigFile {
    MicrogridConfig grid = MicrogridConfig::defaults();
    ReportThresholds thresholds;
};

/// INI text with sections [inverter_i], [inverter_k], [line], [load_i],
/// [load_k] and optionally [report]. Omitted keys keep Table I values; every
/// supplied value must be strictly positive.
ConfigFile parse_config_file(const std::string& text);
MicrogridConfig parse_config(const std::string& text);

/// Every key written, with shortest round-trip formatting.
std::string serialize(const MicrogridConfig& cfg);
std::string serialize(const ConfigFile& file);

/// Keys accepted in a section; empty for an unknown section.
std::vector<std::string> section_keys(const std::string& section);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

} // namespace mgrid
