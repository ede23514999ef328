#pragma once

#include <array>
#include <string>
#include <vector>

#include "mgrid/config.hpp"
#include "mgrid/stability.hpp"

namespace mgrid {

enum class Verdict { Good, Acceptable, Unacceptable };

std::string verdict_name(Verdict v);

struct Comparison {
    Verdict verdict = Verdict::Good;
    int exceeding_points = 0;
    int grid_points = 0;
    double worst_excess = 0.0; // max over the grid of k_p_crit(reduced)/k_p_crit(detailed) - 1
};

/// Compare a reduced model's boundary with the detailed one on the same grid.
/// Good: never above. Acceptable: above on a minority of points and always by
/// less than max_excess. Unacceptable otherwise.
Comparison classify(const StabilityBoundary& detailed, const StabilityBoundary& reduced,
                    const ReportThresholds& thresholds = {});

/// Default k_q grid: nine geometric points spanning a decade either side of
/// the Table I value.
std::vector<double> default_kq_grid();

inline constexpr double kReportKpLow = 6e-5;
inline constexpr double kReportKpHigh = 0.5;

struct ReportRow {
    ModelKind kind = ModelKind::Detailed;
    BoundaryPoint at_fixed_kq;
    StabilityBoundary boundary;
    Comparison comparison; // meaningless for the detailed row
};

struct Report {
    std::string preset;
    double k_q_fixed = 0.0;
    std::vector<double> k_q_grid;
    ReportThresholds thresholds;
    std::array<ReportRow, 4> rows; // detailed, em5, conv3, hf3

    const ReportRow& row(ModelKind kind) const;
    std::string table() const;
};

Report build_report(const std::string& preset_label, const MicrogridConfig& cfg, double k_q_fixed,
                    const std::vector<double>& k_q_grid = default_kq_grid(), const ReportThresholds& thresholds = {});

Report build_report(RxPreset preset, double k_q_fixed = 1.5e-4);

} // namespace mgrid
