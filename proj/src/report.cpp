#include "mgrid/report.hpp"

#include <cmath>
#include <algorithm>
#include <iomanip>
#include <iterator>
#include <limits>
#include <sstream>

namespace mgrid {

std::string verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Good: return "Good";
    case Verdict::Acceptable: return "Acceptable";
    case Verdict::Unacceptable: return "Unacceptable";
    }
    return "?";
}

namespace {

// Boundary value used for comparison; an already unstable point has no
// stable region at all.
double effective(const BoundaryPoint& p) {
    return p.status == BoundaryStatus::UnstableAtLower ? 0.0 : p.k_p_critical;
}

} // namespace

Comparison classify(const StabilityBoundary& detailed, const StabilityBoundary& reduced,
                    const ReportThresholds& thresholds) {
    thresholds.validate();
    if (detailed.points.size() != reduced.points.size() || detailed.points.empty()) {
        throw ValidationError("classify: boundaries must share a non-empty k_q grid");
    }
    Comparison c;
    c.grid_points = static_cast<int>(detailed.points.size());
    c.worst_excess = -std::numeric_limits<double>::infinity();
    bool large = false;
    for (std::size_t j = 0; j < detailed.points.size(); ++j) {
        if (detailed.points[j].k_q != reduced.points[j].k_q) {
            throw ValidationError("classify: boundaries must share a non-empty k_q grid");
        }
        const double d = effective(detailed.points[j]);
        const double r = effective(reduced.points[j]);
        double excess;
        if (d > 0.0) {
            excess = r / d - 1.0;
        } else {
            excess = r > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        }
        c.worst_excess = std::max(c.worst_excess, excess);
        if (excess > thresholds.tie_tolerance) {
            ++c.exceeding_points;
            if (!(excess < thresholds.max_excess)) large = true;
        }
    }
    if (c.exceeding_points == 0) {
        c.verdict = Verdict::Good;
    } else if (!large && c.exceeding_points < thresholds.minority_fraction * c.grid_points) {
        c.verdict = Verdict::Acceptable;
    } else {
        c.verdict = Verdict::Unacceptable;
    }
    return c;
}

std::vector<double> default_kq_grid() {
    std::vector<double> grid;
    for (int j = -4; j <= 4; ++j) grid.push_back(1.5e-4 * std::pow(10.0, j / 4.0));
    return grid;
}

const ReportRow& Report::row(ModelKind kind) const {
    for (const auto& r : rows) {
        if (r.kind == kind) return r;
    }
    throw ValidationError("report: no row for model " + model_name(kind));
}

std::string Report::table() const {
    std::ostringstream out;
    out << "preset " << preset << ", k_q = " << k_q_fixed << ", grid of " << k_q_grid.size() << " k_q points\n";
    out << std::left << std::setw(10) << "model" << std::setw(16) << "k_p_crit" << std::setw(18) << "status"
        << std::setw(14) << "verdict" << "exceeding  worst_excess\n";
    for (const auto& r : rows) {
        out << std::left << std::setw(10) << model_name(r.kind) << std::setw(16) << r.at_fixed_kq.k_p_critical
            << std::setw(18) << boundary_status_name(r.at_fixed_kq.status);
        if (r.kind == ModelKind::Detailed) {
            out << std::setw(14) << "reference" << '\n';
        } else {
            out << std::setw(14) << verdict_name(r.comparison.verdict) << r.comparison.exceeding_points << '/'
                << r.comparison.grid_points << "        " << r.comparison.worst_excess << '\n';
        }
    }
    return out.str();
}

Report build_report(const std::string& preset_label, const MicrogridConfig& cfg, double k_q_fixed,
                    const std::vector<double>& k_q_grid, const ReportThresholds& thresholds) {
    thresholds.validate();
    Report rep;
    rep.preset = preset_label;
    rep.k_q_fixed = k_q_fixed;
    rep.k_q_grid = k_q_grid;
    rep.thresholds = thresholds;
    for (std::size_t m = 0; m < std::size(kAllModels); ++m) {
        ReportRow& row = rep.rows[m];
        row.kind = kAllModels[m];
        row.at_fixed_kq = critical_gain(row.kind, cfg, k_q_fixed, kReportKpLow, kReportKpHigh);
        row.boundary = stability_boundary(row.kind, cfg, k_q_grid, kReportKpLow, kReportKpHigh, {}, preset_label);
    }
    const ReportRow& ref = rep.row(ModelKind::Detailed);
    for (auto& row : rep.rows) {
        if (row.kind != ModelKind::Detailed) row.comparison = classify(ref.boundary, row.boundary, thresholds);
    }
    return rep;
}

Report build_report(RxPreset preset, double k_q_fixed) {
    return build_report(preset_name(preset), scenario(preset), k_q_fixed);
}

} // namespace mgrid
