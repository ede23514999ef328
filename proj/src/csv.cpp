#include "mgrid/csv.hpp"

#include <sstream>

#include "mgrid/config.hpp"

namespace mgrid {

namespace {

void emit_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) {
        if (j) out << ',';
        out << cells[j];
    }
    out << '\n';
}

std::string cell(const std::string& name, const std::string& unit) {
    return unit.empty() ? name : name + " [" + unit + "]";
}

bool starts_with(const std::string& s, const char* prefix) {
    return s.rfind(prefix, 0) == 0;
}

} // namespace

std::string state_unit(const std::string& label) {
    if (starts_with(label, "delta")) return "rad";
    if (starts_with(label, "omega")) return "rad/s";
    if (starts_with(label, "V_") || starts_with(label, "v_o")) return "V";
    if (starts_with(label, "phi")) return "V*s";
    if (starts_with(label, "gamma")) return "A*s";
    if (starts_with(label, "i_") || starts_with(label, "I_")) return "A";
    return "";
}

void write_equilibrium_csv(std::ostream& out, const Equilibrium& eq) {
    emit_row(out, {"quantity", "unit", "value"});
    emit_row(out, {"omega0", "rad/s", format_double(eq.omega0)});
    const auto labels = state_labels(eq.kind);
    for (std::size_t j = 0; j < labels.size(); ++j) {
        emit_row(out, {labels[j], state_unit(labels[j]), format_double(eq.x_star(static_cast<Eigen::Index>(j)))});
    }
}

void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& labels) {
    if (m.rows() != static_cast<Eigen::Index>(labels.size()) || m.cols() != m.rows()) {
        throw ValidationError("write_matrix_csv: labels do not match the matrix");
    }
    std::vector<std::string> header{"row"};
    header.insert(header.end(), labels.begin(), labels.end());
    emit_row(out, header);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<std::string> row{labels[static_cast<std::size_t>(r)]};
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(format_double(m(r, c)));
        emit_row(out, row);
    }
}

void write_eigenvalues_csv(std::ostream& out, const EigenSet& set) {
    emit_row(out, {"index", cell("re", "1/s"), cell("im", "rad/s")});
    for (std::size_t j = 0; j < set.eigenvalues.size(); ++j) {
        emit_row(out, {std::to_string(j + 1), format_double(set.eigenvalues[j].real()),
                       format_double(set.eigenvalues[j].imag())});
    }
}

void write_eigenloci_csv(std::ostream& out, const EigenlociSweep& sweep) {
    const std::size_t n = sweep.sets.empty() ? 0 : sweep.sets.front().eigenvalues.size();
    std::vector<std::string> header{cell("k_p", "rad/s/W")};
    for (std::size_t j = 1; j <= n; ++j) header.push_back(cell("re_" + std::to_string(j), "1/s"));
    for (std::size_t j = 1; j <= n; ++j) header.push_back(cell("im_" + std::to_string(j), "rad/s"));
    emit_row(out, header);
    for (const auto& set : sweep.sets) {
        std::vector<std::string> row{format_double(set.k_p)};
        for (const auto& l : set.eigenvalues) row.push_back(format_double(l.real()));
        for (const auto& l : set.eigenvalues) row.push_back(format_double(l.imag()));
        emit_row(out, row);
    }
}

void write_boundary_csv(std::ostream& out, const StabilityBoundary& boundary) {
    emit_row(out, {cell("k_q", "V/var"), cell("k_p_crit", "rad/s/W"), "status"});
    for (const auto& p : boundary.points) {
        emit_row(out, {format_double(p.k_q), format_double(p.k_p_critical), boundary_status_name(p.status)});
    }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const MicrogridConfig& cfg) {
    emit_row(out, {cell("t", "s"), cell("f_i", "Hz"), cell("f_k", "Hz"), cell("V_i", "V"), cell("V_k", "V"),
                   cell("P_i", "W"), cell("P_k", "W")});
    for (const auto& s : derived_channels(traj, cfg)) {
        emit_row(out, {format_double(s.t), format_double(s.f_i), format_double(s.f_k), format_double(s.V_i),
                       format_double(s.V_k), format_double(s.P_i), format_double(s.P_k)});
    }
}

void write_report_csv(std::ostream& out, const Report& report) {
    emit_row(out, {"model", cell("k_p_crit", "rad/s/W"), "status", "verdict", "exceeding_points", "grid_points",
                   "worst_excess"});
    for (const auto& r : report.rows) {
        const bool ref = r.kind == ModelKind::Detailed;
        emit_row(out, {model_name(r.kind), format_double(r.at_fixed_kq.k_p_critical),
                       boundary_status_name(r.at_fixed_kq.status), ref ? "reference" : verdict_name(r.comparison.verdict),
                       std::to_string(ref ? 0 : r.comparison.exceeding_points),
                       std::to_string(ref ? r.boundary.points.size() : r.comparison.grid_points),
                       format_double(ref ? 0.0 : r.comparison.worst_excess)});
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream in(line);
    std::string c;
    while (std::getline(in, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

} // namespace mgrid
