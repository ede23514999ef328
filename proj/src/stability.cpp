#include "mgrid/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace mgrid {

namespace {

std::vector<std::complex<double>> sorted(std::vector<std::complex<double>> values) {
    std::sort(values.begin(), values.end(), [](const auto& x, const auto& y) {
        if (x.real() != y.real()) {
            return x.real() > y.real();
        }
        return x.imag() > y.imag();
    });
    return values;
}

struct Evaluation {
    std::optional<Equilibrium> eq;
    std::optional<EigenSet> set;
    bool stable = false;
};

Evaluation evaluate(ModelKind kind, const MicrogridConfig& base, double k_p, double k_q,
                    const std::optional<Vector>& guess, double margin) {
    Evaluation ev;
    EquilibriumOptions eo;
    // the sweep wants the continued branch, not whatever simulation finds
    eo.simulation_fallback = !guess.has_value();
    try {
        ev.eq = find_equilibrium(kind, base.with_gains(k_p, k_q), guess, eo);
        ev.set = eigen(*ev.eq);
        ev.stable = is_stable(*ev.set, margin);
    } catch (const NumericalError&) {
        ev.stable = false;
    }
    return ev;
}

} // namespace

EigenSet eigen(const LinearModel& lm) {
    const Equilibrium& eq = lm.equilibrium;
    EigenSet set;
    set.kind = lm.kind;
    set.k_p = eq.config.inverter[kBusI].k_p;
    set.k_q = eq.config.inverter[kBusI].k_q;

    const Vector v0 = rotational_mode(lm.kind, eq.x_star).normalized();
    const Eigen::Index n = v0.size();

    if (lm.gamma_condition <= 1e8) {
        const Matrix m = lm.system_matrix();
        set.deflation_residual = (m * v0).norm() / std::max(m.norm(), 1e-300);

        // Orthogonal Q with first column along v0; Q^T M Q is block upper
        // triangular with the structural zero in the corner.
        const Matrix basis = v0;
        Eigen::HouseholderQR<Matrix> qr(basis);
        const Matrix q = qr.householderQ();
        const Matrix reduced = (q.transpose() * m * q).bottomRightCorner(n - 1, n - 1);
        Eigen::EigenSolver<Matrix> solver(reduced, false);
        if (solver.info() != Eigen::Success) {
            throw NumericalError("eigensolver did not converge for " + model_name(lm.kind));
        }
        const auto values = solver.eigenvalues();
        set.eigenvalues.assign(values.data(), values.data() + values.size());
    } else {
        // Ill-conditioned Gamma: solve det(A - lambda Gamma) = 0 directly and
        // drop the eigenvalue nearest the structural zero.
        set.generalized = true;
        Eigen::GeneralizedEigenSolver<Matrix> solver(lm.a, lm.gamma, false);
        if (solver.info() != Eigen::Success) {
            throw NumericalError("generalized eigensolver did not converge for " + model_name(lm.kind));
        }
        const Eigen::VectorXcd values = solver.eigenvalues();
        std::vector<std::complex<double>> all(values.data(), values.data() + values.size());
        const auto nearest = std::min_element(all.begin(), all.end(),
                                              [](const auto& x, const auto& y) { return std::abs(x) < std::abs(y); });
        all.erase(nearest);
        set.eigenvalues = all;
        set.deflation_residual = (lm.a * v0).norm() / std::max(lm.a.norm(), 1e-300);
    }

    set.eigenvalues = sorted(set.eigenvalues);
    set.spectral_abscissa = set.eigenvalues.empty() ? -std::numeric_limits<double>::infinity()
                                                    : set.eigenvalues.front().real();
    return set;
}

EigenSet eigen(const Equilibrium& eq) { return eigen(linearize_analytic(eq)); }

std::vector<double> linear_grid(double lo, double hi, int n) {
    if (n < 1) {
        throw ValidationError("grid needs at least one point");
    }
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        grid.push_back(n == 1 ? lo : lo + (hi - lo) * j / (n - 1));
    }
    return grid;
}

EigenlociSweep eigenloci_sweep(ModelKind kind, const MicrogridConfig& base, double k_p_lo, double k_p_hi, int n_steps,
                               double k_q) {
    if (!(k_p_lo < k_p_hi) && n_steps > 1) {
        throw ValidationError("eigenloci sweep requires k_p_lo < k_p_hi");
    }
    EigenlociSweep sweep;
    sweep.kind = kind;
    sweep.k_q = k_q;
    std::optional<Vector> guess;
    for (double k_p : linear_grid(k_p_lo, k_p_hi, n_steps)) {
        try {
            EquilibriumOptions eo;
            eo.simulation_fallback = !guess.has_value();
            const Equilibrium eq = find_equilibrium(kind, base.with_gains(k_p, k_q), guess, eo);
            sweep.k_p.push_back(k_p);
            sweep.sets.push_back(eigen(eq));
            guess = eq.x_star;
        } catch (const NumericalError& e) {
            sweep.truncated = true;
            sweep.note = "equilibrium lost at k_p=" + std::to_string(k_p) + ": " + e.what();
            break;
        }
    }
    return sweep;
}

std::string boundary_status_name(BoundaryStatus status) {
    switch (status) {
    case BoundaryStatus::Bracketed:
        return "bracketed";
    case BoundaryStatus::EquilibriumLoss:
        return "equilibrium-loss";
    case BoundaryStatus::Unbounded:
        return "unbounded";
    case BoundaryStatus::UnstableAtLower:
        return "unstable-at-lower";
    }
    return "unknown";
}

BoundaryPoint critical_gain(ModelKind kind, const MicrogridConfig& base, double k_q, double k_p_lo, double k_p_hi,
                            const BoundaryOptions& opts) {
    if (!(k_p_lo > 0.0 && k_p_lo < k_p_hi)) {
        throw ValidationError("k_p bracket must satisfy 0 < lo < hi");
    }
    BoundaryPoint pt;
    pt.k_q = k_q;

    Evaluation low = evaluate(kind, base, k_p_lo, k_q, std::nullopt, opts.margin);
    if (!low.stable) {
        pt.status = BoundaryStatus::UnstableAtLower;
        pt.k_p_critical = pt.k_p_unstable = k_p_lo;
        return pt;
    }

    double stable_kp = k_p_lo;
    Vector stable_x = low.eq->x_star;
    double unstable_kp = std::numeric_limits<double>::infinity();
    bool lost_equilibrium = false;

    for (double k_p = k_p_lo * opts.scan_ratio;; k_p *= opts.scan_ratio) {
        k_p = std::min(k_p, k_p_hi);
        const Evaluation ev = evaluate(kind, base, k_p, k_q, stable_x, opts.margin);
        if (ev.stable) {
            stable_kp = k_p;
            stable_x = ev.eq->x_star;
        } else {
            unstable_kp = k_p;
            lost_equilibrium = !ev.eq.has_value();
            break;
        }
        if (k_p >= k_p_hi) {
            break;
        }
    }

    if (!std::isfinite(unstable_kp)) {
        pt.status = BoundaryStatus::Unbounded;
        pt.k_p_stable = stable_kp;
        pt.k_p_critical = pt.k_p_unstable = std::numeric_limits<double>::infinity();
        return pt;
    }

    while (unstable_kp - stable_kp > opts.relative_tolerance * stable_kp) {
        const double mid = 0.5 * (stable_kp + unstable_kp);
        const Evaluation ev = evaluate(kind, base, mid, k_q, stable_x, opts.margin);
        if (ev.stable) {
            stable_kp = mid;
            stable_x = ev.eq->x_star;
        } else {
            unstable_kp = mid;
            lost_equilibrium = !ev.eq.has_value();
        }
    }

    pt.status = lost_equilibrium ? BoundaryStatus::EquilibriumLoss : BoundaryStatus::Bracketed;
    pt.k_p_stable = stable_kp;
    pt.k_p_unstable = unstable_kp;
    pt.k_p_critical = 0.5 * (stable_kp + unstable_kp);
    return pt;
}

StabilityBoundary stability_boundary(ModelKind kind, const MicrogridConfig& base, const std::vector<double>& k_q_grid,
                                     double k_p_lo, double k_p_hi, const BoundaryOptions& opts,
                                     const std::string& preset_label) {
    if (!std::is_sorted(k_q_grid.begin(), k_q_grid.end())) {
        throw ValidationError("k_q grid must be increasing");
    }
    StabilityBoundary boundary;
    boundary.kind = kind;
    boundary.rx_preset = preset_label;
    boundary.bisection_tolerance = opts.relative_tolerance;
    for (double k_q : k_q_grid) {
        boundary.points.push_back(critical_gain(kind, base, k_q, k_p_lo, k_p_hi, opts));
    }
    return boundary;
}

} // namespace mgrid
