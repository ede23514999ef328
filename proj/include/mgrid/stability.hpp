#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "mgrid/equilibrium.hpp"
#include "mgrid/linearize.hpp"
#include "mgrid/params.hpp"
#include "mgrid/state.hpp"

namespace mgrid {

/// Eigenvalues of Gamma^{-1} A with the zero eigenvalue of the rotational
/// symmetry removed; the remaining n - 1 values decide stability.
struct EigenSet {
    ModelKind kind = ModelKind::Detailed;
    double k_p = 0.0;
    double k_q = 0.0;
    std::vector<std::complex<double>> eigenvalues; // sorted by descending real part
    double spectral_abscissa = 0.0;
    /// Residual |Gamma^{-1} A v0| / |Gamma^{-1} A| of the deflated mode.
    double deflation_residual = 0.0;
    bool generalized = false;
};

/// Threshold on the spectral abscissa below which a model counts as stable.
inline constexpr double kStabilityMargin = 1e-6;

inline bool is_stable(const EigenSet& set, double margin = kStabilityMargin) {
    return set.spectral_abscissa < -margin;
}

EigenSet eigen(const LinearModel& lm);
EigenSet eigen(const Equilibrium& eq);

/// Eigenvalue sweep over equal frequency droop gains, each point warm
/// started from the previous equilibrium.
struct EigenlociSweep {
    ModelKind kind = ModelKind::Detailed;
    double k_q = 0.0;
    std::vector<double> k_p;
    std::vector<EigenSet> sets;
    bool truncated = false;
    std::string note;
};

EigenlociSweep eigenloci_sweep(ModelKind kind, const MicrogridConfig& base, double k_p_lo, double k_p_hi, int n_steps,
                               double k_q);

enum class BoundaryStatus {
    Bracketed,       // Hopf-type crossing: spectral abscissa changes sign
    EquilibriumLoss, // the continued equilibrium disappears first
    Unbounded,       // stable over the whole bracket
    UnstableAtLower, // already unstable at the lower end
};

std::string boundary_status_name(BoundaryStatus status);

struct BoundaryPoint {
    double k_q = 0.0;
    /// Midpoint of the final bracket; +inf when Unbounded, lower end when UnstableAtLower.
    double k_p_critical = 0.0;
    double k_p_stable = 0.0;   // largest k_p verified stable
    double k_p_unstable = 0.0; // smallest k_p verified unstable (or without equilibrium)
    BoundaryStatus status = BoundaryStatus::Bracketed;
};

struct BoundaryOptions {
    double relative_tolerance = 1e-3;
    /// Geometric scan ratio used to walk from the lower bracket end.
    double scan_ratio = 1.08;
    double margin = kStabilityMargin;
};

struct StabilityBoundary {
    ModelKind kind = ModelKind::Detailed;
    std::string rx_preset;
    double bisection_tolerance = 1e-3;
    std::vector<BoundaryPoint> points;
};

/// Critical k_p for one k_q: walk up from k_p_lo along the continued
/// equilibrium branch until instability, then bisect.
BoundaryPoint critical_gain(ModelKind kind, const MicrogridConfig& base, double k_q, double k_p_lo, double k_p_hi,
                            const BoundaryOptions& opts = {});

StabilityBoundary stability_boundary(ModelKind kind, const MicrogridConfig& base, const std::vector<double>& k_q_grid,
                                     double k_p_lo, double k_p_hi, const BoundaryOptions& opts = {},
                                     const std::string& preset_label = "");

/// Evenly spaced grid, lo and hi inclusive; n == 1 yields {lo}.
std::vector<double> linear_grid(double lo, double hi, int n);

} // namespace mgrid
