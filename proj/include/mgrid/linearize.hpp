#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mgrid/equilibrium.hpp"
#include "mgrid/power.hpp"
#include "mgrid/state.hpp"
#include "mgrid/types.hpp"

namespace mgrid {

/// Small-signal model Gamma * dx~/dt = A * x~ around an equilibrium.
/// Droop rows follow the 1/k_p, 1/k_q scaling (tau * Lambda_p on the
/// diagonal of Gamma) whenever the gain is positive.
struct LinearModel {
    ModelKind kind = ModelKind::Detailed;
    Matrix gamma;
    Matrix a;
    std::vector<std::string> state_labels;
    Equilibrium equilibrium;
    double gamma_condition = 1.0;

    /// Gamma^{-1} A.
    Matrix system_matrix() const;
};

/// Assembles Gamma and A block by block from closed-form partial
/// derivatives of the model equations. Throws NumericalError if Gamma is
/// singular.
LinearModel linearize_analytic(const Equilibrium& eq);

/// High-fidelity model with explicit G', B' weights; SubsyncTerms::none()
/// collapses Gamma_hf to the conventional 3rd-order structure.
LinearModel linearize_hf3(const Equilibrium& eq, SubsyncTerms terms);

/// Central-difference Jacobian of f at x with h_j = eps^(1/3) * (1 + |x_j|) * step_scale.
Matrix numeric_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double step_scale = 1.0);

/// Central-difference Jacobian of the explicit model right-hand side at the
/// equilibrium (for Hf3 the mass-matrix-solved form).
Matrix linearize_numeric(const Equilibrium& eq, double step_scale = 1.0);

/// Tangent of the rotational symmetry at x: both angles advance by one and
/// synchronous-frame currents rotate. Gamma^{-1} A annihilates it at an
/// equilibrium.
Vector rotational_mode(ModelKind kind, const Vector& x);

/// ||a - b||_F / ||b||_F.
double relative_frobenius_error(const Matrix& a, const Matrix& b);

} // namespace mgrid
