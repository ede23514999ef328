#pragma once

#include <optional>

#include "mgrid/params.hpp"
#include "mgrid/state.hpp"
#include "mgrid/types.hpp"

namespace mgrid {

/// Steady state of one model. `config` is the input configuration with
/// omega0 replaced by the solved synchronous frequency.
struct Equilibrium {
    ModelKind kind = ModelKind::Detailed;
    Vector x_star;
    double omega0 = 0.0;
    /// Infinity norm of the model right-hand side at x_star.
    double residual_norm = 0.0;
    /// Bus whose angle is pinned to zero.
    int angle_reference = kBusI;
    MicrogridConfig config;
    int iterations = 0;
    bool used_simulation = false;
};

struct EquilibriumOptions {
    double tolerance = 1e-10;
    /// Residual accepted when Newton stalls at the round-off floor.
    double accept_tolerance = 1e-8;
    int max_iterations = 100;
    bool simulation_fallback = true;
    /// Time budget for the simulation fallback, in seconds of model time.
    double fallback_horizon = 20.0;
};

/// Solves f(x) = 0 with delta_i pinned to zero and omega0 as an unknown in
/// its place. Newton with a forward-difference Jacobian and a backtracking
/// line search; if that fails the nonlinear model is integrated towards the
/// attractor and the result polished with Newton. Throws NumericalError on
/// failure or when the solution has a non-positive voltage.
Equilibrium find_equilibrium(ModelKind kind, const MicrogridConfig& cfg, const std::optional<Vector>& guess = {},
                             const EquilibriumOptions& opts = {});

/// Shifts both angles by `angle` and rotates the synchronous-frame currents
/// accordingly; maps equilibria to equilibria.
Vector rotate_frame(ModelKind kind, const Vector& x, double angle);

/// Detailed-model state whose network part matches a 5th-order state and
/// whose inner controller states are at their steady-state values.
Vector lift_to_detailed(const Vector& em5_state, const MicrogridConfig& cfg);

/// Reduced-model state obtained by dropping blocks from a richer one.
Vector project_state(ModelKind from, const Vector& x, ModelKind to, const MicrogridConfig& cfg);

} // namespace mgrid
