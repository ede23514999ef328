#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mgrid/models.hpp"
#include "mgrid/params.hpp"
#include "mgrid/state.hpp"
#include "mgrid/types.hpp"

namespace mgrid {

struct SimOptions {
    double t_end = 1.0;
    double rel_tol = 1e-6;
    double abs_tol = 1e-8;
    double max_step = 1e-3;
    double initial_step = 1e-6;
    double min_step = 1e-14;
    /// Output grid spacing; 1e-3 s or finer keeps plots at >= 1 kHz.
    double sample_interval = 1e-3;
    /// A run is labeled diverged once max|x| exceeds this factor times the
    /// initial max|x| (floored at one).
    double divergence_factor = 1e6;

    void validate() const;
};

enum class SimStatus { Completed, Diverged, StepUnderflow, NonFinite, SingularMassMatrix };

std::string status_name(SimStatus status);

struct Trajectory {
    ModelKind kind = ModelKind::Detailed;
    std::vector<double> times;
    Matrix states; // one row per sample
    SimStatus status = SimStatus::Completed;
    std::string message;
    long accepted_steps = 0;
    long rejected_steps = 0;

    Vector state(std::size_t sample) const { return states.row(static_cast<Eigen::Index>(sample)).transpose(); }
    Vector final_state() const { return state(times.size() - 1); }
};

using RhsFunction = std::function<Vector(double t, const Vector& x)>;

/// Dormand-Prince 5(4) with dense output, sampled on a uniform grid. The
/// observer, when set, may stop the integration early by returning false.
struct OdeResult {
    std::vector<double> times;
    std::vector<Vector> states;
    SimStatus status = SimStatus::Completed;
    std::string message;
    long accepted_steps = 0;
    long rejected_steps = 0;
};

OdeResult integrate_dopri5(const RhsFunction& f, double t0, const Vector& x0, const SimOptions& opts,
                           const std::function<bool(double, const Vector&)>& observer = {});

/// Integrates one of the average models from x0.
Trajectory simulate(ModelKind kind, const MicrogridConfig& cfg, const Vector& x0, const SimOptions& opts);

/// Derived channels of a trajectory sample.
struct TrajectorySample {
    double t = 0.0;
    double f_i = 0.0; // Hz
    double f_k = 0.0;
    double V_i = 0.0;
    double V_k = 0.0;
    double P_i = 0.0;
    double P_k = 0.0;
};

std::vector<TrajectorySample> derived_channels(const Trajectory& traj, const MicrogridConfig& cfg);

} // namespace mgrid
