#include "mgrid/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mgrid {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// error weights: b - b_hat
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense output coefficients (Hairer's contd5)
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;
    Vector r1, r2, r3, r4, r5;

    Vector at(double t) const {
        const double s = (t - t0) / h;
        const double s1 = 1.0 - s;
        return r1 + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5)));
    }
};

bool all_finite(const Vector& x) { return x.allFinite(); }

} // namespace

void SimOptions::validate() const {
    if (!(t_end > 0.0)) {
        throw ValidationError("t_end must be positive");
    }
    if (!(rel_tol > 0.0 && rel_tol <= 1e-2) || !(abs_tol > 0.0 && abs_tol <= 1e-2)) {
        throw ValidationError("tolerances must lie in (0, 1e-2]");
    }
    if (!(max_step > 0.0) || !(sample_interval > 0.0) || !(initial_step > 0.0)) {
        throw ValidationError("step sizes must be positive");
    }
}

std::string status_name(SimStatus status) {
    switch (status) {
    case SimStatus::Completed:
        return "completed";
    case SimStatus::Diverged:
        return "diverged";
    case SimStatus::StepUnderflow:
        return "step-underflow";
    case SimStatus::NonFinite:
        return "non-finite";
    case SimStatus::SingularMassMatrix:
        return "singular-mass-matrix";
    }
    return "unknown";
}

OdeResult integrate_dopri5(const RhsFunction& f, double t0, const Vector& x0, const SimOptions& opts,
                           const std::function<bool(double, const Vector&)>& observer) {
    opts.validate();
    OdeResult out;
    const double t_end = t0 + opts.t_end;
    const double limit = opts.divergence_factor * std::max(1.0, x0.cwiseAbs().maxCoeff());

    double t = t0;
    Vector x = x0;
    Vector k1 = f(t, x);
    double h = std::min(opts.initial_step, opts.max_step);
    double err_prev = 1e-4;

    out.times.push_back(t);
    out.states.push_back(x);
    long next_sample = 1;
    const auto sample_time = [&](long n) { return std::min(t0 + n * opts.sample_interval, t_end); };

    if (!all_finite(k1)) {
        out.status = SimStatus::NonFinite;
        out.message = "non-finite derivative at initial state";
        return out;
    }

    while (t < t_end) {
        h = std::min(h, t_end - t);
        if (h < opts.min_step) {
            out.status = SimStatus::StepUnderflow;
            out.message = "step size underflow at t=" + std::to_string(t) + " (probable finite-time blow-up)";
            return out;
        }

        const Vector k2 = f(t + c2 * h, x + h * a21 * k1);
        const Vector k3 = f(t + c3 * h, x + h * (a31 * k1 + a32 * k2));
        const Vector k4 = f(t + c4 * h, x + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const Vector k5 = f(t + c5 * h, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const Vector k6 = f(t + h, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const Vector x_new = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const Vector k7 = f(t + h, x_new);

        const Vector err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const Vector scale = (opts.abs_tol + opts.rel_tol * x.cwiseAbs().cwiseMax(x_new.cwiseAbs()).array()).matrix();
        const double err = std::sqrt((err_vec.array() / scale.array()).square().mean());

        if (!std::isfinite(err)) {
            h *= 0.2;
            ++out.rejected_steps;
            continue;
        }

        if (err <= 1.0) {
            DenseStep dense;
            dense.t0 = t;
            dense.h = h;
            dense.r1 = x;
            dense.r2 = x_new - x;
            dense.r3 = h * k1 - dense.r2;
            dense.r4 = dense.r2 - h * k7 - dense.r3;
            dense.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

            const double t_new = t + h;
            while (next_sample * opts.sample_interval + t0 <= t_new + 1e-12 * opts.sample_interval &&
                   sample_time(next_sample) > out.times.back()) {
                const double ts = sample_time(next_sample);
                out.times.push_back(ts);
                out.states.push_back(ts >= t_new ? x_new : dense.at(ts));
                ++next_sample;
            }

            t = t_new;
            x = x_new;
            k1 = k7;
            ++out.accepted_steps;

            if (!all_finite(x)) {
                out.status = SimStatus::NonFinite;
                out.message = "non-finite state at t=" + std::to_string(t);
                return out;
            }
            if (x.cwiseAbs().maxCoeff() > limit) {
                out.status = SimStatus::Diverged;
                out.message = "state magnitude exceeded divergence limit at t=" + std::to_string(t);
                if (out.times.back() < t) {
                    out.times.push_back(t);
                    out.states.push_back(x);
                }
                return out;
            }
            if (observer && !observer(t, x)) {
                if (out.times.back() < t) {
                    out.times.push_back(t);
                    out.states.push_back(x);
                }
                return out;
            }

            // PI step-size controller
            const double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
            h *= std::clamp(fac, 0.2, 5.0);
            err_prev = std::max(err, 1e-4);
        } else {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            ++out.rejected_steps;
        }
        h = std::min(h, opts.max_step);
    }
    if (out.times.back() < t_end) {
        out.times.push_back(t_end);
        out.states.push_back(x);
    }
    return out;
}

Trajectory simulate(ModelKind kind, const MicrogridConfig& cfg, const Vector& x0, const SimOptions& opts) {
    require_layout(kind, x0);
    bool singular = false;
    std::string singular_message;
    const RhsFunction f = [&](double, const Vector& x) -> Vector {
        try {
            return model_rhs(kind, x, cfg);
        } catch (const SingularMassMatrix& e) {
            singular = true;
            singular_message = e.what();
            return Vector::Constant(x.size(), std::numeric_limits<double>::quiet_NaN());
        }
    };

    OdeResult r = integrate_dopri5(f, 0.0, x0, opts);

    Trajectory traj;
    traj.kind = kind;
    traj.times = std::move(r.times);
    traj.states.resize(static_cast<Eigen::Index>(r.states.size()), x0.size());
    for (std::size_t n = 0; n < r.states.size(); ++n) {
        traj.states.row(static_cast<Eigen::Index>(n)) = r.states[n].transpose();
    }
    traj.status = r.status;
    traj.message = r.message;
    if (singular && r.status != SimStatus::Completed) {
        traj.status = SimStatus::SingularMassMatrix;
        traj.message = singular_message;
    }
    traj.accepted_steps = r.accepted_steps;
    traj.rejected_steps = r.rejected_steps;
    return traj;
}

std::vector<TrajectorySample> derived_channels(const Trajectory& traj, const MicrogridConfig& cfg) {
    const StateLayout& l = layout(traj.kind);
    std::vector<TrajectorySample> out;
    out.reserve(traj.times.size());
    for (std::size_t n = 0; n < traj.times.size(); ++n) {
        const Vector x = traj.state(n);
        TrajectorySample s;
        s.t = traj.times[n];
        s.f_i = x(l.omega) / (2.0 * std::numbers::pi);
        s.f_k = x(l.omega + 1) / (2.0 * std::numbers::pi);
        s.V_i = x(l.voltage);
        s.V_k = x(l.voltage + 1);
        try {
            const PowerBalance pb = power_balance(traj.kind, x, cfg);
            s.P_i = pb.injected[kBusI].P;
            s.P_k = pb.injected[kBusK].P;
        } catch (const NumericalError&) {
            s.P_i = s.P_k = std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(s);
    }
    return out;
}

} // namespace mgrid
