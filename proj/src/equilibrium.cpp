#include "mgrid/equilibrium.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mgrid/frames.hpp"
#include "mgrid/models.hpp"
#include "mgrid/power.hpp"
#include "mgrid/sim.hpp"

namespace mgrid {

namespace {

/// Per-row weights that turn dx/dt into the physical residual Gamma * dx/dt.
Vector residual_weights(ModelKind kind, const MicrogridConfig& cfg) {
    const StateLayout& l = layout(kind);
    Vector w = Vector::Ones(l.size);
    for (int b = 0; b < 2; ++b) {
        const InverterParams& p = cfg.inverter[b];
        w(l.omega + b) = p.tau;
        w(l.voltage + b) = p.tau;
        if (l.filter_current >= 0) {
            w.segment<2>(l.filter_current + 2 * b).setConstant(p.L_f);
            w.segment<2>(l.output_voltage + 2 * b).setConstant(p.C_f);
        }
        w.segment<2>(l.load_current + 2 * b).setConstant(cfg.load[b].L);
    }
    if (l.line_current >= 0) {
        w.segment<2>(l.line_current).setConstant(cfg.line.L);
    }
    return w;
}

/// Unknown vector z: x with x[delta_i] replaced by omega0.
struct AugmentedSystem {
    ModelKind kind;
    const MicrogridConfig& base;
    Vector weights;

    Vector state(const Vector& z) const {
        Vector x = z;
        x(layout(kind).delta + kBusI) = 0.0;
        return x;
    }

    MicrogridConfig config(const Vector& z) const {
        MicrogridConfig cfg = base;
        cfg.omega0 = z(layout(kind).delta + kBusI);
        return cfg;
    }

    Vector raw(const Vector& z) const { return model_rhs(kind, state(z), config(z)); }

    Vector scaled(const Vector& z) const { return raw(z).cwiseProduct(weights); }

    Vector pack(const Vector& x, double omega0) const {
        Vector z = x;
        z(layout(kind).delta + kBusI) = omega0;
        return z;
    }
};

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

bool finite_residual(const AugmentedSystem& sys, const Vector& z, Vector& out) {
    try {
        out = sys.scaled(z);
    } catch (const NumericalError&) {
        return false;
    }
    return out.allFinite();
}

struct NewtonOutcome {
    Vector z;
    double raw_norm = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

NewtonOutcome newton(const AugmentedSystem& sys, Vector z, const EquilibriumOptions& opts) {
    NewtonOutcome out;
    const Eigen::Index n = z.size();
    const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());

    Vector r;
    if (!finite_residual(sys, z, r)) {
        out.z = z;
        return out;
    }
    double best_raw = inf_norm(sys.raw(z));
    int stalled = 0;

    for (int it = 0; it < opts.max_iterations; ++it) {
        out.iterations = it;
        if (best_raw <= opts.tolerance) {
            break;
        }

        Matrix jac(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double h = sqrt_eps * (1.0 + std::abs(z(j)));
            Vector zp = z;
            zp(j) += h;
            Vector rp;
            if (!finite_residual(sys, zp, rp)) {
                out.z = z;
                out.raw_norm = best_raw;
                return out;
            }
            jac.col(j) = (rp - r) / h;
        }

        const Vector step = jac.fullPivLu().solve(-r);
        if (!step.allFinite()) {
            break;
        }

        const double merit = r.squaredNorm();
        double alpha = 1.0;
        Vector z_new;
        Vector r_new;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
            z_new = z + alpha * step;
            if (finite_residual(sys, z_new, r_new) && r_new.squaredNorm() <= (1.0 - 1e-4 * alpha) * merit) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            // Near the round-off floor no step decreases the merit; keep the
            // full step only if it does not make things worse.
            z_new = z + step;
            if (!finite_residual(sys, z_new, r_new) || r_new.squaredNorm() > merit) {
                break;
            }
        }

        z = z_new;
        r = r_new;
        const double raw_norm = inf_norm(sys.raw(z));
        if (raw_norm < 0.5 * best_raw) {
            stalled = 0;
        } else if (++stalled >= 4) {
            best_raw = std::min(best_raw, raw_norm);
            out.iterations = it + 1;
            break;
        }
        best_raw = std::min(best_raw, raw_norm);
        out.iterations = it + 1;
    }

    out.z = z;
    out.raw_norm = inf_norm(sys.raw(z));
    out.converged = out.raw_norm <= opts.accept_tolerance;
    return out;
}

bool physical(ModelKind kind, const Vector& x) {
    const StateLayout& l = layout(kind);
    return x(l.voltage) > 0.0 && x(l.voltage + 1) > 0.0;
}

/// Integrates towards the attractor, re-centering the synchronous frame
/// between chunks so that the angles stop drifting.
std::optional<Vector> settle_by_simulation(ModelKind kind, const MicrogridConfig& base, Vector x, double& omega0,
                                           double horizon) {
    const StateLayout& l = layout(kind);
    const Vector w = residual_weights(kind, base);
    SimOptions so;
    so.t_end = 0.25;
    so.rel_tol = 1e-8;
    so.abs_tol = 1e-9;
    so.sample_interval = so.t_end;
    for (double t = 0.0; t < horizon; t += so.t_end) {
        MicrogridConfig cfg = base;
        cfg.omega0 = omega0;
        const Trajectory traj = simulate(kind, cfg, x, so);
        if (traj.status != SimStatus::Completed) {
            return std::nullopt;
        }
        x = traj.final_state();
        omega0 = 0.5 * (x(l.omega) + x(l.omega + 1));
        x = rotate_frame(kind, x, -x(l.delta));
        cfg.omega0 = omega0;
        const Vector f = model_rhs(kind, x, cfg);
        if (inf_norm(f.cwiseProduct(w)) < 1e-6) {
            return x;
        }
    }
    return std::nullopt;
}

Equilibrium finish(ModelKind kind, const MicrogridConfig& cfg, const AugmentedSystem& sys, const NewtonOutcome& n,
                   bool used_simulation) {
    Equilibrium eq;
    eq.kind = kind;
    eq.x_star = sys.state(n.z);
    eq.omega0 = n.z(layout(kind).delta + kBusI);
    eq.config = cfg;
    eq.config.omega0 = eq.omega0;
    eq.residual_norm = n.raw_norm;
    eq.iterations = n.iterations;
    eq.used_simulation = used_simulation;
    return eq;
}

} // namespace

Vector rotate_frame(ModelKind kind, const Vector& x, double angle) {
    require_layout(kind, x);
    const StateLayout& l = layout(kind);
    const Mat2 T = rotation(angle);
    Vector y = x;
    y(l.delta) += angle;
    y(l.delta + 1) += angle;
    if (l.line_current >= 0) {
        y.segment<2>(l.line_current) = T * x.segment<2>(l.line_current);
    }
    for (int b = 0; b < 2; ++b) {
        y.segment<2>(l.load_current + 2 * b) = T * x.segment<2>(l.load_current + 2 * b);
    }
    return y;
}

Vector lift_to_detailed(const Vector& em5_state, const MicrogridConfig& cfg) {
    require_layout(ModelKind::Em5, em5_state);
    const StateLayout& s = layout(ModelKind::Em5);
    const StateLayout& d = layout(ModelKind::Detailed);
    const Mat2 J = j_matrix();
    Vector x = Vector::Zero(d.size);
    for (int b = 0; b < 2; ++b) {
        const InverterParams& p = cfg.inverter[b];
        const double delta = em5_state(s.delta + b);
        const double omega = em5_state(s.omega + b);
        const double V = em5_state(s.voltage + b);
        x(d.delta + b) = delta;
        x(d.omega + b) = omega;
        x(d.voltage + b) = V;
        const Vec2 Il = em5_state.segment<2>(s.load_current + 2 * b);
        const Vec2 Iline = b == kBusI ? Vec2(em5_state.segment<2>(s.line_current))
                                      : Vec2(-em5_state.segment<2>(s.line_current));
        const Vec2 vo = e_vector() * V;
        const Vec2 io = rotation(delta).transpose() * (Iline + Il);
        // Cf dvo/dt = 0, phi and gamma from the controller steady state
        const Vec2 i = io - omega * p.C_f * (J * vo);
        const Vec2 phi = i / p.K_IV;
        const Vec2 gamma = (vo + p.R_f * i - 2.0 * omega * p.L_f * (J * i)) / p.K_IC;
        x.segment<2>(d.phi + 2 * b) = phi;
        x.segment<2>(d.gamma + 2 * b) = gamma;
        x.segment<2>(d.filter_current + 2 * b) = i;
        x.segment<2>(d.output_voltage + 2 * b) = vo;
        x.segment<2>(d.load_current + 2 * b) = Il;
    }
    x.segment<2>(d.line_current) = em5_state.segment<2>(s.line_current);
    return x;
}

Vector project_state(ModelKind from, const Vector& x, ModelKind to, const MicrogridConfig& cfg) {
    require_layout(from, x);
    const StateLayout& a = layout(from);
    const StateLayout& b = layout(to);
    Vector y = Vector::Zero(b.size);
    y.head<6>() = x.head<6>();
    for (int bus = 0; bus < 2; ++bus) {
        y.segment<2>(b.load_current + 2 * bus) = x.segment<2>(a.load_current + 2 * bus);
    }
    if (b.line_current >= 0) {
        if (a.line_current >= 0) {
            y.segment<2>(b.line_current) = x.segment<2>(a.line_current);
        } else {
            const StaticLineFlow flow = static_line_flow({x(a.delta), x(a.voltage)}, {x(a.delta + 1), x(a.voltage + 1)},
                                                         cfg.line, cfg.omega0);
            y(b.line_current) = flow.current.real();
            y(b.line_current + 1) = flow.current.imag();
        }
    }
    if (to == ModelKind::Detailed && from != ModelKind::Detailed) {
        return lift_to_detailed(project_state(from, x, ModelKind::Em5, cfg), cfg);
    }
    return y;
}

Equilibrium find_equilibrium(ModelKind kind, const MicrogridConfig& cfg, const std::optional<Vector>& guess,
                             const EquilibriumOptions& opts) {
    cfg.validate();
    const StateLayout& l = layout(kind);
    AugmentedSystem sys{kind, cfg, residual_weights(kind, cfg)};

    Vector x0 = guess ? *guess : cold_start(kind, cfg);
    require_layout(kind, x0);
    double omega0_guess = guess ? 0.5 * (x0(l.omega) + x0(l.omega + 1)) : cfg.inverter[kBusI].omega_n;
    x0 = rotate_frame(kind, x0, -x0(l.delta));

    std::ostringstream failures;
    NewtonOutcome best;

    auto attempt = [&](const Vector& x, double w0, bool sim) -> std::optional<Equilibrium> {
        NewtonOutcome n = newton(sys, sys.pack(x, w0), opts);
        if (n.raw_norm < best.raw_norm) {
            best = n;
        }
        if (n.converged && physical(kind, sys.state(n.z))) {
            return finish(kind, cfg, sys, n, sim);
        }
        failures << (sim ? " [after simulation]" : "") << " residual " << n.raw_norm;
        return std::nullopt;
    };

    if (auto eq = attempt(x0, omega0_guess, false)) {
        return *eq;
    }

    // The detailed model converges poorly from a cold start with zero
    // controller states; seed it from the 5th-order solution instead.
    if (kind == ModelKind::Detailed && !guess) {
        try {
            EquilibriumOptions inner = opts;
            const Equilibrium em5 = find_equilibrium(ModelKind::Em5, cfg, std::nullopt, inner);
            if (auto eq = attempt(lift_to_detailed(em5.x_star, em5.config), em5.omega0, false)) {
                return *eq;
            }
        } catch (const NumericalError&) {
            failures << " [5th-order seed failed]";
        }
    }

    if (opts.simulation_fallback) {
        double w0 = omega0_guess;
        if (auto settled = settle_by_simulation(kind, cfg, x0, w0, opts.fallback_horizon)) {
            if (auto eq = attempt(*settled, w0, true)) {
                return *eq;
            }
        } else {
            failures << " [simulation did not settle]";
        }
    }

    std::ostringstream msg;
    msg << model_name(kind) << " equilibrium not found; best residual " << best.raw_norm << ";" << failures.str();
    throw NumericalError(msg.str());
}

} // namespace mgrid
