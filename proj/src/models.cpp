#include "mgrid/models.hpp"

#include <cmath>
#include <sstream>

#include "mgrid/frames.hpp"

namespace mgrid {

namespace {

Vec2 pair_at(const Vector& x, int offset, int bus) { return x.segment<2>(offset + 2 * bus); }

/// Line current leaving bus b; the stored current flows i -> k.
Vec2 line_current_from(const Vector& x, const StateLayout& l, int bus) {
    const Vec2 I = x.segment<2>(l.line_current);
    return bus == kBusI ? Vec2(I) : Vec2(-I);
}

BusPhasor phasor(const Vector& x, const StateLayout& l, int bus) {
    return {x(l.delta + bus), x(l.voltage + bus)};
}

/// Load current ODE, shared by every model: L dI/dt = (-R + w0 L J) I + T(delta) v.
Vec2 load_derivative(const LoadParams& load, double omega0, const Vec2& current, const Vec2& bus_voltage_DQ) {
    return ((-load.R * Mat2::Identity() + omega0 * load.L * j_matrix()) * current + bus_voltage_DQ) / load.L;
}

void droop_rows(Vector& dx, const StateLayout& l, const Vector& x, const MicrogridConfig& cfg, int bus,
                const PowerPair& injected) {
    const InverterParams& p = cfg.inverter[bus];
    dx(l.delta + bus) = x(l.omega + bus) - cfg.omega0;
    dx(l.omega + bus) = (-x(l.omega + bus) + p.omega_n - p.k_p * injected.P) / p.tau;
    dx(l.voltage + bus) = (-x(l.voltage + bus) + p.V_n - p.k_q * injected.Q) / p.tau;
}

/// Load rows and load power for the reduced models, v_odq = e V.
PowerPair reduced_load(Vector& dx, const StateLayout& l, const Vector& x, const MicrogridConfig& cfg, int bus) {
    const double delta = x(l.delta + bus);
    const double V = x(l.voltage + bus);
    const Vec2 Il = pair_at(x, l.load_current, bus);
    const Vec2 u = rotation(delta) * e_vector() * V;
    dx.segment<2>(l.load_current + 2 * bus) = load_derivative(cfg.load[bus], cfg.omega0, Il, u);
    return load_power(delta, V, Il);
}

PowerPair operator+(const PowerPair& a, const PowerPair& b) { return {a.P + b.P, a.Q + b.Q}; }

double condition_2x2(const Mat2& m) {
    Eigen::JacobiSVD<Mat2> svd(m);
    const auto sv = svd.singularValues();
    return sv(1) > 0.0 ? sv(0) / sv(1) : std::numeric_limits<double>::infinity();
}

} // namespace

Vec2 output_current(const Vector& x, const MicrogridConfig& cfg, int bus) {
    (void)cfg;
    require_layout(ModelKind::Detailed, x);
    const StateLayout& l = layout(ModelKind::Detailed);
    const Vec2 total = line_current_from(x, l, bus) + pair_at(x, l.load_current, bus);
    return rotation(x(l.delta + bus)).transpose() * total;
}

Vector detailed_rhs(const Vector& x, const MicrogridConfig& cfg) {
    require_layout(ModelKind::Detailed, x);
    const StateLayout& l = layout(ModelKind::Detailed);
    const Mat2 J = j_matrix();
    Vector dx(l.size);

    std::array<Vec2, 2> u; // T(delta) v_odq, bus voltages in the DQ frame
    for (int b = 0; b < 2; ++b) {
        const InverterParams& p = cfg.inverter[b];
        const double delta = x(l.delta + b);
        const double omega = x(l.omega + b);
        const double V = x(l.voltage + b);
        const Vec2 phi = pair_at(x, l.phi, b);
        const Vec2 gamma = pair_at(x, l.gamma, b);
        const Vec2 i = pair_at(x, l.filter_current, b);
        const Vec2 vo = pair_at(x, l.output_voltage, b);
        const Vec2 Il = pair_at(x, l.load_current, b);
        const Mat2 T = rotation(delta);

        const Vec2 io = T.transpose() * (line_current_from(x, l, b) + Il);
        const PowerPair injected{io.dot(vo), io.dot(J * vo)};
        droop_rows(dx, l, x, cfg, b, injected);

        const Vec2 v_error = e_vector() * V - vo;
        const Vec2 i_ref = p.K_PV * v_error + p.K_IV * phi;
        const Vec2 v_cmd = p.K_PC * (i_ref - i) + p.K_IC * gamma + omega * p.L_f * (J * i);

        dx.segment<2>(l.phi + 2 * b) = v_error;
        dx.segment<2>(l.gamma + 2 * b) = i_ref - i;
        dx.segment<2>(l.filter_current + 2 * b) = (omega * p.L_f * (J * i) - p.R_f * i + v_cmd - vo) / p.L_f;
        dx.segment<2>(l.output_voltage + 2 * b) = (omega * p.C_f * (J * vo) + i - io) / p.C_f;

        u[b] = T * vo;
        dx.segment<2>(l.load_current + 2 * b) = load_derivative(cfg.load[b], cfg.omega0, Il, u[b]);
    }

    const Vec2 I = x.segment<2>(l.line_current);
    dx.segment<2>(l.line_current) =
        ((-cfg.line.R * Mat2::Identity() + cfg.omega0 * cfg.line.L * J) * I + u[kBusI] - u[kBusK]) / cfg.line.L;
    return dx;
}

Vector em5_rhs(const Vector& x, const MicrogridConfig& cfg) {
    require_layout(ModelKind::Em5, x);
    const StateLayout& l = layout(ModelKind::Em5);
    Vector dx(l.size);

    std::array<Vec2, 2> u;
    for (int b = 0; b < 2; ++b) {
        const double delta = x(l.delta + b);
        const double V = x(l.voltage + b);
        u[b] = rotation(delta) * e_vector() * V;
        const PowerPair load = reduced_load(dx, l, x, cfg, b);
        const PowerPair line = load_power(delta, V, line_current_from(x, l, b));
        droop_rows(dx, l, x, cfg, b, load + line);
    }

    const Vec2 I = x.segment<2>(l.line_current);
    dx.segment<2>(l.line_current) =
        ((-cfg.line.R * Mat2::Identity() + cfg.omega0 * cfg.line.L * j_matrix()) * I + u[kBusI] - u[kBusK]) /
        cfg.line.L;
    return dx;
}

Vector conv3_rhs(const Vector& x, const MicrogridConfig& cfg) {
    require_layout(ModelKind::Conv3, x);
    const StateLayout& l = layout(ModelKind::Conv3);
    Vector dx(l.size);

    const StaticLineFlow flow = static_line_flow(phasor(x, l, kBusI), phasor(x, l, kBusK), cfg.line, cfg.omega0);
    const std::array<PowerPair, 2> line{flow.ik, flow.ki};
    for (int b = 0; b < 2; ++b) {
        const PowerPair load = reduced_load(dx, l, x, cfg, b);
        droop_rows(dx, l, x, cfg, b, load + line[b]);
    }
    return dx;
}

Vector hf3_rhs(const Vector& x, const MicrogridConfig& cfg) {
    return hf3_rhs(x, cfg, SubsyncTerms::of(cfg.line, cfg.omega0));
}

Vector hf3_rhs(const Vector& x, const MicrogridConfig& cfg, SubsyncTerms terms) {
    require_layout(ModelKind::Hf3, x);
    const StateLayout& l = layout(ModelKind::Hf3);
    Vector dx(l.size);

    const BusPhasor pi = phasor(x, l, kBusI);
    const BusPhasor pk = phasor(x, l, kBusK);
    const std::array<TaylorLinePower, 2> line{taylor_line_terms(pi, pk, cfg.line, cfg.omega0, terms),
                                              taylor_line_terms(pk, pi, cfg.line, cfg.omega0, terms)};

    std::array<PowerPair, 2> load;
    std::array<double, 2> delta_dot;
    for (int b = 0; b < 2; ++b) {
        load[b] = reduced_load(dx, l, x, cfg, b);
        delta_dot[b] = x(l.omega + b) - cfg.omega0;
        dx(l.delta + b) = delta_dot[b];
    }

    // Voltage rows: tau V_dot_b + k_q,b dQ1_b/dV_dot . V_dot = -V_b + V_n - k_q,b (Q_l + Q1|V_dot=0).
    // In line[b] the rate ordering is (own delta, other delta, own V, other V).
    Mat2 mass;
    Vec2 rhs;
    for (int b = 0; b < 2; ++b) {
        const InverterParams& p = cfg.inverter[b];
        const int o = 1 - b;
        const TaylorLinePower& t = line[b];
        const double q_known = t.zero_order.Q + t.dQ[0] * delta_dot[b] + t.dQ[1] * delta_dot[o];
        mass(b, b) = p.tau + p.k_q * t.dQ[2];
        mass(b, o) = p.k_q * t.dQ[3];
        rhs(b) = -x(l.voltage + b) + p.V_n - p.k_q * (load[b].Q + q_known);
    }
    const double cond = condition_2x2(mass);
    if (!std::isfinite(cond) || cond > 1e12) {
        std::ostringstream msg;
        msg << "high-fidelity mass matrix is singular (condition estimate " << cond << ")";
        throw SingularMassMatrix(msg.str(), cond);
    }
    const Vec2 v_dot = mass.partialPivLu().solve(rhs);

    for (int b = 0; b < 2; ++b) {
        const InverterParams& p = cfg.inverter[b];
        const int o = 1 - b;
        const PowerPair line_power = line[b].evaluate({delta_dot[b], v_dot(b)}, {delta_dot[o], v_dot(o)});
        dx(l.voltage + b) = v_dot(b);
        dx(l.omega + b) = (-x(l.omega + b) + p.omega_n - p.k_p * (load[b].P + line_power.P)) / p.tau;
    }
    return dx;
}

Vector model_rhs(ModelKind kind, const Vector& x, const MicrogridConfig& cfg) {
    switch (kind) {
    case ModelKind::Detailed:
        return detailed_rhs(x, cfg);
    case ModelKind::Em5:
        return em5_rhs(x, cfg);
    case ModelKind::Conv3:
        return conv3_rhs(x, cfg);
    case ModelKind::Hf3:
        return hf3_rhs(x, cfg);
    }
    throw ValidationError("unknown model kind");
}

PowerBalance power_balance(ModelKind kind, const Vector& x, const MicrogridConfig& cfg) {
    require_layout(kind, x);
    const StateLayout& l = layout(kind);
    PowerBalance pb;
    switch (kind) {
    case ModelKind::Detailed:
        for (int b = 0; b < 2; ++b) {
            const double delta = x(l.delta + b);
            const Vec2 vo = pair_at(x, l.output_voltage, b);
            pb.load[b] = load_power(delta, vo, pair_at(x, l.load_current, b));
            pb.line[b] = port_power(delta, vo, line_current_from(x, l, b));
        }
        break;
    case ModelKind::Em5:
        for (int b = 0; b < 2; ++b) {
            const double delta = x(l.delta + b);
            const double V = x(l.voltage + b);
            pb.load[b] = load_power(delta, V, pair_at(x, l.load_current, b));
            pb.line[b] = load_power(delta, V, line_current_from(x, l, b));
        }
        break;
    case ModelKind::Conv3: {
        const StaticLineFlow flow = static_line_flow(phasor(x, l, kBusI), phasor(x, l, kBusK), cfg.line, cfg.omega0);
        pb.line = {flow.ik, flow.ki};
        for (int b = 0; b < 2; ++b) {
            pb.load[b] = load_power(x(l.delta + b), x(l.voltage + b), pair_at(x, l.load_current, b));
        }
        break;
    }
    case ModelKind::Hf3: {
        const Vector dx = hf3_rhs(x, cfg);
        const BusPhasor pi = phasor(x, l, kBusI);
        const BusPhasor pk = phasor(x, l, kBusK);
        const BusRates ri{dx(l.delta), dx(l.voltage)};
        const BusRates rk{dx(l.delta + 1), dx(l.voltage + 1)};
        const SubsyncTerms terms = SubsyncTerms::of(cfg.line, cfg.omega0);
        pb.line = {taylor_line_terms(pi, pk, cfg.line, cfg.omega0, terms).evaluate(ri, rk),
                   taylor_line_terms(pk, pi, cfg.line, cfg.omega0, terms).evaluate(rk, ri)};
        for (int b = 0; b < 2; ++b) {
            pb.load[b] = load_power(x(l.delta + b), x(l.voltage + b), pair_at(x, l.load_current, b));
        }
        break;
    }
    }
    for (int b = 0; b < 2; ++b) {
        pb.injected[b] = pb.load[b] + pb.line[b];
    }
    return pb;
}

} // namespace mgrid
