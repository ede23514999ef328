#include "mgrid/power.hpp"

#include <cmath>

#include "mgrid/frames.hpp"

namespace mgrid {

PowerPair port_power(double delta, const Vec2& v_odq, const Vec2& current_DQ) {
    const Vec2 u = rotation(delta) * v_odq;
    return {current_DQ.dot(u), current_DQ.dot(j_matrix() * u)};
}

PowerPair load_power(double delta, const Vec2& v_odq, const Vec2& load_current) {
    return port_power(delta, v_odq, load_current);
}

PowerPair load_power(double delta, double voltage, const Vec2& load_current) {
    return port_power(delta, e_vector() * voltage, load_current);
}

StaticLineFlow static_line_flow(BusPhasor bus_i, BusPhasor bus_k, const LineParams& line, double omega0) {
    const double G = line.conductance(omega0);
    const double B = line.susceptance(omega0);
    const std::complex<double> z(line.R, line.reactance(omega0));
    StaticLineFlow flow;
    flow.current = (bus_i.complex() - bus_k.complex()) / z;
    flow.ik = static_flow_partials(bus_i, bus_k, G, B).value;
    flow.ki = static_flow_partials(bus_k, bus_i, G, B).value;
    return flow;
}

FlowPartials static_flow_partials(BusPhasor from, BusPhasor to, double G, double B) {
    const double c = std::cos(from.delta - to.delta);
    const double s = std::sin(from.delta - to.delta);
    const double vv = from.V * to.V;

    FlowPartials f;
    f.value.P = G * from.V * from.V - G * vv * c + B * vv * s;
    f.value.Q = B * from.V * from.V - B * vv * c - G * vv * s;

    const double dP_dangle = G * vv * s + B * vv * c;
    f.dP = {dP_dangle, -dP_dangle, 2.0 * G * from.V - G * to.V * c + B * to.V * s,
            -G * from.V * c + B * from.V * s};

    const double dQ_dangle = B * vv * s - G * vv * c;
    f.dQ = {dQ_dangle, -dQ_dangle, 2.0 * B * from.V - B * to.V * c - G * to.V * s,
            -B * from.V * c - G * from.V * s};
    return f;
}

PowerPair TaylorLinePower::evaluate(BusRates from, BusRates to) const {
    const std::array<double, 4> rates{from.delta_dot, to.delta_dot, from.V_dot, to.V_dot};
    PowerPair out = zero_order;
    for (int j = 0; j < 4; ++j) {
        out.P += dP[j] * rates[j];
        out.Q += dQ[j] * rates[j];
    }
    return out;
}

TaylorLinePower taylor_line_terms(BusPhasor from, BusPhasor to, const LineParams& line, double omega0,
                                  SubsyncTerms terms) {
    const double c = std::cos(from.delta - to.delta);
    const double s = std::sin(from.delta - to.delta);
    const double Vf = from.V;
    const double vv = from.V * to.V;
    const double Gp = terms.G_prime;
    const double Bp = terms.B_prime;

    TaylorLinePower t;
    t.zero_order = static_flow_partials(from, to, line.conductance(omega0), line.susceptance(omega0)).value;
    // ordering: delta_dot_from, delta_dot_to, V_dot_from, V_dot_to
    t.dP = {-Bp * Vf * Vf, Gp * vv * s + Bp * vv * c, -Gp * Vf, Gp * Vf * c - Bp * Vf * s};
    t.dQ = {Gp * Vf * Vf, -Gp * vv * c + Bp * vv * s, -Bp * Vf, Gp * Vf * s + Bp * Vf * c};
    return t;
}

PowerPair taylor_line_power(BusPhasor bus_i, BusPhasor bus_k, BusRates rate_i, BusRates rate_k,
                            const LineParams& line, double omega0) {
    return taylor_line_terms(bus_i, bus_k, line, omega0, SubsyncTerms::of(line, omega0)).evaluate(rate_i, rate_k);
}

} // namespace mgrid
