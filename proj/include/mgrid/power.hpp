#pragma once

#include <array>
#include <complex>

#include "mgrid/params.hpp"
#include "mgrid/types.hpp"

namespace mgrid {

struct PowerPair {
    double P = 0.0; // W
    double Q = 0.0; // var
};

/// Active and reactive power of a synchronous-frame current leaving a bus
/// whose local-frame voltage is v_odq: P = I^T T(delta) v, Q = I^T J T(delta) v.
PowerPair port_power(double delta, const Vec2& v_odq, const Vec2& current_DQ);

/// Power drawn by a load. The scalar overload uses v_odq = e * voltage.
PowerPair load_power(double delta, const Vec2& v_odq, const Vec2& load_current);
PowerPair load_power(double delta, double voltage, const Vec2& load_current);

/// Bus voltage phasor V * exp(j * delta) in the synchronous frame.
struct BusPhasor {
    double delta = 0.0;
    double V = 0.0;

    std::complex<double> complex() const { return std::polar(V, delta); }
};

struct BusRates {
    double delta_dot = 0.0;
    double V_dot = 0.0;
};

/// Quasi-stationary line solution. `ik` is the flow leaving bus i, `ki` the
/// flow leaving bus k.
struct StaticLineFlow {
    std::complex<double> current; // I_D + j I_Q, flowing i -> k
    PowerPair ik;
    PowerPair ki;
};

StaticLineFlow static_line_flow(BusPhasor bus_i, BusPhasor bus_k, const LineParams& line, double omega0);

/// Zero-order power leaving `from` towards `to` together with its gradient
/// with respect to (delta_from, delta_to, V_from, V_to).
struct FlowPartials {
    PowerPair value;
    std::array<double, 4> dP{};
    std::array<double, 4> dQ{};
};

FlowPartials static_flow_partials(BusPhasor from, BusPhasor to, double G, double B);

/// G' and B' weights of the first-order Taylor line correction.
struct SubsyncTerms {
    double G_prime = 0.0;
    double B_prime = 0.0;

    static SubsyncTerms of(const LineParams& line, double omega0) {
        return {line.sub_conductance(omega0), line.sub_susceptance(omega0)};
    }
    static SubsyncTerms none() { return {}; }
};

/// First-order line power leaving `from`. It is affine in the bus rates:
/// value = zero_order + sum_j coefficient_j * rate_j over the rate vector
/// (delta_dot_from, delta_dot_to, V_dot_from, V_dot_to).
struct TaylorLinePower {
    PowerPair zero_order;
    std::array<double, 4> dP{};
    std::array<double, 4> dQ{};

    PowerPair evaluate(BusRates from, BusRates to) const;
};

TaylorLinePower taylor_line_terms(BusPhasor from, BusPhasor to, const LineParams& line, double omega0,
                                  SubsyncTerms terms);

/// P1_ik, Q1_ik with the line's own G', B'.
PowerPair taylor_line_power(BusPhasor bus_i, BusPhasor bus_k, BusRates rate_i, BusRates rate_k,
                            const LineParams& line, double omega0);

} // namespace mgrid
