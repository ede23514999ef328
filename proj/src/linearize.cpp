#include "mgrid/linearize.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mgrid/frames.hpp"
#include "mgrid/models.hpp"

namespace mgrid {

namespace {

using Row2 = Eigen::RowVector2d;

/// Thin wrapper that keeps the block indexing readable.
struct Assembler {
    Matrix& m;

    void add(int r, int c, double v) { m(r, c) += v; }
    void add(int r, int c, const Mat2& b) { m.block<2, 2>(r, c) += b; }
    void add(int r, int c, const Vec2& col) { m.block<2, 1>(r, c) += col; }
    void add(int r, int c, const Row2& row) { m.block<1, 2>(r, c) += row; }
};

/// Row weights of the droop equations: Gamma = tau * s, A_diag = -s, and the
/// power partials enter A as -gain * s. With gain > 0, s = 1/gain.
double droop_scale(double gain) { return gain > 0.0 ? 1.0 / gain : 1.0; }

Mat2 impedance_block(double R, double L, double omega0) {
    return -R * Mat2::Identity() + omega0 * L * j_matrix();
}

/// Rows shared by the reduced models: angle, droop diagonal, load currents.
void reduced_common(Assembler& G, Assembler& A, const StateLayout& l, const Vector& x, const MicrogridConfig& cfg) {
    for (int b = 0; b < 2; ++b) {
        const InverterParams& p = cfg.inverter[b];
        const double sp = droop_scale(p.k_p);
        const double sq = droop_scale(p.k_q);
        G.add(l.delta + b, l.delta + b, 1.0);
        A.add(l.delta + b, l.omega + b, 1.0);
        G.add(l.omega + b, l.omega + b, p.tau * sp);
        A.add(l.omega + b, l.omega + b, -sp);
        G.add(l.voltage + b, l.voltage + b, p.tau * sq);
        A.add(l.voltage + b, l.voltage + b, -sq);

        const double delta = x(l.delta + b);
        const double V = x(l.voltage + b);
        const Vec2 Il = x.segment<2>(l.load_current + 2 * b);
        const Mat2 T = rotation(delta);
        const Mat2 dT = rotation_derivative(delta);
        const Vec2 u = T * e_vector() * V;
        const Mat2 J = j_matrix();
        const int li = l.load_current + 2 * b;

        G.add(li, li, Mat2(cfg.load[b].L * Mat2::Identity()));
        A.add(li, l.delta + b, Vec2(dT * e_vector() * V));
        A.add(li, l.voltage + b, Vec2(T * e_vector()));
        A.add(li, li, impedance_block(cfg.load[b].R, cfg.load[b].L, cfg.omega0));

        // load power partials, weighted into the droop rows
        const double wp = p.k_p * sp;
        const double wq = p.k_q * sq;
        A.add(l.omega + b, l.delta + b, -wp * Il.dot(dT * e_vector() * V));
        A.add(l.omega + b, l.voltage + b, -wp * Il.dot(T * e_vector()));
        A.add(l.omega + b, li, Row2(-wp * u.transpose()));
        A.add(l.voltage + b, l.delta + b, -wq * Il.dot(J * dT * e_vector() * V));
        A.add(l.voltage + b, l.voltage + b, -wq * Il.dot(J * T * e_vector()));
        A.add(l.voltage + b, li, Row2(-wq * (J * u).transpose()));
    }
}

void assemble_detailed(Matrix& gamma, Matrix& a, const Vector& x, const MicrogridConfig& cfg) {
    const StateLayout& l = layout(ModelKind::Detailed);
    Assembler G{gamma};
    Assembler A{a};
    const Mat2 I2 = Mat2::Identity();
    const Mat2 J = j_matrix();
    const Vec2 e = e_vector();
    const Vec2 I_line = x.segment<2>(l.line_current);

    std::array<Mat2, 2> T;
    std::array<Mat2, 2> dT;
    std::array<Vec2, 2> vo;
    for (int b = 0; b < 2; ++b) {
        T[b] = rotation(x(l.delta + b));
        dT[b] = rotation_derivative(x(l.delta + b));
        vo[b] = x.segment<2>(l.output_voltage + 2 * b);
    }

    for (int b = 0; b < 2; ++b) {
        const InverterParams& p = cfg.inverter[b];
        const double sign = b == kBusI ? 1.0 : -1.0;
        const double omega = x(l.omega + b);
        const Vec2 Il = x.segment<2>(l.load_current + 2 * b);
        const Vec2 I_total = sign * I_line + Il;
        const Vec2 i = x.segment<2>(l.filter_current + 2 * b);
        const int phi = l.phi + 2 * b;
        const int gam = l.gamma + 2 * b;
        const int cur = l.filter_current + 2 * b;
        const int vol = l.output_voltage + 2 * b;
        const int load = l.load_current + 2 * b;

        // angle and droop rows
        const double sp = droop_scale(p.k_p);
        const double sq = droop_scale(p.k_q);
        const double wp = p.k_p * sp;
        const double wq = p.k_q * sq;
        G.add(l.delta + b, l.delta + b, 1.0);
        A.add(l.delta + b, l.omega + b, 1.0);
        G.add(l.omega + b, l.omega + b, p.tau * sp);
        A.add(l.omega + b, l.omega + b, -sp);
        G.add(l.voltage + b, l.voltage + b, p.tau * sq);
        A.add(l.voltage + b, l.voltage + b, -sq);

        // P = I_total^T T v_o, Q = I_total^T J T v_o
        const Vec2 u = T[b] * vo[b];
        A.add(l.omega + b, l.delta + b, -wp * I_total.dot(dT[b] * vo[b]));
        A.add(l.omega + b, vol, Row2(-wp * (T[b].transpose() * I_total).transpose()));
        A.add(l.omega + b, l.line_current, Row2(-wp * sign * u.transpose()));
        A.add(l.omega + b, load, Row2(-wp * u.transpose()));
        A.add(l.voltage + b, l.delta + b, -wq * I_total.dot(J * dT[b] * vo[b]));
        A.add(l.voltage + b, vol, Row2(-wq * (I_total.transpose() * J * T[b])));
        A.add(l.voltage + b, l.line_current, Row2(-wq * sign * (J * u).transpose()));
        A.add(l.voltage + b, load, Row2(-wq * (J * u).transpose()));

        // voltage controller integrator: phi' = e V - v_o
        G.add(phi, phi, I2);
        A.add(phi, l.voltage + b, e);
        A.add(phi, vol, Mat2(-I2));

        // current controller integrator: gamma' = K_PV (e V - v_o) + K_IV phi - i
        G.add(gam, gam, I2);
        A.add(gam, l.voltage + b, Vec2(p.K_PV * e));
        A.add(gam, phi, Mat2(p.K_IV * I2));
        A.add(gam, cur, Mat2(-I2));
        A.add(gam, vol, Mat2(-p.K_PV * I2));

        // filter inductor: L_f i' = 2 w L_f J i - R_f i + K_PC(i_ref - i) + K_IC gamma - v_o
        G.add(cur, cur, Mat2(p.L_f * I2));
        A.add(cur, l.omega + b, Vec2(2.0 * p.L_f * (J * i)));
        A.add(cur, l.voltage + b, Vec2(p.K_PC * p.K_PV * e));
        A.add(cur, phi, Mat2(p.K_PC * p.K_IV * I2));
        A.add(cur, gam, Mat2(p.K_IC * I2));
        A.add(cur, cur, Mat2(-p.R_f * I2 + 2.0 * omega * p.L_f * J - p.K_PC * I2));
        A.add(cur, vol, Mat2(-(p.K_PC * p.K_PV + 1.0) * I2));

        // filter capacitor: C_f v_o' = w C_f J v_o + i - T^T I_total
        G.add(vol, vol, Mat2(p.C_f * I2));
        A.add(vol, l.omega + b, Vec2(p.C_f * (J * vo[b])));
        A.add(vol, cur, I2);
        A.add(vol, vol, Mat2(omega * p.C_f * J));
        A.add(vol, l.delta + b, Vec2(-dT[b].transpose() * I_total));
        A.add(vol, l.line_current, Mat2(-sign * T[b].transpose()));
        A.add(vol, load, Mat2(-T[b].transpose()));

        // load: L_l I_l' = Z_l I_l + T v_o
        G.add(load, load, Mat2(cfg.load[b].L * I2));
        A.add(load, load, impedance_block(cfg.load[b].R, cfg.load[b].L, cfg.omega0));
        A.add(load, l.delta + b, Vec2(dT[b] * vo[b]));
        A.add(load, vol, T[b]);

        // line: L I' = Z I + T_i v_oi - T_k v_ok
        A.add(l.line_current, l.delta + b, Vec2(sign * dT[b] * vo[b]));
        A.add(l.line_current, vol, Mat2(sign * T[b]));
    }
    G.add(l.line_current, l.line_current, Mat2(cfg.line.L * I2));
    A.add(l.line_current, l.line_current, impedance_block(cfg.line.R, cfg.line.L, cfg.omega0));
}

void assemble_em5(Matrix& gamma, Matrix& a, const Vector& x, const MicrogridConfig& cfg) {
    const StateLayout& l = layout(ModelKind::Em5);
    Assembler G{gamma};
    Assembler A{a};
    reduced_common(G, A, l, x, cfg);
    const Mat2 J = j_matrix();
    const Vec2 e = e_vector();
    const Vec2 I_line = x.segment<2>(l.line_current);

    for (int b = 0; b < 2; ++b) {
        const InverterParams& p = cfg.inverter[b];
        const double sign = b == kBusI ? 1.0 : -1.0;
        const double delta = x(l.delta + b);
        const double V = x(l.voltage + b);
        const Mat2 T = rotation(delta);
        const Mat2 dT = rotation_derivative(delta);
        const Vec2 u = T * e * V;
        const Vec2 I = sign * I_line;
        const double wp = p.k_p * droop_scale(p.k_p);
        const double wq = p.k_q * droop_scale(p.k_q);

        // line share of the injected power
        A.add(l.omega + b, l.delta + b, -wp * I.dot(dT * e * V));
        A.add(l.omega + b, l.voltage + b, -wp * I.dot(T * e));
        A.add(l.omega + b, l.line_current, Row2(-wp * sign * u.transpose()));
        A.add(l.voltage + b, l.delta + b, -wq * I.dot(J * dT * e * V));
        A.add(l.voltage + b, l.voltage + b, -wq * I.dot(J * T * e));
        A.add(l.voltage + b, l.line_current, Row2(-wq * sign * (J * u).transpose()));

        A.add(l.line_current, l.delta + b, Vec2(sign * dT * e * V));
        A.add(l.line_current, l.voltage + b, Vec2(sign * T * e));
    }
    G.add(l.line_current, l.line_current, Mat2(cfg.line.L * Mat2::Identity()));
    A.add(l.line_current, l.line_current, impedance_block(cfg.line.R, cfg.line.L, cfg.omega0));
}

/// Conventional and high-fidelity 3rd-order models share A; only Gamma
/// differs through the Taylor rate coefficients.
void assemble_third_order(Matrix& gamma, Matrix& a, const Vector& x, const MicrogridConfig& cfg,
                          const SubsyncTerms* terms) {
    const StateLayout& l = layout(ModelKind::Conv3);
    Assembler G{gamma};
    Assembler A{a};
    reduced_common(G, A, l, x, cfg);
    const double Gc = cfg.line.conductance(cfg.omega0);
    const double Bc = cfg.line.susceptance(cfg.omega0);

    for (int b = 0; b < 2; ++b) {
        const InverterParams& p = cfg.inverter[b];
        const int o = 1 - b;
        const double sp = droop_scale(p.k_p);
        const double sq = droop_scale(p.k_q);
        const BusPhasor from{x(l.delta + b), x(l.voltage + b)};
        const BusPhasor to{x(l.delta + o), x(l.voltage + o)};
        const FlowPartials f = static_flow_partials(from, to, Gc, Bc);
        // gradient ordering: delta_from, delta_to, V_from, V_to
        const int cols[4] = {l.delta + b, l.delta + o, l.voltage + b, l.voltage + o};
        for (int j = 0; j < 4; ++j) {
            A.add(l.omega + b, cols[j], -p.k_p * sp * f.dP[j]);
            A.add(l.voltage + b, cols[j], -p.k_q * sq * f.dQ[j]);
        }
        if (terms != nullptr) {
            const TaylorLinePower t = taylor_line_terms(from, to, cfg.line, cfg.omega0, *terms);
            for (int j = 0; j < 4; ++j) {
                G.add(l.omega + b, cols[j], p.k_p * sp * t.dP[j]);
                G.add(l.voltage + b, cols[j], p.k_q * sq * t.dQ[j]);
            }
        }
    }
}

LinearModel assemble(const Equilibrium& eq, const SubsyncTerms* hf_terms) {
    const ModelKind kind = eq.kind;
    const int n = state_size(kind);
    LinearModel lm;
    lm.kind = kind;
    lm.gamma = Matrix::Zero(n, n);
    lm.a = Matrix::Zero(n, n);
    lm.state_labels = state_labels(kind);
    lm.equilibrium = eq;
    const Vector& x = eq.x_star;
    const MicrogridConfig& cfg = eq.config;

    switch (kind) {
    case ModelKind::Detailed:
        assemble_detailed(lm.gamma, lm.a, x, cfg);
        break;
    case ModelKind::Em5:
        assemble_em5(lm.gamma, lm.a, x, cfg);
        break;
    case ModelKind::Conv3:
        assemble_third_order(lm.gamma, lm.a, x, cfg, nullptr);
        break;
    case ModelKind::Hf3:
        assemble_third_order(lm.gamma, lm.a, x, cfg, hf_terms);
        break;
    }

    Eigen::JacobiSVD<Matrix> svd(lm.gamma);
    const Vector sv = svd.singularValues();
    const double smallest = sv(sv.size() - 1);
    lm.gamma_condition = smallest > 0.0 ? sv(0) / smallest : std::numeric_limits<double>::infinity();
    if (!std::isfinite(lm.gamma_condition) || lm.gamma_condition > 1e14) {
        std::ostringstream msg;
        msg << model_name(kind) << " mass matrix Gamma is singular (condition " << lm.gamma_condition << ")";
        throw NumericalError(msg.str());
    }
    return lm;
}

} // namespace

Matrix LinearModel::system_matrix() const { return gamma.fullPivLu().solve(a); }

LinearModel linearize_analytic(const Equilibrium& eq) {
    require_layout(eq.kind, eq.x_star);
    if (eq.kind == ModelKind::Hf3) {
        const SubsyncTerms terms = SubsyncTerms::of(eq.config.line, eq.config.omega0);
        return assemble(eq, &terms);
    }
    return assemble(eq, nullptr);
}

LinearModel linearize_hf3(const Equilibrium& eq, SubsyncTerms terms) {
    if (eq.kind != ModelKind::Hf3) {
        throw ValidationError("linearize_hf3 requires a high-fidelity equilibrium");
    }
    return assemble(eq, &terms);
}

Matrix numeric_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double step_scale) {
    const double base = std::cbrt(std::numeric_limits<double>::epsilon());
    const Eigen::Index n = x.size();
    Matrix jac(f(x).size(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double h = base * (1.0 + std::abs(x(j))) * step_scale;
        Vector xp = x;
        Vector xm = x;
        xp(j) += h;
        xm(j) -= h;
        jac.col(j) = (f(xp) - f(xm)) / (xp(j) - xm(j));
    }
    return jac;
}

Matrix linearize_numeric(const Equilibrium& eq, double step_scale) {
    const ModelKind kind = eq.kind;
    const MicrogridConfig& cfg = eq.config;
    return numeric_jacobian([&](const Vector& x) { return model_rhs(kind, x, cfg); }, eq.x_star, step_scale);
}

Vector rotational_mode(ModelKind kind, const Vector& x) {
    require_layout(kind, x);
    const StateLayout& l = layout(kind);
    const Mat2 generator = rotation_derivative(0.0);
    Vector v = Vector::Zero(l.size);
    v(l.delta) = 1.0;
    v(l.delta + 1) = 1.0;
    if (l.line_current >= 0) {
        v.segment<2>(l.line_current) = generator * x.segment<2>(l.line_current);
    }
    for (int b = 0; b < 2; ++b) {
        v.segment<2>(l.load_current + 2 * b) = generator * x.segment<2>(l.load_current + 2 * b);
    }
    return v;
}

double relative_frobenius_error(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

} // namespace mgrid
