#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mgrid/equilibrium.hpp"
#include "mgrid/models.hpp"
#include "oracles.hpp"

using namespace mgrid;
using oracle::cplx;

namespace {

// Reduced-model right-hand side computed from phasors, with the implicit
// voltage rows of the high-fidelity model solved by fixed-point iteration.
Vector hf3_fixed_point(const Vector& x, const MicrogridConfig& cfg) {
    const StateLayout& l = layout(ModelKind::Hf3);
    Vector dx(l.size);
    double dd[2], vdot[2] = {0.0, 0.0}, PL[2], QL[2];
    for (int b = 0; b < 2; ++b) {
        const double delta = x(l.delta + b);
        const double V = x(l.voltage + b);
        const LoadParams& ld = cfg.load[b];
        const cplx I(x(l.load_current + 2 * b), x(l.load_current + 2 * b + 1));
        const cplx v = oracle::phasor(delta, V);
        const cplx dI = (-cplx(ld.R, cfg.omega0 * ld.L) * I + v) / ld.L;
        dx(l.load_current + 2 * b) = dI.real();
        dx(l.load_current + 2 * b + 1) = dI.imag();
        const oracle::Flow s = oracle::complex_power(v, I);
        PL[b] = s.P;
        QL[b] = s.Q;
        dd[b] = x(l.omega + b) - cfg.omega0;
        dx(l.delta + b) = dd[b];
    }
    auto line = [&](int b) {
        const int o = 1 - b;
        return oracle::taylor_flow(x(l.delta + b), x(l.voltage + b), x(l.delta + o), x(l.voltage + o), dd[b],
                                   vdot[b], dd[o], vdot[o], cfg.line, cfg.omega0);
    };
    for (int it = 0; it < 500; ++it) {
        double next[2];
        for (int b = 0; b < 2; ++b) {
            const InverterParams& p = cfg.inverter[b];
            next[b] = (-x(l.voltage + b) + p.V_n - p.k_q * (QL[b] + line(b).Q)) / p.tau;
        }
        const double change = std::max(std::abs(next[0] - vdot[0]), std::abs(next[1] - vdot[1]));
        vdot[0] = next[0];
        vdot[1] = next[1];
        if (change <= 1e-14 * std::max(1.0, std::abs(vdot[0]) + std::abs(vdot[1]))) break;
    }
    for (int b = 0; b < 2; ++b) {
        const InverterParams& p = cfg.inverter[b];
        dx(l.voltage + b) = vdot[b];
        dx(l.omega + b) = (-x(l.omega + b) + p.omega_n - p.k_p * (PL[b] + line(b).P)) / p.tau;
    }
    return dx;
}

double rel_inf(const Vector& a, const Vector& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

} // namespace

TEST_CASE("state dimensions") {
    CHECK(state_size(ModelKind::Detailed) == 28);
    CHECK(state_size(ModelKind::Em5) == 12);
    CHECK(state_size(ModelKind::Conv3) == 10);
    CHECK(state_size(ModelKind::Hf3) == 10);
    for (ModelKind k : kAllModels) {
        CHECK(state_labels(k).size() == static_cast<std::size_t>(state_size(k)));
        CHECK(parse_model(model_name(k)) == k);
        const MicrogridConfig cfg = MicrogridConfig::defaults();
        CHECK_THROWS_AS(model_rhs(k, Vector::Zero(state_size(k) + 1), cfg), ValidationError);
    }
    CHECK_THROWS_AS(parse_model("em7"), ValidationError);
}

TEST_CASE("hf3 without subsynchronous terms is conv3") {
    oracle::Random rng(20);
    for (RxPreset p : {RxPreset::GreaterThanOne, RxPreset::AboutOne, RxPreset::LessThanOne}) {
        MicrogridConfig cfg = scenario(p);
        for (int n = 0; n < 300; ++n) {
            const Vector x = rng.state(ModelKind::Conv3);
            CHECK(rel_inf(hf3_rhs(x, cfg, SubsyncTerms::none()), conv3_rhs(x, cfg)) < 1e-12);
        }
    }
}

TEST_CASE("hf3 mass-matrix solve agrees with fixed-point iteration") {
    oracle::Random rng(21);
    for (RxPreset p : {RxPreset::GreaterThanOne, RxPreset::AboutOne, RxPreset::LessThanOne}) {
        for (double kq : {1.5e-4, 1e-3}) {
            MicrogridConfig cfg = scenario(p, 6e-5, kq);
            cfg.omega0 = rng.uniform(310.0, 316.0);
            for (int n = 0; n < 200; ++n) {
                const Vector x = rng.state(ModelKind::Hf3);
                CHECK(rel_inf(hf3_rhs(x, cfg), hf3_fixed_point(x, cfg)) < 1e-10);
            }
        }
    }
}

TEST_CASE("hf3 reports a singular mass matrix") {
    MicrogridConfig cfg = scenario(RxPreset::LessThanOne);
    Vector x = cold_start(ModelKind::Hf3, cfg);
    x(1) = 0.05;
    x(5) = 300.0;
    // voltage rows of the mass matrix are tau I + k_q C; pick k_q at a root of its determinant
    const StateLayout& l = layout(ModelKind::Hf3);
    const BusPhasor bi{x(l.delta), x(l.voltage)}, bk{x(l.delta + 1), x(l.voltage + 1)};
    const SubsyncTerms t = SubsyncTerms::of(cfg.line, cfg.omega0);
    const TaylorLinePower ti = taylor_line_terms(bi, bk, cfg.line, cfg.omega0, t);
    const TaylorLinePower tk = taylor_line_terms(bk, bi, cfg.line, cfg.omega0, t);
    const double tau = cfg.inverter[0].tau;
    // det = (tau + k a)(tau + k d) - k^2 b c
    const double a = ti.dQ[2], b = ti.dQ[3], c = tk.dQ[3], d = tk.dQ[2];
    const double qa = a * d - b * c, qb = tau * (a + d), qc = tau * tau;
    const double disc = std::sqrt(qb * qb - 4 * qa * qc);
    double k = (-qb - disc) / (2 * qa);
    if (!(k > 0)) k = (-qb + disc) / (2 * qa);
    REQUIRE(k > 0);
    for (auto& inv : cfg.inverter) inv.k_q = k;
    CHECK_THROWS_AS(hf3_rhs(x, cfg), SingularMassMatrix);
    try {
        hf3_rhs(x, cfg);
    } catch (const SingularMassMatrix& e) {
        CHECK(e.condition() > 1e12);
    }
}

TEST_CASE("em5 line current is at rest without a voltage difference") {
    const MicrogridConfig cfg = MicrogridConfig::defaults();
    Vector x = Vector::Zero(12);
    x << 0.1, 0.1, 314.0, 314.0, 305.0, 305.0, 0, 0, 0, 0, 0, 0;
    const Vector dx = em5_rhs(x, cfg);
    const StateLayout& l = layout(ModelKind::Em5);
    CHECK(dx(l.line_current) == 0.0);
    CHECK(dx(l.line_current + 1) == 0.0);
}

TEST_CASE("reduced models share load dynamics") {
    oracle::Random rng(22);
    const MicrogridConfig cfg = MicrogridConfig::defaults();
    const StateLayout& l5 = layout(ModelKind::Em5);
    const StateLayout& l3 = layout(ModelKind::Conv3);
    for (int n = 0; n < 100; ++n) {
        const Vector x5 = rng.state(ModelKind::Em5);
        Vector x3(10);
        x3.head<6>() = x5.head<6>();
        x3.segment<4>(l3.load_current) = x5.segment<4>(l5.load_current);
        const Vector d5 = em5_rhs(x5, cfg);
        const Vector d3 = conv3_rhs(x3, cfg);
        const Vector dh = hf3_rhs(x3, cfg);
        CHECK((d5.segment<4>(l5.load_current) - d3.segment<4>(l3.load_current)).norm() == 0.0);
        CHECK((dh.segment<4>(l3.load_current) - d3.segment<4>(l3.load_current)).norm() == 0.0);
    }
}

TEST_CASE("em5 on the static line manifold injects conv3 powers") {
    oracle::Random rng(23);
    const MicrogridConfig cfg = MicrogridConfig::defaults();
    const StateLayout& l5 = layout(ModelKind::Em5);
    for (int n = 0; n < 100; ++n) {
        const Vector x3 = rng.state(ModelKind::Conv3);
        const StaticLineFlow f = static_line_flow({x3(0), x3(4)}, {x3(1), x3(5)}, cfg.line, cfg.omega0);
        Vector x5(12);
        x5.head<6>() = x3.head<6>();
        x5(l5.line_current) = f.current.real();
        x5(l5.line_current + 1) = f.current.imag();
        x5.tail<4>() = x3.tail<4>();
        const Vector d5 = em5_rhs(x5, cfg);
        CHECK(std::abs(d5(l5.line_current)) < 1e-9);
        CHECK(std::abs(d5(l5.line_current + 1)) < 1e-9);
        const PowerBalance p5 = power_balance(ModelKind::Em5, x5, cfg);
        const PowerBalance p3 = power_balance(ModelKind::Conv3, x3, cfg);
        for (int b = 0; b < 2; ++b) {
            CHECK(std::abs(p5.injected[b].P - p3.injected[b].P) < 1e-9 * std::abs(p3.injected[b].P));
            CHECK(std::abs(p5.injected[b].Q - p3.injected[b].Q) < 1e-9 * std::max(1.0, std::abs(p3.injected[b].Q)));
        }
    }
}

TEST_CASE("right-hand sides are deterministic") {
    oracle::Random rng(24);
    const MicrogridConfig cfg = scenario(RxPreset::GreaterThanOne);
    for (ModelKind k : kAllModels) {
        const Vector x = rng.state(k);
        const Vector a = model_rhs(k, x, cfg);
        const Vector b = model_rhs(k, x, cfg);
        CHECK(a == b);
    }
}

TEST_CASE("detailed model is at rest at its equilibrium") {
    for (RxPreset p : {RxPreset::GreaterThanOne, RxPreset::AboutOne, RxPreset::LessThanOne}) {
        const Equilibrium eq = find_equilibrium(ModelKind::Detailed, scenario(p));
        CHECK(detailed_rhs(eq.x_star, eq.config).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("configuration validation names the field") {
    MicrogridConfig cfg = MicrogridConfig::defaults();
    cfg.inverter[1].L_f = 0.0;
    try {
        cfg.validate();
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("inverter_k.L_f") != std::string::npos);
    }
    cfg = MicrogridConfig::defaults().with_gains(0.0, 0.0);
    CHECK_NOTHROW(cfg.validate());
    CHECK_THROWS_AS(MicrogridConfig::defaults().with_gains(-1e-5, 1e-4).validate(), ValidationError);
}
