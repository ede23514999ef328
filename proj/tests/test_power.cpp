#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "mgrid/frames.hpp"
#include "mgrid/models.hpp"
#include "mgrid/power.hpp"
#include "oracles.hpp"

using namespace mgrid;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double kW0 = 2.0 * std::numbers::pi * 50.0;

bool close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

} // namespace

TEST_CASE("line presets have the quoted R/X ratios") {
    CHECK_THAT(preset_line(RxPreset::GreaterThanOne).rx_ratio(kW0), WithinRel(7.85, 0.01));
    CHECK_THAT(preset_line(RxPreset::AboutOne).rx_ratio(kW0), WithinRel(1.02, 0.01));
    CHECK_THAT(preset_line(RxPreset::LessThanOne).rx_ratio(kW0), WithinRel(0.182, 0.01));
    CHECK_THAT(preset_line(RxPreset::AboutOne).reactance(kW0), WithinAbs(0.1916, 1e-4));

    const LineParams gg1 = preset_line(RxPreset::GreaterThanOne);
    CHECK(gg1.R == 0.641);
    CHECK(gg1.L == 0.26e-3);
    const LineParams ll1 = preset_line(RxPreset::LessThanOne);
    CHECK(ll1.R == 0.4);
    CHECK(ll1.L == 7e-3);
}

TEST_CASE("static flow vanishes without a voltage difference") {
    const LineParams line;
    const StaticLineFlow f = static_line_flow({0.2, 311.0}, {0.2, 311.0}, line, kW0);
    CHECK(std::abs(f.current) == 0.0);
    CHECK_THAT(f.ik.P, WithinAbs(0.0, 1e-9));
    CHECK_THAT(f.ik.Q, WithinAbs(0.0, 1e-9));
}

TEST_CASE("static flow matches the complex phasor oracle") {
    oracle::Random rng(10);
    for (int n = 0; n < 1000; ++n) {
        const LineParams line = rng.line();
        const double w0 = rng.uniform(300.0, 330.0);
        const BusPhasor bi{rng.uniform(-0.5, 0.5), rng.uniform(250.0, 350.0)};
        const BusPhasor bk{rng.uniform(-0.5, 0.5), rng.uniform(250.0, 350.0)};
        const StaticLineFlow f = static_line_flow(bi, bk, line, w0);

        const auto vi = oracle::phasor(bi.delta, bi.V);
        const auto vk = oracle::phasor(bk.delta, bk.V);
        const auto current = oracle::static_current(vi, vk, line, w0);
        const oracle::Flow sik = oracle::complex_power(vi, current);
        const oracle::Flow ski = oracle::complex_power(vk, -current);
        CHECK(std::abs(f.current - current) <= 1e-10 * std::abs(current));
        CHECK(close(f.ik.P, sik.P, 1e-10));
        CHECK(close(f.ik.Q, sik.Q, 1e-10));
        CHECK(close(f.ki.P, ski.P, 1e-10));
        CHECK(close(f.ki.Q, ski.Q, 1e-10));
    }
}

TEST_CASE("static flow partials match finite differences") {
    oracle::Random rng(11);
    for (int n = 0; n < 200; ++n) {
        const LineParams line = rng.line();
        const double G = line.conductance(kW0);
        const double B = line.susceptance(kW0);
        std::array<double, 4> p{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(250, 350),
                                rng.uniform(250, 350)};
        const FlowPartials fp = static_flow_partials({p[0], p[2]}, {p[1], p[3]}, G, B);
        for (int j = 0; j < 4; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(p[j]));
            auto q = p;
            q[j] = p[j] + h;
            const PowerPair up = static_flow_partials({q[0], q[2]}, {q[1], q[3]}, G, B).value;
            q[j] = p[j] - h;
            const PowerPair dn = static_flow_partials({q[0], q[2]}, {q[1], q[3]}, G, B).value;
            const double scale = std::max({1.0, std::abs(fp.dP[j]), std::abs(fp.dQ[j]), G * p[2] * p[3]});
            CHECK(std::abs((up.P - dn.P) / (2 * h) - fp.dP[j]) < 1e-6 * scale);
            CHECK(std::abs((up.Q - dn.Q) / (2 * h) - fp.dQ[j]) < 1e-6 * scale);
        }
    }
}

TEST_CASE("subsynchronous conductance vanishes when R equals X") {
    const double x = 0.1916;
    const LineParams line{x, x / kW0};
    CHECK(line.sub_conductance(kW0) == 0.0);
    CHECK(line.sub_susceptance(kW0) > 0.0);
    CHECK(preset_line(RxPreset::LessThanOne).sub_conductance(kW0) < 0.0);
}

TEST_CASE("taylor line power reduces to the static flow") {
    oracle::Random rng(12);
    for (int n = 0; n < 200; ++n) {
        const LineParams line = rng.line();
        const BusPhasor bi{rng.uniform(-0.5, 0.5), rng.uniform(250, 350)};
        const BusPhasor bk{rng.uniform(-0.5, 0.5), rng.uniform(250, 350)};
        const BusRates ri{rng.uniform(-5, 5), rng.uniform(-500, 500)};
        const BusRates rk{rng.uniform(-5, 5), rng.uniform(-500, 500)};
        const StaticLineFlow f = static_line_flow(bi, bk, line, kW0);

        const PowerPair still = taylor_line_power(bi, bk, {}, {}, line, kW0);
        CHECK(close(still.P, f.ik.P, 1e-12));
        CHECK(close(still.Q, f.ik.Q, 1e-12));

        const PowerPair none = taylor_line_terms(bi, bk, line, kW0, SubsyncTerms::none()).evaluate(ri, rk);
        CHECK(close(none.P, f.ik.P, 1e-12));
        CHECK(close(none.Q, f.ik.Q, 1e-12));
    }
}

TEST_CASE("taylor line power matches the first-order phasor expansion") {
    oracle::Random rng(13);
    for (int n = 0; n < 1000; ++n) {
        const LineParams line = rng.line();
        const double w0 = rng.uniform(300.0, 330.0);
        const BusPhasor bi{rng.uniform(-0.5, 0.5), rng.uniform(250, 350)};
        const BusPhasor bk{rng.uniform(-0.5, 0.5), rng.uniform(250, 350)};
        const BusRates ri{rng.uniform(-5, 5), rng.uniform(-500, 500)};
        const BusRates rk{rng.uniform(-5, 5), rng.uniform(-500, 500)};

        const PowerPair got = taylor_line_power(bi, bk, ri, rk, line, w0);
        const oracle::Flow want = oracle::taylor_flow(bi.delta, bi.V, bk.delta, bk.V, ri.delta_dot, ri.V_dot,
                                                      rk.delta_dot, rk.V_dot, line, w0);
        CHECK(close(got.P, want.P, 1e-10));
        CHECK(close(got.Q, want.Q, 1e-10));

        const PowerPair back = taylor_line_power(bk, bi, rk, ri, line, w0);
        const oracle::Flow want_back = oracle::taylor_flow(bk.delta, bk.V, bi.delta, bi.V, rk.delta_dot, rk.V_dot,
                                                           ri.delta_dot, ri.V_dot, line, w0);
        CHECK(close(back.P, want_back.P, 1e-10));
        CHECK(close(back.Q, want_back.Q, 1e-10));
    }
}

TEST_CASE("load power") {
    const PowerPair none = load_power(0.3, 311.0, Vec2::Zero());
    CHECK(none.P == 0.0);
    CHECK(none.Q == 0.0);

    // current aligned with the bus voltage carries no reactive power
    const double delta = 0.4;
    const Vec2 aligned = rotation(delta) * e_vector() * 12.0;
    CHECK_THAT(load_power(delta, 311.0, aligned).Q, WithinAbs(0.0, 1e-10));
    CHECK_THAT(load_power(delta, 311.0, aligned).P, WithinRel(311.0 * 12.0, 1e-12));

    // steady RL load: Q/P = X/R
    const LoadParams load{20.0, 15e-3};
    const auto v = oracle::phasor(delta, 311.0);
    const auto i = v / oracle::cplx(load.R, kW0 * load.L);
    const PowerPair pq = load_power(delta, 311.0, Vec2(i.real(), i.imag()));
    CHECK_THAT(pq.Q / pq.P, WithinRel(kW0 * load.L / load.R, 1e-12));

    // vector and scalar overloads agree for v = e V
    const Vec2 cur(3.0, -7.0);
    const PowerPair a = load_power(delta, Vec2(311.0, 0.0), cur);
    const PowerPair b = load_power(delta, 311.0, cur);
    CHECK(a.P == b.P);
    CHECK(a.Q == b.Q);
}

TEST_CASE("port power matches the complex form") {
    oracle::Random rng(14);
    for (int n = 0; n < 500; ++n) {
        const double delta = rng.uniform(-1, 1);
        const Vec2 v(rng.uniform(250, 350), rng.uniform(-20, 20));
        const Vec2 I(rng.uniform(-30, 30), rng.uniform(-30, 30));
        const PowerPair pq = port_power(delta, v, I);
        const oracle::Flow want =
            oracle::complex_power(oracle::to_complex(rotation(delta) * v), oracle::to_complex(I));
        CHECK(close(pq.P, want.P, 1e-12));
        CHECK(close(pq.Q, want.Q, 1e-12));
    }
}

TEST_CASE("detailed model: both forms of the injected power agree") {
    oracle::Random rng(15);
    const MicrogridConfig cfg = MicrogridConfig::defaults();
    const StateLayout& l = layout(ModelKind::Detailed);
    for (int n = 0; n < 200; ++n) {
        const Vector x = rng.state(ModelKind::Detailed);
        const PowerBalance pb = power_balance(ModelKind::Detailed, x, cfg);
        for (int b = 0; b < 2; ++b) {
            const Vec2 vo = x.segment<2>(l.output_voltage + 2 * b);
            const Vec2 io = output_current(x, cfg, b);
            const double local = io.dot(vo);
            CHECK(close(pb.injected[b].P, local, 1e-10));
            CHECK(close(pb.injected[b].P, pb.load[b].P + pb.line[b].P, 1e-10));
            CHECK(close(pb.injected[b].Q, pb.load[b].Q + pb.line[b].Q, 1e-10));
        }
    }
}
