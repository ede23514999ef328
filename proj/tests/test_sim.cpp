#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "mgrid/equilibrium.hpp"
#include "mgrid/sim.hpp"
#include "mgrid/stability.hpp"

using namespace mgrid;
using Catch::Matchers::WithinAbs;

TEST_CASE("dopri5 integrates a damped oscillator") {
    // x'' + 2 z w x' + w^2 x = 0
    const double w = 7.0, z = 0.1;
    const RhsFunction f = [&](double, const Vector& x) {
        Vector d(2);
        d << x(1), -w * w * x(0) - 2 * z * w * x(1);
        return d;
    };
    Vector x0(2);
    x0 << 1.0, 0.0;
    SimOptions opts;
    opts.t_end = 3.0;
    opts.rel_tol = 1e-9;
    opts.abs_tol = 1e-12;
    const OdeResult r = integrate_dopri5(f, 0.0, x0, opts);
    REQUIRE(r.status == SimStatus::Completed);
    const double wd = w * std::sqrt(1 - z * z);
    for (std::size_t j = 0; j < r.times.size(); j += 97) {
        const double t = r.times[j];
        const double exact = std::exp(-z * w * t) * (std::cos(wd * t) + z * w / wd * std::sin(wd * t));
        CHECK_THAT(r.states[j](0), WithinAbs(exact, 1e-7));
    }
    CHECK(r.times.back() == 3.0);
    for (std::size_t j = 1; j < r.times.size(); ++j) CHECK(r.times[j] > r.times[j - 1]);
}

TEST_CASE("dense output is sampled at the requested interval") {
    const RhsFunction f = [](double, const Vector& x) { return Vector(-x); };
    SimOptions opts;
    opts.t_end = 0.5;
    opts.max_step = 0.1;
    opts.sample_interval = 1e-3;
    const OdeResult r = integrate_dopri5(f, 0.0, Vector::Ones(1), opts);
    CHECK(r.times.size() == 501);
    CHECK_THAT(r.states[250](0), WithinAbs(std::exp(-0.25), 1e-7));
}

TEST_CASE("finite-time blow-up is reported, not thrown") {
    const RhsFunction f = [](double, const Vector& x) { return Vector(x.array().square()); };
    SimOptions opts;
    opts.t_end = 2.0;
    const OdeResult r = integrate_dopri5(f, 0.0, Vector::Ones(1), opts);
    CHECK(r.status != SimStatus::Completed);
    CHECK(r.times.back() < 1.0 + 1e-6);
}

TEST_CASE("options are validated") {
    SimOptions o;
    o.rel_tol = 0.1;
    CHECK_THROWS_AS(o.validate(), ValidationError);
    o = SimOptions{};
    o.t_end = 0.0;
    CHECK_THROWS_AS(o.validate(), ValidationError);
    o = SimOptions{};
    o.abs_tol = 0.0;
    CHECK_THROWS_AS(o.validate(), ValidationError);
    const MicrogridConfig cfg = MicrogridConfig::defaults();
    CHECK_THROWS_AS(simulate(ModelKind::Em5, cfg, Vector::Zero(10), SimOptions{}), ValidationError);
}

TEST_CASE("a trajectory started at equilibrium stays there") {
    for (ModelKind k : kAllModels) {
        const Equilibrium eq = find_equilibrium(k, scenario(RxPreset::AboutOne));
        SimOptions opts;
        opts.t_end = 1.0;
        const Trajectory tr = simulate(k, eq.config, eq.x_star, opts);
        REQUIRE(tr.status == SimStatus::Completed);
        REQUIRE(tr.states.cols() == state_size(k));
        const double drift = (tr.states.rowwise() - eq.x_star.transpose()).cwiseAbs().maxCoeff();
        CHECK(drift < 1e-6 * std::max(1.0, eq.x_star.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("cold start settles on the equilibrium frequency") {
    for (ModelKind k : {ModelKind::Em5, ModelKind::Conv3, ModelKind::Hf3}) {
        MicrogridConfig cfg = scenario(RxPreset::AboutOne);
        const Equilibrium eq = find_equilibrium(k, cfg);
        SimOptions opts;
        opts.t_end = 6.0;
        opts.rel_tol = 1e-9;
        opts.abs_tol = 1e-9;
        opts.sample_interval = 1e-2;
        const Trajectory tr = simulate(k, cfg, cold_start(k, cfg), opts);
        REQUIRE(tr.status == SimStatus::Completed);
        const Vector xf = tr.final_state();
        INFO(model_name(k));
        CHECK_THAT(xf(2) - xf(3), WithinAbs(0.0, 1e-6));
        CHECK_THAT(xf(2), WithinAbs(eq.omega0, 1e-5));

        const auto ch = derived_channels(tr, cfg);
        REQUIRE(ch.size() == tr.times.size());
        CHECK_THAT(ch.back().f_i, WithinAbs(xf(2) / (2 * std::numbers::pi), 1e-12));
        CHECK_THAT(ch.back().V_k, WithinAbs(xf(5), 1e-12));
    }
}

TEST_CASE("halving tolerances barely moves the settled state") {
    const MicrogridConfig cfg = scenario(RxPreset::GreaterThanOne);
    SimOptions a;
    a.t_end = 2.0;
    SimOptions b = a;
    b.rel_tol /= 2;
    b.abs_tol /= 2;
    const Vector x0 = cold_start(ModelKind::Hf3, cfg);
    const Vector fa = simulate(ModelKind::Hf3, cfg, x0, a).final_state();
    const Vector fb = simulate(ModelKind::Hf3, cfg, x0, b).final_state();
    // angles drift with the frame, so compare the rotation-free states only
    const Vector da = fa.tail(8), db = fb.tail(8);
    CHECK((da - db).cwiseAbs().maxCoeff() < 10 * a.rel_tol * db.cwiseAbs().maxCoeff());
    CHECK(std::abs((fa(1) - fa(0)) - (fb(1) - fb(0))) < 10 * a.rel_tol);
}

TEST_CASE("exponential growth is labeled diverged") {
    const RhsFunction f = [](double, const Vector& x) { return Vector(3.0 * x); };
    SimOptions opts;
    opts.t_end = 10.0;
    const OdeResult r = integrate_dopri5(f, 0.0, Vector::Ones(2), opts);
    CHECK(r.status == SimStatus::Diverged);
    CHECK(status_name(r.status) == "diverged");
    CHECK(r.states.back().cwiseAbs().maxCoeff() > 1e6);
    CHECK(r.times.back() < 10.0);
}

TEST_CASE("perturbations grow at unstable gains and decay at stable ones") {
    for (double kp : {6e-5, 5.3e-4}) {
        const Equilibrium eq = find_equilibrium(ModelKind::Em5, scenario(RxPreset::AboutOne, kp, 1.5e-4));
        Vector x0 = eq.x_star;
        x0(5) *= 1.001;
        SimOptions opts;
        opts.t_end = 5.0;
        const Trajectory tr = simulate(ModelKind::Em5, eq.config, x0, opts);
        REQUIRE(tr.status == SimStatus::Completed);
        const double start = (x0 - eq.x_star).tail(10).cwiseAbs().maxCoeff();
        const double end = (tr.final_state() - eq.x_star).tail(10).cwiseAbs().maxCoeff();
        INFO("k_p = " << kp);
        CHECK((end < start) == is_stable(eigen(eq)));
    }
}
