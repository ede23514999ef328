#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "mgrid/frames.hpp"
#include "oracles.hpp"

using namespace mgrid;
using Catch::Matchers::WithinAbs;

namespace {

double max_abs_diff(const AbcSignal& x, const AbcSignal& y) {
    return std::max({std::abs(x.a - y.a), std::abs(x.b - y.b), std::abs(x.c - y.c)});
}

} // namespace

TEST_CASE("park of zero input is zero") {
    const ParkResult r = park(Angle(0.0), AbcSignal{});
    CHECK(r.dq.d == 0.0);
    CHECK(r.dq.q == 0.0);
    CHECK(r.zero == 0.0);
    const AbcSignal back = inverse_park(Angle(0.0), DqVector{}, 0.0);
    CHECK(max_abs_diff(back, AbcSignal{}) == 0.0);
}

TEST_CASE("symmetric signal maps to a constant d component") {
    const double amp = 311.0;
    for (double theta : {0.3, 1.7, 5.0}) {
        const ParkResult r = park(Angle(theta), symmetric_signal(amp, theta));
        CHECK_THAT(r.dq.d, WithinAbs(std::sqrt(1.5) * amp, 1e-10));
        CHECK_THAT(r.dq.q, WithinAbs(0.0, 1e-10));
        CHECK_THAT(r.zero, WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("symmetric signals have no zero-sequence part") {
    oracle::Random rng(1);
    for (int n = 0; n < 1000; ++n) {
        const AbcSignal x = symmetric_signal(rng.uniform(0.0, 500.0), rng.angle());
        CHECK_THAT(x.zero_sum(), WithinAbs(0.0, 1e-10));
        CHECK_THAT(park(Angle(rng.angle()), x).zero, WithinAbs(0.0, 1e-12 * 500.0));
    }
}

TEST_CASE("inverse park undoes park") {
    const AbcSignal x{1.0, 2.0, 3.0};
    const ParkResult r = park(Angle(0.7), x);
    CHECK(max_abs_diff(inverse_park(Angle(0.7), r.dq, r.zero), x) < 1e-12);

    oracle::Random rng(2);
    for (int n = 0; n < 1000; ++n) {
        const AbcSignal y{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
        const Angle th(rng.angle());
        const ParkResult p = park(th, y);
        CHECK(max_abs_diff(inverse_park(th, p.dq, p.zero), y) < 1e-12);
    }
}

TEST_CASE("park preserves instantaneous power") {
    oracle::Random rng(3);
    for (int n = 0; n < 1000; ++n) {
        const AbcSignal v{rng.uniform(-400, 400), rng.uniform(-400, 400), rng.uniform(-400, 400)};
        const AbcSignal i{rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(-30, 30)};
        const Angle th(rng.angle());
        const ParkResult pv = park(th, v);
        const ParkResult pi = park(th, i);
        const double abc = v.a * i.a + v.b * i.b + v.c * i.c;
        const double dq0 = pv.dq.dot(pi.dq) + pv.zero * pi.zero;
        CHECK_THAT(dq0, WithinAbs(abc, 1e-10 * std::max(1.0, std::abs(abc))));
    }
}

TEST_CASE("rotation algebra") {
    CHECK(rotation(0.0).isApprox(Mat2::Identity()));
    const Mat2 J = j_matrix();
    oracle::Random rng(4);
    for (int n = 0; n < 1000; ++n) {
        const double a = rng.angle();
        const double b = rng.angle();
        const Mat2 T = rotation(a);
        CHECK((T.inverse() - T.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK_THAT(T.determinant(), WithinAbs(1.0, 1e-12));
        CHECK((J * T - T * J).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((rotation(a) * rotation(b) - rotation(a + b)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((rotation(Angle(a)) - T).cwiseAbs().maxCoeff() < 1e-12);

        const double h = 1e-5;
        const Mat2 fd = (rotation(a + h) - rotation(a - h)) / (2.0 * h);
        CHECK((fd - rotation_derivative(a)).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((rotation_derivative(a) + J * T).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("local and synchronous frames are related by the rotation") {
    oracle::Random rng(5);
    for (int n = 0; n < 200; ++n) {
        const double delta = rng.angle();
        const DqVector local{rng.uniform(-10, 10), rng.uniform(-10, 10), Frame::Local};
        const DqVector sync = to_synchronous(delta, local);
        CHECK(sync.frame == Frame::Synchronous);
        CHECK((sync.vec() - rotation(delta) * local.vec()).norm() < 1e-12);
        const DqVector back = to_local(delta, sync);
        CHECK(back.frame == Frame::Local);
        CHECK((back.vec() - local.vec()).norm() < 1e-12);
    }
    CHECK_THROWS_AS(to_local(0.1, DqVector{1, 2, Frame::Local}), ValidationError);
    CHECK_THROWS_AS(to_synchronous(0.1, DqVector{1, 2, Frame::Synchronous}), ValidationError);
}

TEST_CASE("dq vectors refuse mixed-frame arithmetic") {
    const DqVector a{1.0, 2.0, Frame::Local};
    const DqVector b{3.0, 4.0, Frame::Synchronous};
    CHECK_THROWS_AS(a + b, ValidationError);
    CHECK_THROWS_AS(a - b, ValidationError);
    CHECK_THROWS_AS(a.dot(b), ValidationError);
    const DqVector c{3.0, 4.0, Frame::Local};
    CHECK((a + c).d == 4.0);
    CHECK((c - a).q == 2.0);
    CHECK(a.dot(c) == 11.0);
}

TEST_CASE("angles wrap into [0, 2pi) idempotently") {
    oracle::Random rng(6);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int n = 0; n < 1000; ++n) {
        const double raw = rng.uniform(-100.0, 100.0);
        const Angle a(raw);
        CHECK(a.value() >= 0.0);
        CHECK(a.value() < two_pi);
        CHECK(Angle(a.value()).value() == a.value());
        CHECK_THAT(std::remainder(a.value() - raw, two_pi), WithinAbs(0.0, 1e-12));
    }
    CHECK(Angle(-1e-300).value() < two_pi);
    CHECK_THROWS_AS(Angle(std::nan("")), ValidationError);
    CHECK_THROWS_AS(Angle(INFINITY), ValidationError);
}
