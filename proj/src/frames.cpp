#include "mgrid/frames.hpp"

#include <cmath>
#include <numbers>

namespace mgrid {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPhaseShift = kTwoPi / 3.0;

void require_same_frame(const DqVector& x, const DqVector& y) {
    if (x.frame != y.frame) {
        throw ValidationError("dq vectors expressed in different reference frames");
    }
}

} // namespace

Angle::Angle(double radians) : value_(wrap(radians)) {
    if (!std::isfinite(radians)) {
        throw ValidationError("angle must be finite");
    }
}

double Angle::wrap(double radians) {
    double w = std::fmod(radians, kTwoPi);
    if (w < 0.0) {
        w += kTwoPi;
    }
    // fmod of a tiny negative number can round up to exactly 2*pi
    if (w >= kTwoPi) {
        w = 0.0;
    }
    return w;
}

AbcSignal symmetric_signal(double amplitude, double theta) {
    return {amplitude * std::sin(theta), amplitude * std::sin(theta - kPhaseShift),
            amplitude * std::sin(theta + kPhaseShift)};
}

DqVector DqVector::operator+(const DqVector& other) const {
    require_same_frame(*this, other);
    return {d + other.d, q + other.q, frame};
}

DqVector DqVector::operator-(const DqVector& other) const {
    require_same_frame(*this, other);
    return {d - other.d, q - other.q, frame};
}

double DqVector::dot(const DqVector& other) const {
    require_same_frame(*this, other);
    return d * other.d + q * other.q;
}

ParkResult park(Angle theta, const AbcSignal& x) {
    const double t = theta.value();
    const double k = std::sqrt(2.0 / 3.0);
    const double d = k * (std::sin(t) * x.a + std::sin(t - kPhaseShift) * x.b +
                          std::sin(t + kPhaseShift) * x.c);
    const double q = k * (std::cos(t) * x.a + std::cos(t - kPhaseShift) * x.b +
                          std::cos(t + kPhaseShift) * x.c);
    const double zero = k * (x.a + x.b + x.c) / std::sqrt(2.0);
    return {{d, q, Frame::Local}, zero};
}

AbcSignal inverse_park(Angle theta, const DqVector& x, double zero_component) {
    // T is orthogonal, so the inverse is the transpose.
    const double t = theta.value();
    const double k = std::sqrt(2.0 / 3.0);
    const double z = zero_component / std::sqrt(2.0);
    return {k * (std::sin(t) * x.d + std::cos(t) * x.q + z),
            k * (std::sin(t - kPhaseShift) * x.d + std::cos(t - kPhaseShift) * x.q + z),
            k * (std::sin(t + kPhaseShift) * x.d + std::cos(t + kPhaseShift) * x.q + z)};
}

Mat2 rotation(double delta) {
    const double c = std::cos(delta);
    const double s = std::sin(delta);
    Mat2 t;
    t << c, -s, s, c;
    return t;
}

Mat2 rotation_derivative(double delta) {
    const double c = std::cos(delta);
    const double s = std::sin(delta);
    Mat2 t;
    t << -s, -c, c, -s;
    return t;
}

DqVector to_synchronous(double delta, const DqVector& local) {
    if (local.frame != Frame::Local) {
        throw ValidationError("to_synchronous expects a local-frame vector");
    }
    const Vec2 v = rotation(delta) * local.vec();
    return {v(0), v(1), Frame::Synchronous};
}

DqVector to_local(double delta, const DqVector& synchronous) {
    if (synchronous.frame != Frame::Synchronous) {
        throw ValidationError("to_local expects a synchronous-frame vector");
    }
    const Vec2 v = rotation(delta).transpose() * synchronous.vec();
    return {v(0), v(1), Frame::Local};
}

} // namespace mgrid
