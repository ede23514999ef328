#pragma once

#include "mgrid/types.hpp"

namespace mgrid {

/// Angle in radians, stored wrapped to [0, 2*pi).
class Angle {
public:
    Angle() = default;
    explicit Angle(double radians);

    double value() const { return value_; }

    static double wrap(double radians);

private:
    double value_ = 0.0;
};

/// Instantaneous three-phase quantity.
struct AbcSignal {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    double zero_sum() const { return a + b + c; }
};

/// Balanced signal (X sin(theta), X sin(theta - 2pi/3), X sin(theta + 2pi/3)).
AbcSignal symmetric_signal(double amplitude, double theta);

enum class Frame { Local, Synchronous };

/// Two-axis vector tagged with the frame it is expressed in. Arithmetic
/// between vectors of different frames throws ValidationError.
struct DqVector {
    double d = 0.0;
    double q = 0.0;
    Frame frame = Frame::Local;

    Vec2 vec() const { return {d, q}; }

    DqVector operator+(const DqVector& other) const;
    DqVector operator-(const DqVector& other) const;
    double dot(const DqVector& other) const;
};

struct ParkResult {
    DqVector dq;
    double zero = 0.0;
};

/// Power-invariant Park transform T(theta). The dq part is tagged Local.
ParkResult park(Angle theta, const AbcSignal& x);

AbcSignal inverse_park(Angle theta, const DqVector& x, double zero_component);

/// [[cos, -sin], [sin, cos]]: maps local dq quantities to the synchronous DQ frame.
Mat2 rotation(double delta);
inline Mat2 rotation(Angle delta) { return rotation(delta.value()); }

/// d rotation / d delta, equal to -J * rotation(delta).
Mat2 rotation_derivative(double delta);

/// Expresses a local-frame vector in the synchronous frame.
DqVector to_synchronous(double delta, const DqVector& local);
DqVector to_local(double delta, const DqVector& synchronous);

/// J = [[0, 1], [-1, 0]].
inline Mat2 j_matrix() {
    Mat2 j;
    j << 0.0, 1.0, -1.0, 0.0;
    return j;
}

/// e = [1, 0]^T.
inline Vec2 e_vector() { return {1.0, 0.0}; }

} // namespace mgrid
