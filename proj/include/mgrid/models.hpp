#pragma once

#include <array>

#include "mgrid/params.hpp"
#include "mgrid/power.hpp"
#include "mgrid/state.hpp"
#include "mgrid/types.hpp"

namespace mgrid {

/// The high-fidelity mass matrix could not be inverted.
class SingularMassMatrix : public NumericalError {
public:
    SingularMassMatrix(const std::string& what, double condition)
        : NumericalError(what), condition_(condition) {}

    double condition() const { return condition_; }

private:
    double condition_;
};

/// Right-hand sides dx/dt = f(x). Every function checks the state length and
/// uses cfg.omega0 as the synchronous frame frequency.
Vector detailed_rhs(const Vector& x, const MicrogridConfig& cfg);
Vector em5_rhs(const Vector& x, const MicrogridConfig& cfg);
Vector conv3_rhs(const Vector& x, const MicrogridConfig& cfg);

/// High-fidelity 3rd-order model in explicit form. The line power depends on
/// (delta_dot, V_dot), so the voltage rows are solved as a 2x2 linear system
/// before the frequency rows are evaluated.
Vector hf3_rhs(const Vector& x, const MicrogridConfig& cfg);
Vector hf3_rhs(const Vector& x, const MicrogridConfig& cfg, SubsyncTerms terms);

Vector model_rhs(ModelKind kind, const Vector& x, const MicrogridConfig& cfg);

/// Power bookkeeping at one state. `injected[b] = load[b] + line[b]`, where
/// line[b] is the power sent into the line from bus b.
struct PowerBalance {
    std::array<PowerPair, 2> injected;
    std::array<PowerPair, 2> load;
    std::array<PowerPair, 2> line;
};

PowerBalance power_balance(ModelKind kind, const Vector& x, const MicrogridConfig& cfg);

/// Output current i_odq of inverter b in its local frame (detailed model).
Vec2 output_current(const Vector& x, const MicrogridConfig& cfg, int bus);

} // namespace mgrid
