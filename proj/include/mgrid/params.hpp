#pragma once

#include <array>
#include <string>

#include "mgrid/types.hpp"

namespace mgrid {

/// Inverter i is index 0, inverter k is index 1.
enum Bus : int { kBusI = 0, kBusK = 1 };

struct InverterParams {
    double R_f = 0.1;        // ohm
    double L_f = 5e-3;       // H
    double C_f = 50e-6;      // F
    double k_p = 6e-5;       // (rad/s)/W
    double k_q = 1.5e-4;     // V/var
    double tau = 31.8e-3;    // s
    double omega_n = 0.0;    // rad/s, set by defaults()
    double V_n = 311.0;      // V, dq-frame magnitude
    double K_PV = 5.0;
    double K_IV = 10.0;
    double K_PC = 5.0;
    double K_IC = 25.0;

    static InverterParams defaults();
};

/// Series RL line between the two buses.
struct LineParams {
    double R = 0.195;   // ohm
    double L = 0.61e-3; // H

    double reactance(double omega0) const { return omega0 * L; }
    double rx_ratio(double omega0) const { return R / reactance(omega0); }
    double conductance(double omega0) const;
    double susceptance(double omega0) const;
    /// Subsynchronous conductance G'; negative when X > R.
    double sub_conductance(double omega0) const;
    double sub_susceptance(double omega0) const;
};

struct LoadParams {
    double R = 20.0;
    double L = 15e-3;
};

/// Parameters of the two-inverter microgrid. omega0 is the synchronous frame
/// frequency; the equilibrium solver overwrites it with the solved value.
struct MicrogridConfig {
    std::array<InverterParams, 2> inverter{InverterParams::defaults(), InverterParams::defaults()};
    LineParams line;
    std::array<LoadParams, 2> load{LoadParams{20.0, 15e-3}, LoadParams{40.0, 40e-3}};
    double omega0 = 0.0;

    /// Table I defaults with the R/X ~ 1 line; omega0 = omega_n.
    static MicrogridConfig defaults();

    /// Throws ValidationError naming the offending field. Droop gains may be
    /// zero (the decoupled limit); everything else must be strictly positive.
    void validate() const;

    /// Equal droop gains on both inverters.
    MicrogridConfig with_gains(double k_p, double k_q) const;
};

enum class RxPreset { GreaterThanOne, AboutOne, LessThanOne };

std::string preset_name(RxPreset preset);
RxPreset parse_preset(const std::string& name);

/// Line parameters of a preset.
LineParams preset_line(RxPreset preset);

/// Table I configuration for a preset with equal gains on both inverters.
MicrogridConfig scenario(RxPreset preset, double k_p = 6e-5, double k_q = 1.5e-4);

} // namespace mgrid
