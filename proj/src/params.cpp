#include "mgrid/params.hpp"

#include <cmath>
#include <numbers>

namespace mgrid {

namespace {

void require_positive(double value, const std::string& name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw ValidationError("parameter " + name + " must be positive and finite");
    }
}

void require_non_negative(double value, const std::string& name) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw ValidationError("parameter " + name + " must be non-negative and finite");
    }
}

double squared_impedance(const LineParams& line, double omega0) {
    const double x = line.reactance(omega0);
    return line.R * line.R + x * x;
}

} // namespace

InverterParams InverterParams::defaults() {
    InverterParams p;
    p.omega_n = 2.0 * std::numbers::pi * 50.0;
    return p;
}

double LineParams::conductance(double omega0) const {
    return R / squared_impedance(*this, omega0);
}

double LineParams::susceptance(double omega0) const {
    return reactance(omega0) / squared_impedance(*this, omega0);
}

double LineParams::sub_conductance(double omega0) const {
    const double x = reactance(omega0);
    const double z2 = squared_impedance(*this, omega0);
    return (R * R - x * x) * L / (z2 * z2);
}

double LineParams::sub_susceptance(double omega0) const {
    const double x = reactance(omega0);
    const double z2 = squared_impedance(*this, omega0);
    return 2.0 * R * x * L / (z2 * z2);
}

MicrogridConfig MicrogridConfig::defaults() {
    MicrogridConfig cfg;
    cfg.omega0 = cfg.inverter[kBusI].omega_n;
    return cfg;
}

void MicrogridConfig::validate() const {
    const char* names[2] = {"inverter_i.", "inverter_k."};
    for (int b = 0; b < 2; ++b) {
        const InverterParams& p = inverter[b];
        const std::string n = names[b];
        require_positive(p.R_f, n + "R_f");
        require_positive(p.L_f, n + "L_f");
        require_positive(p.C_f, n + "C_f");
        require_non_negative(p.k_p, n + "k_p");
        require_non_negative(p.k_q, n + "k_q");
        require_positive(p.tau, n + "tau");
        require_positive(p.omega_n, n + "omega_n");
        require_positive(p.V_n, n + "V_n");
        require_positive(p.K_PV, n + "K_PV");
        require_positive(p.K_IV, n + "K_IV");
        require_positive(p.K_PC, n + "K_PC");
        require_positive(p.K_IC, n + "K_IC");
        require_positive(load[b].R, b == 0 ? "load_i.R_l" : "load_k.R_l");
        require_positive(load[b].L, b == 0 ? "load_i.L_l" : "load_k.L_l");
    }
    require_positive(line.R, "line.R_ik");
    require_positive(line.L, "line.L_ik");
    require_positive(omega0, "omega0");
}

MicrogridConfig MicrogridConfig::with_gains(double k_p, double k_q) const {
    MicrogridConfig cfg = *this;
    for (auto& inv : cfg.inverter) {
        inv.k_p = k_p;
        inv.k_q = k_q;
    }
    return cfg;
}

std::string preset_name(RxPreset preset) {
    switch (preset) {
    case RxPreset::GreaterThanOne:
        return "rx-gg1";
    case RxPreset::AboutOne:
        return "rx-eq1";
    case RxPreset::LessThanOne:
        return "rx-ll1";
    }
    return "unknown";
}

RxPreset parse_preset(const std::string& name) {
    if (name == "rx-gg1") {
        return RxPreset::GreaterThanOne;
    }
    if (name == "rx-eq1") {
        return RxPreset::AboutOne;
    }
    if (name == "rx-ll1") {
        return RxPreset::LessThanOne;
    }
    throw ValidationError("unknown preset '" + name + "' (expected rx-gg1, rx-eq1 or rx-ll1)");
}

LineParams preset_line(RxPreset preset) {
    switch (preset) {
    case RxPreset::GreaterThanOne:
        return {0.641, 0.26e-3};
    case RxPreset::AboutOne:
        return {0.195, 0.61e-3};
    case RxPreset::LessThanOne:
        return {0.4, 7e-3};
    }
    return {};
}

MicrogridConfig scenario(RxPreset preset, double k_p, double k_q) {
    MicrogridConfig cfg = MicrogridConfig::defaults().with_gains(k_p, k_q);
    cfg.line = preset_line(preset);
    return cfg;
}

} // namespace mgrid
