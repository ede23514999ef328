#include "mgrid/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>
#include <system_error>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace mgrid {

namespace {

using Accessor = std::function<double&(ConfigFile&)>;

struct Field {
    const char* key;
    Accessor get;
};

std::vector<Field> inverter_fields(int bus) {
    auto inv = [bus](auto member) {
        return [bus, member](ConfigFile& f) -> double& { return f.grid.inverter[bus].*member; };
    };
    return {
        {"R_f", inv(&InverterParams::R_f)},         {"L_f", inv(&InverterParams::L_f)},
        {"C_f", inv(&InverterParams::C_f)},         {"k_p", inv(&InverterParams::k_p)},
        {"k_q", inv(&InverterParams::k_q)},         {"tau", inv(&InverterParams::tau)},
        {"omega_n", inv(&InverterParams::omega_n)}, {"V_n", inv(&InverterParams::V_n)},
        {"K_PV", inv(&InverterParams::K_PV)},       {"K_IV", inv(&InverterParams::K_IV)},
        {"K_PC", inv(&InverterParams::K_PC)},       {"K_IC", inv(&InverterParams::K_IC)},
    };
}

std::vector<Field> load_fields(int bus) {
    return {
        {"R_l", [bus](ConfigFile& f) -> double& { return f.grid.load[bus].R; }},
        {"L_l", [bus](ConfigFile& f) -> double& { return f.grid.load[bus].L; }},
    };
}

std::vector<Field> fields(const std::string& section) {
    if (section == "inverter_i") return inverter_fields(kBusI);
    if (section == "inverter_k") return inverter_fields(kBusK);
    if (section == "load_i") return load_fields(kBusI);
    if (section == "load_k") return load_fields(kBusK);
    if (section == "line") {
        return {
            {"R_ik", [](ConfigFile& f) -> double& { return f.grid.line.R; }},
            {"L_ik", [](ConfigFile& f) -> double& { return f.grid.line.L; }},
        };
    }
    if (section == "report") {
        return {
            {"max_excess", [](ConfigFile& f) -> double& { return f.thresholds.max_excess; }},
            {"minority_fraction", [](ConfigFile& f) -> double& { return f.thresholds.minority_fraction; }},
            {"tie_tolerance", [](ConfigFile& f) -> double& { return f.thresholds.tie_tolerance; }},
        };
    }
    return {};
}

constexpr std::array<const char*, 6> kSections = {"inverter_i", "inverter_k", "line", "load_i", "load_k", "report"};

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ", ";
        out += s;
    }
    return out;
}

double parse_number(const std::string& raw, const std::string& name) {
    std::string text = raw;
    const auto first = text.find_first_not_of(" \t");
    const auto last = text.find_last_not_of(" \t");
    text = first == std::string::npos ? "" : text.substr(first, last - first + 1);
    double value = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end) {
        throw ValidationError("parameter " + name + ": '" + raw + "' is not a number");
    }
    return value;
}

} // namespace

void ReportThresholds::validate() const {
    if (!(max_excess > 0.0) || !std::isfinite(max_excess)) {
        throw ValidationError("parameter report.max_excess must be positive and finite");
    }
    if (!(minority_fraction > 0.0 && minority_fraction <= 1.0)) {
        throw ValidationError("parameter report.minority_fraction must lie in (0, 1]");
    }
    if (!(tie_tolerance > 0.0) || !(tie_tolerance < max_excess)) {
        throw ValidationError("parameter report.tie_tolerance must be positive and below max_excess");
    }
}

std::vector<std::string> section_keys(const std::string& section) {
    std::vector<std::string> keys;
    for (const auto& f : fields(section)) keys.emplace_back(f.key);
    return keys;
}

ConfigFile parse_config_file(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }

    ConfigFile file;
    for (const auto& [section, body] : tree) {
        const auto known = fields(section);
        if (known.empty()) {
            if (body.empty() && !body.data().empty()) {
                throw ValidationError("config: key '" + section + "' outside a section");
            }
            std::vector<std::string> names(kSections.begin(), kSections.end());
            throw ValidationError("config: unknown section [" + section + "]; valid sections: " + join(names));
        }
        for (const auto& [key, value] : body) {
            const std::string name = section + "." + key;
            auto it = std::find_if(known.begin(), known.end(), [&](const Field& f) { return key == f.key; });
            if (it == known.end()) {
                throw ValidationError("config: unknown key '" + name + "'; valid keys in [" + section +
                                      "]: " + join(section_keys(section)));
            }
            const double v = parse_number(value.data(), name);
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw ValidationError("parameter " + name + " must be positive and finite");
            }
            it->get(file) = v;
        }
    }
    file.grid.omega0 = file.grid.inverter[kBusI].omega_n;
    file.grid.validate();
    file.thresholds.validate();
    return file;
}

MicrogridConfig parse_config(const std::string& text) {
    return parse_config_file(text).grid;
}

std::string format_double(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) throw NumericalError("format_double: conversion failed");
    return std::string(buf.data(), ptr);
}

namespace {

std::string write_sections(ConfigFile file, bool with_report) {
    std::ostringstream out;
    bool first = true;
    for (const char* section : kSections) {
        const std::string name = section;
        if (name == "report" && !with_report) continue;
        if (!first) out << '\n';
        first = false;
        out << '[' << name << "]\n";
        for (const auto& f : fields(name)) out << f.key << " = " << format_double(f.get(file)) << '\n';
    }
    return out.str();
}

} // namespace

std::string serialize(const MicrogridConfig& cfg) {
    ConfigFile file;
    file.grid = cfg;
    return write_sections(file, false);
}

std::string serialize(const ConfigFile& file) {
    return write_sections(file, true);
}

} // namespace mgrid
