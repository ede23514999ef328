#include "mgrid/state.hpp"

namespace mgrid {

namespace {

StateLayout make_layout(ModelKind kind) {
    StateLayout l;
    switch (kind) {
    case ModelKind::Detailed:
        l.phi = 6;
        l.gamma = 10;
        l.filter_current = 14;
        l.output_voltage = 18;
        l.line_current = 22;
        l.load_current = 24;
        l.size = 28;
        break;
    case ModelKind::Em5:
        l.line_current = 6;
        l.load_current = 8;
        l.size = 12;
        break;
    case ModelKind::Conv3:
    case ModelKind::Hf3:
        l.load_current = 6;
        l.size = 10;
        break;
    }
    return l;
}

void push_pair(std::vector<std::string>& labels, const std::string& stem, const char* bus) {
    labels.push_back(stem + "_d_" + bus);
    labels.push_back(stem + "_q_" + bus);
}

} // namespace

std::string model_name(ModelKind kind) {
    switch (kind) {
    case ModelKind::Detailed:
        return "detailed";
    case ModelKind::Em5:
        return "em5";
    case ModelKind::Conv3:
        return "conv3";
    case ModelKind::Hf3:
        return "hf3";
    }
    return "unknown";
}

ModelKind parse_model(const std::string& name) {
    for (ModelKind kind : kAllModels) {
        if (model_name(kind) == name) {
            return kind;
        }
    }
    throw ValidationError("unknown model '" + name + "' (expected detailed, em5, conv3 or hf3)");
}

const StateLayout& layout(ModelKind kind) {
    static const StateLayout layouts[] = {make_layout(ModelKind::Detailed), make_layout(ModelKind::Em5),
                                          make_layout(ModelKind::Conv3), make_layout(ModelKind::Hf3)};
    return layouts[static_cast<int>(kind)];
}

std::vector<std::string> state_labels(ModelKind kind) {
    const StateLayout& l = layout(kind);
    std::vector<std::string> labels{"delta_i", "delta_k", "omega_i", "omega_k", "V_i", "V_k"};
    if (l.phi >= 0) {
        for (const char* stem : {"phi", "gamma", "i", "v_o"}) {
            push_pair(labels, stem, "i");
            push_pair(labels, stem, "k");
        }
    }
    if (l.line_current >= 0) {
        labels.push_back("I_D_ik");
        labels.push_back("I_Q_ik");
    }
    push_pair(labels, "I_l", "i");
    push_pair(labels, "I_l", "k");
    // DQ components of load currents use upper-case axis names
    for (auto& label : labels) {
        if (label.rfind("I_l_", 0) == 0) {
            label[4] = label[4] == 'd' ? 'D' : 'Q';
        }
    }
    return labels;
}

void require_layout(ModelKind kind, const Vector& x) {
    if (x.size() != state_size(kind)) {
        throw ValidationError(model_name(kind) + " state must have " + std::to_string(state_size(kind)) +
                              " entries, got " + std::to_string(x.size()));
    }
}

Vector cold_start(ModelKind kind, const MicrogridConfig& cfg) {
    const StateLayout& l = layout(kind);
    Vector x = Vector::Zero(l.size);
    for (int b = 0; b < 2; ++b) {
        x(l.omega + b) = cfg.inverter[b].omega_n;
        x(l.voltage + b) = cfg.inverter[b].V_n;
    }
    return x;
}

} // namespace mgrid
