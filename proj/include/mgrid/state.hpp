#pragma once

#include <string>
#include <vector>

#include "mgrid/params.hpp"
#include "mgrid/types.hpp"

namespace mgrid {

enum class ModelKind { Detailed, Em5, Conv3, Hf3 };

inline constexpr ModelKind kAllModels[] = {ModelKind::Detailed, ModelKind::Em5, ModelKind::Conv3,
                                           ModelKind::Hf3};

std::string model_name(ModelKind kind);
ModelKind parse_model(const std::string& name);

/// Offsets into the flat state vector. Per-bus entries sit at offset + bus
/// for scalars and offset + 2 * bus for two-axis vectors. -1 marks a block
/// the model does not carry.
struct StateLayout {
    int size = 0;
    int delta = 0;
    int omega = 2;
    int voltage = 4;
    int phi = -1;
    int gamma = -1;
    int filter_current = -1;
    int output_voltage = -1;
    int line_current = -1;
    int load_current = -1;
};

const StateLayout& layout(ModelKind kind);

inline int state_size(ModelKind kind) { return layout(kind).size; }

std::vector<std::string> state_labels(ModelKind kind);

/// Throws ValidationError unless x.size() matches the layout of kind.
void require_layout(ModelKind kind, const Vector& x);

/// delta = 0, omega = omega_n, V = V_n, every other state zero.
Vector cold_start(ModelKind kind, const MicrogridConfig& cfg);

} // namespace mgrid
