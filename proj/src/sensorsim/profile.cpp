#include "adlraw/sensorsim/profile.hpp"

#include "adlraw/numcore/tensor.hpp"

#include <algorithm>

namespace adlraw::sensorsim {

std::string_view to_string(BayerLayout layout) {
    switch (layout) {
    case BayerLayout::rggb: return "RGGB";
    case BayerLayout::bggr: return "BGGR";
    case BayerLayout::grbg: return "GRBG";
    case BayerLayout::gbrg: return "GBRG";
    }
    return "RGGB";
}

BayerLayout parse_layout(std::string_view text) {
    for (auto l : {BayerLayout::rggb, BayerLayout::bggr, BayerLayout::grbg, BayerLayout::gbrg}) {
        if (to_string(l) == text) return l;
    }
    throw ContractViolation("unknown Bayer layout '" + std::string(text) + "'");
}

double SensorProfile::gain(int iso) const {
    return base_gain * static_cast<double>(iso) / 100.0;
}

bool SensorProfile::supports(int iso) const {
    return std::find(iso_set.begin(), iso_set.end(), iso) != iso_set.end();
}

void SensorProfile::validate() const {
    if (!(base_gain > 0.0)) throw ContractViolation("sensor " + name + ": base gain must be positive");
    if (read_noise < 0.0 || row_noise < 0.0 || fpn_amplitude < 0.0) {
        throw ContractViolation("sensor " + name + ": noise levels must be non-negative");
    }
    if (black_level < 0.0 || black_level >= 0.25) {
        throw ContractViolation("sensor " + name + ": black level must lie in [0, 0.25)");
    }
    if (iso_set.empty()) throw ContractViolation("sensor " + name + ": empty ISO set");
    for (int iso : iso_set) {
        if (iso <= 0) throw ContractViolation("sensor " + name + ": ISO values must be positive");
    }
}

} // namespace adlraw::sensorsim
