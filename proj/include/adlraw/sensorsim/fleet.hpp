#pragma once

#include "adlraw/sensorsim/profile.hpp"

#include <string_view>
#include <vector>

namespace adlraw::sensorsim {

struct Fleet {
    std::string name;
    std::vector<SensorProfile> profiles;
    std::vector<double> light_factors{1.0};
};

/// "default5": five smartphone-like sensors at light factor 1.
/// "lowlight4": four DSLR-like sensors captured at light factors {100, 300}.
Fleet fleet_preset(std::string_view name);

} // namespace adlraw::sensorsim
