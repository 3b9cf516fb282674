#pragma once

// Small datasets and models shared by the unit tests.

#include "adlraw/modnet/denoiser.hpp"
#include "adlraw/sensorsim/dataset.hpp"
#include "adlraw/sensorsim/fleet.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace adlraw::testing {

inline sensorsim::DomainDataset small_domain(int sensor, std::size_t count, std::size_t patch, std::uint64_t seed,
                                             sensorsim::Split split = sensorsim::Split::source) {
    const auto fleet = sensorsim::fleet_preset("default5");
    sensorsim::DomainSpec spec;
    spec.count = count;
    spec.patch = patch;
    spec.split = split;
    return sensorsim::build_domain(fleet.profiles.at(static_cast<std::size_t>(sensor)), spec, seed);
}

inline modnet::DenoiserConfig tiny_config(std::size_t n_sensors = 5) {
    modnet::DenoiserConfig cfg;
    cfg.widths = {8, 8, 8};
    cfg.n_sensors = n_sensors;
    return cfg;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("adlraw_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace adlraw::testing
