#pragma once

#include "adlraw/modnet/denoiser.hpp"

#include <filesystem>
#include <stdexcept>

#include <json.hpp>

namespace adlraw::modnet {

// On-disk layout, little-endian:
//   "ADLMDL1\0"
//   u32 descriptor length, UTF-8 JSON descriptor (widths, n_sensors, modulation, tensor names and shapes)
//   u64 scalar count, f32 parameters in parameters() order

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

nlohmann::json describe(const Denoiser& model);

void save_checkpoint(const std::filesystem::path& path, const Denoiser& model);
Denoiser load_checkpoint(const std::filesystem::path& path);

/// Copies parameter values from `from` into `to`. Architectures must match.
void copy_parameters(const Denoiser& from, Denoiser& to);

} // namespace adlraw::modnet
