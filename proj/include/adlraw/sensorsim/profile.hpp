#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace adlraw::sensorsim {

enum class BayerLayout { rggb, bggr, grbg, gbrg };

std::string_view to_string(BayerLayout layout);
BayerLayout parse_layout(std::string_view text);

/// Parametric camera model. Gains and noise levels are in normalized units
/// where the clean signal ceiling is 1.0.
struct SensorProfile {
    int sensor_id = 0;
    std::string name;
    double base_gain = 1e-3;   // system gain K at ISO 100
    double read_noise = 0.0;   // std of signal-independent Gaussian noise
    double row_noise = 0.0;    // std of the per-row offset
    double fpn_amplitude = 0.0;
    std::uint64_t fpn_seed = 0;
    double black_level = 0.0;  // in [0, 0.25)
    BayerLayout layout = BayerLayout::rggb;
    std::vector<int> iso_set{100, 400, 1600, 3200};

    /// K(iso) = base_gain * iso / 100.
    double gain(int iso) const;
    bool supports(int iso) const;
    /// Throws ContractViolation when an invariant does not hold.
    void validate() const;
};

/// Largest ISO in any built-in fleet; metadata normalizes by it.
inline constexpr int kMaxIso = 3200;

} // namespace adlraw::sensorsim
