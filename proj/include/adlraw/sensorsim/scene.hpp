#pragma once

#include "adlraw/numcore/tensor.hpp"
#include "adlraw/sensorsim/profile.hpp"

#include <cstdint>
#include <random>

namespace adlraw::sensorsim {

using numcore::Tensor;

/// Deterministic synthetic scene sampled through a colour filter array.
/// Returns an h x w mosaic in [0, 1]. Height and width must be even.
Tensor render_clean_scene(std::uint64_t scene_seed, std::size_t height, std::size_t width,
                          BayerLayout layout = BayerLayout::rggb);

/// Rearranges an h x w mosaic into 4 x (h/2) x (w/2) planes ordered
/// top-left, top-right, bottom-left, bottom-right of each 2x2 tile.
Tensor pack_bayer(const Tensor& mosaic);
Tensor unpack_bayer(const Tensor& packed);

/// Simulated capture of an underexposed frame brightened by light_factor:
///   noisy = light_factor * (clean / light_factor + shot + read + row + fpn + black)
/// with shot ~ N(0, K(iso) * clean / light_factor), clamped to [-0.5, 2.0].
Tensor apply_noise(const Tensor& clean_mosaic, const SensorProfile& profile, int iso,
                   double light_factor, std::mt19937_64& rng);

/// Static per-pixel pattern (unit variance) for a given seed.
double fixed_pattern_value(std::uint64_t fpn_seed, std::size_t y, std::size_t x);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

inline constexpr float kNoisyMin = -0.5f;
inline constexpr float kNoisyMax = 2.0f;

} // namespace adlraw::sensorsim
