#pragma once

#include "adlraw/numcore/tensor.hpp"
#include "adlraw/sensorsim/profile.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace adlraw::sensorsim {

using numcore::Tensor;

/// One training example in packed 4 x h x w form.
struct SamplePair {
    Tensor noisy;
    Tensor clean;
    int sensor_id = 0;
    int iso = 100;
    float light_factor = 1.0f;
    std::uint64_t scene_seed = 0;
};

enum class Split { adaptation, test, source };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct DomainDataset {
    int sensor_id = 0;
    Split split = Split::source;
    std::vector<SamplePair> pairs;

    std::size_t size() const { return pairs.size(); }
    /// Throws ContractViolation if the dataset is empty, mixes sensors or
    /// holds pairs of mismatched shapes.
    void validate() const;
    /// First `count` pairs as a new dataset.
    DomainDataset head(std::size_t count) const;
};

struct DomainSpec {
    std::size_t count = 16;
    std::size_t patch = 32;                 // packed side length
    std::vector<int> isos;                  // drawn uniformly; empty = profile.iso_set
    std::vector<double> light_factors{1.0}; // drawn uniformly
    Split split = Split::source;
};

/// Renders `count` independent scenes, applies the sensor's noise model and
/// packs both images. Deterministic in (profile, spec, seed).
DomainDataset build_domain(const SensorProfile& profile, const DomainSpec& spec, std::uint64_t seed);

/// Bright, high-mean copies of the base targets with i.i.d. Gaussian noise of
/// std sigma/255 added; light factor 1.
DomainDataset make_harmful1(const DomainDataset& base, double sigma, std::uint64_t seed);

enum class HarmfulMode { shuffled_gt, black_gt };

/// Misaligned pairs: targets permuted by a derangement, or replaced by a
/// constant black image.
DomainDataset make_harmful2(const DomainDataset& base, HarmfulMode mode, std::uint64_t seed,
                            float black_value = 0.0f);

} // namespace adlraw::sensorsim
