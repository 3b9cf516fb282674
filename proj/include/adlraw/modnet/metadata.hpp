#pragma once

#include "adlraw/numcore/tensor.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace adlraw::modnet {

/// Sensor conditioning input: one-hot sensor type p and the normalized ISO
/// repeated n times in s. The network consumes concat(p, s).
struct MetadataVector {
    std::vector<float> p;
    std::vector<float> s;

    /// ISO is normalized by sensorsim::kMaxIso.
    static MetadataVector make(std::size_t n_sensors, int sensor_id, int iso);

    std::size_t n_sensors() const { return p.size(); }
    std::vector<float> concat() const;
    /// Checks one-hot p and constant s in (0, 1]. Masked vectors (all-zero p
    /// or s) are accepted when allow_masked is set.
    void validate(bool allow_masked = false) const;
};

/// Which halves of the metadata reach the network. Disabling a half zeroes
/// it while keeping the vector shape.
struct MetadataMask {
    bool use_type = true;
    bool use_iso = true;

    MetadataVector apply(MetadataVector meta) const;
};

/// Stacks metadata rows into an N x 2n tensor.
numcore::Tensor stack_metadata(std::span<const MetadataVector> rows);

} // namespace adlraw::modnet
