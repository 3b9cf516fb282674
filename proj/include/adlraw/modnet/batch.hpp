#pragma once

#include "adlraw/modnet/metadata.hpp"
#include "adlraw/sensorsim/dataset.hpp"

#include <span>

namespace adlraw::modnet {

/// Stacked inputs for one forward pass: noisy and clean are N x 4 x h x w,
/// meta is N x 2n.
struct Batch {
    numcore::Tensor noisy;
    numcore::Tensor clean;
    numcore::Tensor meta;

    std::size_t size() const { return noisy.dim(0); }
};

MetadataVector pair_metadata(const sensorsim::SamplePair& pair, std::size_t n_sensors,
                             const MetadataMask& mask = {});

Batch make_batch(std::span<const sensorsim::SamplePair* const> pairs, std::size_t n_sensors,
                 const MetadataMask& mask = {});

/// Item i of an N x C x H x W tensor as a C x H x W tensor.
numcore::Tensor slice_item(const numcore::Tensor& batch, std::size_t i);

} // namespace adlraw::modnet
