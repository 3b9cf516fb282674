#pragma once

#include "adlraw/modnet/denoiser.hpp"
#include "adlraw/modnet/metadata.hpp"
#include "adlraw/sensorsim/dataset.hpp"

#include <functional>
#include <span>
#include <vector>

namespace adlraw::metrics {

struct EvalReport {
    std::vector<double> psnr;
    std::vector<double> ssim; // empty when SSIM was not requested
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    std::size_t count = 0;
};

using MetaProvider = std::function<modnet::MetadataVector(const sensorsim::SamplePair&)>;

/// Metadata built from each pair's own sensor id and ISO, then masked.
MetaProvider pair_meta(std::size_t n_sensors, modnet::MetadataMask mask = {});

struct EvalOptions {
    bool with_ssim = true;
    std::size_t chunk = 8; // items per forward pass
};

/// Runs the model on every pair in order and scores output against clean.
/// Means are summed in item order.
EvalReport eval_model(const modnet::Denoiser& model, std::span<const sensorsim::SamplePair* const> pairs,
                      const MetaProvider& meta, const EvalOptions& options = {});
EvalReport eval_model(const modnet::Denoiser& model, const sensorsim::DomainDataset& dataset,
                      const MetaProvider& meta, const EvalOptions& options = {});

/// Scores the noisy inputs themselves (the identity denoiser).
EvalReport eval_passthrough(const sensorsim::DomainDataset& dataset, bool with_ssim = true);

} // namespace adlraw::metrics
