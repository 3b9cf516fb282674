#pragma once

#include "adlraw/numcore/ops.hpp"
#include "adlraw/numcore/tape.hpp"
#include "adlraw/numcore/tensor.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace adlraw::modnet {

using numcore::BasicTape;
using numcore::BasicTensor;

inline constexpr std::size_t kStages = 3;
inline constexpr std::size_t kMlpLayers = 4;
inline constexpr std::size_t kInputChannels = 4;

struct DenoiserConfig {
    std::array<std::size_t, kStages> widths{16, 32, 64};
    std::size_t n_sensors = 5;
    bool modulation = true;

    void validate() const;
    bool operator==(const DenoiserConfig&) const = default;
};

template <typename T>
struct ConvLayer {
    BasicTensor<T> weight; // O x I x 3 x 3
    BasicTensor<T> bias;   // O
};

/// Four affine layers (2n -> C -> C -> C -> C) with ReLU between them.
template <typename T>
struct Mlp {
    std::array<BasicTensor<T>, kMlpLayers> weights; // D x E
    std::array<BasicTensor<T>, kMlpLayers> biases;  // E

    BasicTensor<T> forward(BasicTape<T>& tape, const BasicTensor<T>& x) const;
};

template <typename T>
struct ModulationStage {
    Mlp<T> gamma;
    Mlp<T> beta;
};

/// F' = gamma * F + beta per channel. F is N x C x H x W, gamma and beta are
/// N x C (or C, shared across the batch).
template <typename T>
BasicTensor<T> modulate(BasicTape<T>& tape, const BasicTensor<T>& features,
                        const BasicTensor<T>& gamma, const BasicTensor<T>& beta);

/// Three-level encoder/decoder with skip connections predicting a residual
/// that is added to the noisy input. Each encoder convolution is followed by
/// sensor/ISO modulation, then ReLU.
template <typename T>
class BasicDenoiser {
public:
    BasicDenoiser(const DenoiserConfig& config, std::uint64_t seed);

    const DenoiserConfig& config() const { return config_; }

    /// gamma = 1 + tanh(MLP_gamma(meta)), beta = MLP_beta(meta); each N x C_stage.
    std::pair<BasicTensor<T>, BasicTensor<T>> modulation_params(BasicTape<T>& tape,
                                                                const BasicTensor<T>& meta,
                                                                std::size_t stage) const;

    /// noisy is N x 4 x h x w with h, w divisible by 8; meta is N x 2n.
    BasicTensor<T> forward(BasicTape<T>& tape, const BasicTensor<T>& noisy,
                           const BasicTensor<T>& meta) const;

    /// All trainable tensors in checkpoint order.
    std::vector<BasicTensor<T>> parameters() const;
    std::vector<std::string> parameter_names() const;
    std::size_t count_params() const;

    /// Zeroes every modulation MLP weight and bias.
    void zero_modulation();
    void set_requires_grad(bool on);

    /// Deep copy at another precision.
    template <typename U>
    BasicDenoiser<U> cast() const;

    std::array<ConvLayer<T>, kStages> encoder;
    std::array<ConvLayer<T>, kStages> decoder;
    std::array<ModulationStage<T>, kStages> stages;

private:
    template <typename U>
    friend class BasicDenoiser;
    BasicDenoiser() = default;

    DenoiserConfig config_;
};

using Denoiser = BasicDenoiser<float>;
using Denoiser64 = BasicDenoiser<double>;

template <typename T>
template <typename U>
BasicDenoiser<U> BasicDenoiser<T>::cast() const {
    BasicDenoiser<U> out;
    out.config_ = config_;
    for (std::size_t s = 0; s < kStages; ++s) {
        out.encoder[s] = {encoder[s].weight.template cast<U>(), encoder[s].bias.template cast<U>()};
        out.decoder[s] = {decoder[s].weight.template cast<U>(), decoder[s].bias.template cast<U>()};
        for (std::size_t l = 0; l < kMlpLayers; ++l) {
            out.stages[s].gamma.weights[l] = stages[s].gamma.weights[l].template cast<U>();
            out.stages[s].gamma.biases[l] = stages[s].gamma.biases[l].template cast<U>();
            out.stages[s].beta.weights[l] = stages[s].beta.weights[l].template cast<U>();
            out.stages[s].beta.biases[l] = stages[s].beta.biases[l].template cast<U>();
        }
    }
    return out;
}

} // namespace adlraw::modnet
