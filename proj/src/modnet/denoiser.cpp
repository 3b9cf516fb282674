#include "adlraw/modnet/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace adlraw::modnet {

namespace ops = numcore::ops;

void DenoiserConfig::validate() const {
    for (std::size_t w : widths) {
        if (w == 0) throw ContractViolation("denoiser channel widths must be positive");
    }
    if (n_sensors == 0) throw ContractViolation("denoiser needs at least one sensor");
}

namespace {

template <typename T>
BasicTensor<T> uniform(numcore::Shape shape, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<T> data(numcore::shape_numel(shape));
    for (auto& v : data) v = static_cast<T>(u(rng));
    return BasicTensor<T>(std::move(shape), std::move(data));
}

template <typename T>
ConvLayer<T> make_conv(std::size_t out, std::size_t in, std::mt19937_64& rng, bool zero) {
    const std::size_t fan_in = in * 9;
    ConvLayer<T> layer;
    layer.weight = zero ? BasicTensor<T>::zeros({out, in, 3, 3})
                        : uniform<T>({out, in, 3, 3}, std::sqrt(6.0 / static_cast<double>(fan_in)), rng);
    layer.bias = BasicTensor<T>::zeros({out});
    return layer;
}

template <typename T>
Mlp<T> make_mlp(std::size_t in, std::size_t width, std::mt19937_64& rng) {
    Mlp<T> mlp;
    std::size_t d = in;
    for (std::size_t l = 0; l < kMlpLayers; ++l) {
        mlp.weights[l] = uniform<T>({d, width}, 1.0 / std::sqrt(static_cast<double>(d)), rng);
        mlp.biases[l] = BasicTensor<T>::zeros({width});
        d = width;
    }
    return mlp;
}

} // namespace

template <typename T>
BasicTensor<T> Mlp<T>::forward(BasicTape<T>& tape, const BasicTensor<T>& x) const {
    BasicTensor<T> h = x;
    for (std::size_t l = 0; l < kMlpLayers; ++l) {
        h = ops::linear(tape, h, weights[l], biases[l]);
        if (l + 1 < kMlpLayers) h = ops::relu(tape, h);
    }
    return h;
}

template <typename T>
BasicTensor<T> modulate(BasicTape<T>& tape, const BasicTensor<T>& features, const BasicTensor<T>& gamma,
                        const BasicTensor<T>& beta) {
    if (features.rank() != 4) throw ContractViolation("modulate: features must be N x C x H x W");
    const std::size_t C = features.dim(1);
    if (gamma.numel() % C != 0 || beta.numel() != gamma.numel() ||
        (gamma.numel() != C && gamma.numel() != C * features.dim(0))) {
        throw ContractViolation("modulate: gamma " + numcore::shape_str(gamma.shape()) + " / beta " +
                                numcore::shape_str(beta.shape()) + " do not match " + std::to_string(C) +
                                " channels");
    }
    return ops::scale_shift(tape, features, gamma, beta);
}

template <typename T>
BasicDenoiser<T>::BasicDenoiser(const DenoiserConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    std::mt19937_64 rng(seed);
    const auto& c = config_.widths;
    encoder[0] = make_conv<T>(c[0], kInputChannels, rng, false);
    encoder[1] = make_conv<T>(c[1], c[0], rng, false);
    encoder[2] = make_conv<T>(c[2], c[1], rng, false);
    decoder[0] = make_conv<T>(c[1], c[2] + c[1], rng, false);
    decoder[1] = make_conv<T>(c[0], c[1] + c[0], rng, false);
    decoder[2] = make_conv<T>(kInputChannels, c[0] + kInputChannels, rng, true);
    for (std::size_t s = 0; s < kStages; ++s) {
        stages[s].gamma = make_mlp<T>(2 * config_.n_sensors, c[s], rng);
        stages[s].beta = make_mlp<T>(2 * config_.n_sensors, c[s], rng);
    }
    set_requires_grad(true);
}

template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> BasicDenoiser<T>::modulation_params(BasicTape<T>& tape,
                                                                              const BasicTensor<T>& meta,
                                                                              std::size_t stage) const {
    if (stage >= kStages) throw ContractViolation("modulation stage out of range");
    if (meta.rank() != 2 || meta.dim(1) != 2 * config_.n_sensors) {
        throw ContractViolation("metadata " + numcore::shape_str(meta.shape()) + " does not match a model for " +
                                std::to_string(config_.n_sensors) + " sensors");
    }
    auto gamma = ops::add_scalar(tape, ops::tanh(tape, stages[stage].gamma.forward(tape, meta)), T(1));
    // 1 + tanh(x) rounds to exactly 0 or 2 once |x| is large; keep gamma in
    // the open interval. tanh's derivative has already underflowed there.
    const T lo = std::nextafter(T(0), T(1)), hi = std::nextafter(T(2), T(0));
    for (auto& v : gamma.mutable_data()) v = std::clamp(v, lo, hi);
    auto beta = stages[stage].beta.forward(tape, meta);
    return {gamma, beta};
}

template <typename T>
BasicTensor<T> BasicDenoiser<T>::forward(BasicTape<T>& tape, const BasicTensor<T>& noisy,
                                         const BasicTensor<T>& meta) const {
    if (noisy.rank() != 4 || noisy.dim(1) != kInputChannels) {
        throw ContractViolation("denoiser input must be N x 4 x h x w, got " + numcore::shape_str(noisy.shape()));
    }
    if (noisy.dim(2) % 8 != 0 || noisy.dim(3) % 8 != 0) {
        throw ContractViolation("denoiser input spatial size " + numcore::shape_str(noisy.shape()) +
                                " must be divisible by 8");
    }
    if (meta.rank() != 2 || meta.dim(0) != noisy.dim(0)) {
        throw ContractViolation("metadata rows " + numcore::shape_str(meta.shape()) + " do not match batch " +
                                numcore::shape_str(noisy.shape()));
    }
    std::array<BasicTensor<T>, kStages> skips;
    BasicTensor<T> h = noisy;
    for (std::size_t s = 0; s < kStages; ++s) {
        h = ops::conv2d(tape, h, encoder[s].weight, encoder[s].bias, 2, 1);
        if (config_.modulation) {
            auto [gamma, beta] = modulation_params(tape, meta, s);
            h = modulate(tape, h, gamma, beta);
        }
        h = ops::relu(tape, h);
        skips[s] = h;
    }
    h = ops::conv2d(tape, ops::concat_channels(tape, ops::upsample2x(tape, skips[2]), skips[1]),
                    decoder[0].weight, decoder[0].bias, 1, 1);
    h = ops::relu(tape, h);
    h = ops::conv2d(tape, ops::concat_channels(tape, ops::upsample2x(tape, h), skips[0]), decoder[1].weight,
                    decoder[1].bias, 1, 1);
    h = ops::relu(tape, h);
    auto residual = ops::conv2d(tape, ops::concat_channels(tape, ops::upsample2x(tape, h), noisy),
                                decoder[2].weight, decoder[2].bias, 1, 1);
    return ops::add(tape, noisy, residual);
}

template <typename T>
std::vector<BasicTensor<T>> BasicDenoiser<T>::parameters() const {
    std::vector<BasicTensor<T>> out;
    for (const auto& l : encoder) {
        out.push_back(l.weight);
        out.push_back(l.bias);
    }
    for (const auto& l : decoder) {
        out.push_back(l.weight);
        out.push_back(l.bias);
    }
    for (const auto& st : stages) {
        for (const Mlp<T>* mlp : {&st.gamma, &st.beta}) {
            for (std::size_t l = 0; l < kMlpLayers; ++l) {
                out.push_back(mlp->weights[l]);
                out.push_back(mlp->biases[l]);
            }
        }
    }
    return out;
}

template <typename T>
std::vector<std::string> BasicDenoiser<T>::parameter_names() const {
    std::vector<std::string> out;
    for (std::size_t s = 0; s < kStages; ++s) {
        out.push_back("encoder." + std::to_string(s) + ".weight");
        out.push_back("encoder." + std::to_string(s) + ".bias");
    }
    for (std::size_t s = 0; s < kStages; ++s) {
        out.push_back("decoder." + std::to_string(s) + ".weight");
        out.push_back("decoder." + std::to_string(s) + ".bias");
    }
    for (std::size_t s = 0; s < kStages; ++s) {
        for (const char* which : {"gamma", "beta"}) {
            for (std::size_t l = 0; l < kMlpLayers; ++l) {
                const std::string base = "stage." + std::to_string(s) + "." + which + "." + std::to_string(l);
                out.push_back(base + ".weight");
                out.push_back(base + ".bias");
            }
        }
    }
    return out;
}

template <typename T>
std::size_t BasicDenoiser<T>::count_params() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.numel();
    return n;
}

template <typename T>
void BasicDenoiser<T>::zero_modulation() {
    for (auto& st : stages) {
        for (Mlp<T>* mlp : {&st.gamma, &st.beta}) {
            for (std::size_t l = 0; l < kMlpLayers; ++l) {
                for (auto& v : mlp->weights[l].mutable_data()) v = T(0);
                for (auto& v : mlp->biases[l].mutable_data()) v = T(0);
            }
        }
    }
}

template <typename T>
void BasicDenoiser<T>::set_requires_grad(bool on) {
    for (auto p : parameters()) p.set_requires_grad(on);
}

template struct Mlp<float>;
template struct Mlp<double>;
template class BasicDenoiser<float>;
template class BasicDenoiser<double>;
template BasicTensor<float> modulate(BasicTape<float>&, const BasicTensor<float>&, const BasicTensor<float>&,
                                     const BasicTensor<float>&);
template BasicTensor<double> modulate(BasicTape<double>&, const BasicTensor<double>&,
                                      const BasicTensor<double>&, const BasicTensor<double>&);

} // namespace adlraw::modnet
