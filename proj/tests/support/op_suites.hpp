#pragma once

// Randomized gradient-check suites for every differentiable op and for the
// full denoiser. Shared by the unit tests and the acceptance binary.

#include "gradcheck.hpp"

#include "adlraw/modnet/denoiser.hpp"
#include "adlraw/numcore/ops.hpp"

#include <map>
#include <string>

namespace adlraw::testing {

namespace ops = numcore::ops;

/// Contracts an arbitrary op output with fixed random weights so every
/// output element receives a distinct upstream gradient.
inline Tensor64 contract(Tape64& tape, const Tensor64& out, const Tensor64& weights) {
    return ops::sum(tape, ops::mul(tape, out, weights));
}

/// One random configuration of `op`. Shapes are drawn from `rng`.
inline GradCheckReport check_op(const std::string& op, std::mt19937_64& rng, const GradCheckOptions& opts = {}) {
    auto dim = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    const std::size_t n = dim(1, 2), c = dim(1, 3), h = dim(2, 5), w = dim(2, 5);
    const numcore::Shape nchw{n, c, h, w};

    if (op == "add" || op == "sub" || op == "mul") {
        auto a = random_tensor(nchw, rng), b = random_tensor(nchw, rng), r = random_tensor(nchw, rng);
        return check_gradients({a, b}, [&](Tape64& t) {
            auto out = op == "add" ? ops::add(t, a, b) : op == "sub" ? ops::sub(t, a, b) : ops::mul(t, a, b);
            return contract(t, out, r);
        }, opts);
    }
    if (op == "add_scalar") {
        auto a = random_tensor(nchw, rng), r = random_tensor(nchw, rng);
        const double s = std::uniform_real_distribution<double>(-2, 2)(rng);
        return check_gradients({a}, [&](Tape64& t) { return contract(t, ops::add_scalar(t, a, s), r); }, opts);
    }
    if (op == "tanh") {
        auto a = random_tensor(nchw, rng, -2, 2), r = random_tensor(nchw, rng);
        return check_gradients({a}, [&](Tape64& t) { return contract(t, ops::tanh(t, a), r); }, opts);
    }
    if (op == "relu") {
        auto a = random_tensor(nchw, rng), r = random_tensor(nchw, rng);
        return check_gradients({a}, [&](Tape64& t) { return contract(t, ops::relu(t, a), r); }, opts);
    }
    if (op == "scale_shift") {
        auto x = random_tensor(nchw, rng), r = random_tensor(nchw, rng);
        auto g = random_tensor({n, c}, rng, 0, 2), b = random_tensor({n, c}, rng);
        return check_gradients({x, g, b}, [&](Tape64& t) { return contract(t, ops::scale_shift(t, x, g, b), r); },
                               opts);
    }
    if (op == "linear") {
        const std::size_t d = dim(1, 6), e = dim(1, 6);
        auto x = random_tensor({n, d}, rng), wt = random_tensor({d, e}, rng), b = random_tensor({1, e}, rng);
        auto r = random_tensor({n, e}, rng);
        return check_gradients({x, wt, b}, [&](Tape64& t) { return contract(t, ops::linear(t, x, wt, b), r); },
                               opts);
    }
    if (op == "conv2d") {
        const std::size_t o = dim(1, 3), k = dim(1, 3), stride = dim(1, 2), pad = dim(0, 1);
        const std::size_t hh = std::max(h, k), ww = std::max(w, k);
        auto x = random_tensor({n, c, hh, ww}, rng), kern = random_tensor({o, c, k, k}, rng);
        auto b = random_tensor({o}, rng);
        const std::size_t oh = (hh + 2 * pad - k) / stride + 1, ow = (ww + 2 * pad - k) / stride + 1;
        auto r = random_tensor({n, o, oh, ow}, rng);
        return check_gradients({x, kern, b}, [&](Tape64& t) {
            return contract(t, ops::conv2d(t, x, kern, b, stride, pad), r);
        }, opts);
    }
    if (op == "upsample2x") {
        auto x = random_tensor(nchw, rng), r = random_tensor({n, c, 2 * h, 2 * w}, rng);
        return check_gradients({x}, [&](Tape64& t) { return contract(t, ops::upsample2x(t, x), r); }, opts);
    }
    if (op == "concat_channels") {
        const std::size_t c2 = dim(1, 3);
        auto a = random_tensor(nchw, rng), b = random_tensor({n, c2, h, w}, rng);
        auto r = random_tensor({n, c + c2, h, w}, rng);
        return check_gradients({a, b}, [&](Tape64& t) { return contract(t, ops::concat_channels(t, a, b), r); },
                               opts);
    }
    if (op == "sum") {
        auto a = random_tensor(nchw, rng);
        return check_gradients({a}, [&](Tape64& t) { return ops::sum(t, a); }, opts);
    }
    if (op == "l1_loss") {
        auto a = random_tensor(nchw, rng), b = random_tensor(nchw, rng);
        return check_gradients({a}, [&](Tape64& t) { return ops::l1_loss(t, a, b); }, opts);
    }
    throw ContractViolation("check_op: unknown op " + op);
}

inline const std::vector<std::string>& differentiable_ops() {
    static const std::vector<std::string> names{"add",    "sub",     "mul",        "add_scalar",      "tanh",
                                                "relu",   "scale_shift", "linear", "conv2d",          "upsample2x",
                                                "concat_channels", "sum", "l1_loss"};
    return names;
}

/// Full denoiser L1 loss with every parameter randomized, so that no path
/// is cut off by the zero-initialized output layer or modulation MLPs.
inline GradCheckReport check_denoiser(std::mt19937_64& rng, const GradCheckOptions& opts = {}) {
    auto dim = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };
    modnet::DenoiserConfig cfg;
    cfg.widths = {dim(2, 3), dim(2, 4), dim(2, 4)};
    cfg.n_sensors = dim(2, 3);
    auto model = modnet::Denoiser(cfg, rng()).cast<double>();
    for (auto& p : model.parameters()) {
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        for (auto& v : p.mutable_data()) v = u(rng);
    }
    const std::size_t batch = dim(1, 2), side = 8;
    auto noisy = random_tensor({batch, 4, side, side}, rng, 0, 1);
    auto clean = random_tensor({batch, 4, side, side}, rng, 0, 1);
    std::vector<double> meta(batch * 2 * cfg.n_sensors, 0.0);
    std::uniform_real_distribution<double> iso(0.03, 1.0);
    for (std::size_t b = 0; b < batch; ++b) {
        meta[b * 2 * cfg.n_sensors + dim(0, cfg.n_sensors - 1)] = 1.0;
        const double s = iso(rng);
        for (std::size_t i = 0; i < cfg.n_sensors; ++i) meta[b * 2 * cfg.n_sensors + cfg.n_sensors + i] = s;
    }
    Tensor64 meta_t({batch, 2 * cfg.n_sensors}, std::move(meta));
    return check_gradients(model.parameters(), [&](Tape64& t) {
        return ops::l1_loss(t, model.forward(t, noisy, meta_t), clean);
    }, opts);
}

} // namespace adlraw::testing
