#pragma once

// Central finite-difference gradient checking in double precision.

#include "adlraw/numcore/tape.hpp"
#include "adlraw/numcore/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace adlraw::testing {

using numcore::Tape64;
using numcore::Tensor64;

struct GradCheckOptions {
    double h = 1e-3;
    double rel_tol = 1e-4;
    double abs_floor = 1e-9;
    double min_h = 1e-7;
};

struct GradCheckReport {
    std::size_t checked = 0;
    std::size_t failed = 0;
    std::size_t kink_skipped = 0; // coordinates whose +-h probe kept crossing a kink
    std::size_t shrunk = 0;       // coordinates checked with a step below opts.h
    double worst_rel = 0.0;       // over coordinates whose error exceeds opts.abs_floor

    bool ok() const { return failed == 0; }
    void merge(const GradCheckReport& o) {
        checked += o.checked;
        failed += o.failed;
        kink_skipped += o.kink_skipped;
        shrunk += o.shrunk;
        worst_rel = std::max(worst_rel, o.worst_rel);
    }
};

/// Scalar loss of the current parameter values, recorded on `tape`.
using LossFn = std::function<Tensor64(Tape64& tape)>;

inline bool gradient_matches(double analytic, double numeric, const GradCheckOptions& opts, double& rel) {
    const double diff = std::abs(analytic - numeric);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    rel = scale > 0.0 ? diff / scale : 0.0;
    return diff <= opts.abs_floor || diff <= opts.rel_tol * scale;
}

/// Compares the tape gradient of every element of `params` against a central
/// difference. A step whose +-h evaluations change the activation pattern is
/// retried with h / 10 until opts.min_h.
inline GradCheckReport check_gradients(std::vector<Tensor64> params, const LossFn& loss_fn,
                                       const GradCheckOptions& opts = {}) {
    for (auto& p : params) {
        p.set_requires_grad(true);
        p.zero_grad();
    }
    std::vector<std::uint8_t> base_sig;
    {
        Tape64 tape;
        tape.enable_kink_probe(true);
        auto loss = loss_fn(tape);
        base_sig = tape.kink_signature();
        tape.backward(loss);
    }
    std::vector<std::vector<double>> analytic;
    for (const auto& p : params) analytic.emplace_back(p.grad().begin(), p.grad().end());

    auto probe = [&](std::vector<std::uint8_t>& sig) {
        Tape64 tape(false);
        tape.enable_kink_probe(true);
        const double v = loss_fn(tape).item();
        sig = tape.kink_signature();
        return v;
    };

    GradCheckReport report;
    std::vector<std::uint8_t> sig_plus, sig_minus;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto values = params[pi].mutable_data();
        for (std::size_t j = 0; j < values.size(); ++j) {
            const double original = values[j];
            double h = opts.h;
            double numeric = 0.0;
            bool smooth = false;
            while (h >= opts.min_h) {
                values[j] = original + h;
                const double lp = probe(sig_plus);
                values[j] = original - h;
                const double lm = probe(sig_minus);
                values[j] = original;
                if (sig_plus == base_sig && sig_minus == base_sig) {
                    numeric = (lp - lm) / (2.0 * h);
                    smooth = true;
                    break;
                }
                h /= 10.0;
            }
            if (!smooth) {
                ++report.kink_skipped;
                continue;
            }
            if (h < opts.h) ++report.shrunk;
            ++report.checked;
            double rel = 0.0;
            if (!gradient_matches(analytic[pi][j], numeric, opts, rel)) ++report.failed;
            if (std::abs(analytic[pi][j] - numeric) > opts.abs_floor) report.worst_rel = std::max(report.worst_rel, rel);
        }
    }
    return report;
}

inline Tensor64 random_tensor(numcore::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> data(numcore::shape_numel(shape));
    for (auto& v : data) v = u(rng);
    return Tensor64(std::move(shape), std::move(data));
}

} // namespace adlraw::testing
