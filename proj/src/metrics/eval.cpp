#include "adlraw/metrics/eval.hpp"

#include "adlraw/metrics/quality.hpp"
#include "adlraw/modnet/batch.hpp"

#include <algorithm>

namespace adlraw::metrics {

namespace {

void finish(EvalReport& r) {
    r.count = r.psnr.size();
    double acc = 0.0;
    for (double v : r.psnr) acc += v;
    r.mean_psnr = r.count ? acc / static_cast<double>(r.count) : 0.0;
    acc = 0.0;
    for (double v : r.ssim) acc += v;
    r.mean_ssim = r.ssim.empty() ? 0.0 : acc / static_cast<double>(r.ssim.size());
}

} // namespace

MetaProvider pair_meta(std::size_t n_sensors, modnet::MetadataMask mask) {
    return [n_sensors, mask](const sensorsim::SamplePair& p) { return modnet::pair_metadata(p, n_sensors, mask); };
}

EvalReport eval_model(const modnet::Denoiser& model, std::span<const sensorsim::SamplePair* const> pairs,
                      const MetaProvider& meta, const EvalOptions& options) {
    if (pairs.empty()) throw ContractViolation("eval_model: empty dataset");
    const std::size_t n = model.config().n_sensors;
    for (const auto* p : pairs) {
        if (p->sensor_id < 0 || static_cast<std::size_t>(p->sensor_id) >= n) {
            throw ContractViolation("eval_model: sensor " + std::to_string(p->sensor_id) +
                                    " is outside the model's " + std::to_string(n) + "-sensor space");
        }
    }
    EvalReport report;
    const std::size_t chunk = std::max<std::size_t>(1, options.chunk);
    for (std::size_t start = 0; start < pairs.size(); start += chunk) {
        const std::size_t end = std::min(pairs.size(), start + chunk);
        auto part = pairs.subspan(start, end - start);
        auto batch = modnet::make_batch(part, n);
        std::vector<modnet::MetadataVector> rows;
        for (const auto* p : part) rows.push_back(meta(*p));
        batch.meta = modnet::stack_metadata(rows);
        auto tape = numcore::Tape::inference();
        auto out = model.forward(tape, batch.noisy, batch.meta);
        for (std::size_t i = 0; i < part.size(); ++i) {
            auto pred = modnet::slice_item(out, i);
            report.psnr.push_back(psnr(pred, part[i]->clean));
            if (options.with_ssim) report.ssim.push_back(ssim(pred, part[i]->clean));
        }
    }
    finish(report);
    return report;
}

EvalReport eval_model(const modnet::Denoiser& model, const sensorsim::DomainDataset& dataset,
                      const MetaProvider& meta, const EvalOptions& options) {
    std::vector<const sensorsim::SamplePair*> ptrs;
    for (const auto& p : dataset.pairs) ptrs.push_back(&p);
    return eval_model(model, ptrs, meta, options);
}

EvalReport eval_passthrough(const sensorsim::DomainDataset& dataset, bool with_ssim) {
    if (dataset.pairs.empty()) throw ContractViolation("eval_passthrough: empty dataset");
    EvalReport report;
    for (const auto& p : dataset.pairs) {
        report.psnr.push_back(psnr(p.noisy, p.clean));
        if (with_ssim) report.ssim.push_back(ssim(p.noisy, p.clean));
    }
    finish(report);
    return report;
}

} // namespace adlraw::metrics
