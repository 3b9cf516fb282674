#include "adlraw/modnet/batch.hpp"

#include <algorithm>

namespace adlraw::modnet {

MetadataVector pair_metadata(const sensorsim::SamplePair& pair, std::size_t n_sensors, const MetadataMask& mask) {
    return mask.apply(MetadataVector::make(n_sensors, pair.sensor_id, pair.iso));
}

Batch make_batch(std::span<const sensorsim::SamplePair* const> pairs, std::size_t n_sensors,
                 const MetadataMask& mask) {
    if (pairs.empty()) throw ContractViolation("make_batch: no pairs");
    const numcore::Shape item = pairs.front()->noisy.shape();
    if (item.size() != 3) throw ContractViolation("make_batch: pairs must be C x h x w, got " + numcore::shape_str(item));
    const std::size_t per = numcore::shape_numel(item);
    std::vector<float> noisy, clean;
    noisy.reserve(per * pairs.size());
    clean.reserve(per * pairs.size());
    std::vector<MetadataVector> meta;
    meta.reserve(pairs.size());
    for (const auto* p : pairs) {
        if (p->noisy.shape() != item || p->clean.shape() != item) {
            throw ContractViolation("make_batch: pair shape " + numcore::shape_str(p->noisy.shape()) +
                                    " differs from " + numcore::shape_str(item));
        }
        noisy.insert(noisy.end(), p->noisy.data().begin(), p->noisy.data().end());
        clean.insert(clean.end(), p->clean.data().begin(), p->clean.data().end());
        meta.push_back(pair_metadata(*p, n_sensors, mask));
    }
    numcore::Shape shape{pairs.size(), item[0], item[1], item[2]};
    return Batch{numcore::Tensor(shape, std::move(noisy)), numcore::Tensor(shape, std::move(clean)),
                 stack_metadata(meta)};
}

numcore::Tensor slice_item(const numcore::Tensor& batch, std::size_t i) {
    if (batch.rank() != 4 || i >= batch.dim(0)) throw ContractViolation("slice_item: index out of range");
    numcore::Shape shape{batch.dim(1), batch.dim(2), batch.dim(3)};
    const std::size_t per = numcore::shape_numel(shape);
    auto src = batch.data().subspan(i * per, per);
    return numcore::Tensor(shape, std::vector<float>(src.begin(), src.end()));
}

} // namespace adlraw::modnet
