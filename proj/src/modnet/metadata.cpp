#include "adlraw/modnet/metadata.hpp"

#include "adlraw/sensorsim/profile.hpp"

#include <algorithm>
#include <string>

namespace adlraw::modnet {

MetadataVector MetadataVector::make(std::size_t n_sensors, int sensor_id, int iso) {
    if (n_sensors == 0) throw ContractViolation("metadata needs at least one sensor");
    if (sensor_id < 0 || static_cast<std::size_t>(sensor_id) >= n_sensors) {
        throw ContractViolation("sensor id " + std::to_string(sensor_id) + " outside the one-hot space of " +
                                std::to_string(n_sensors) + " sensors");
    }
    if (iso <= 0 || iso > sensorsim::kMaxIso) {
        throw ContractViolation("ISO " + std::to_string(iso) + " outside (0, " +
                                std::to_string(sensorsim::kMaxIso) + "]");
    }
    MetadataVector m;
    m.p.assign(n_sensors, 0.0f);
    m.p[static_cast<std::size_t>(sensor_id)] = 1.0f;
    m.s.assign(n_sensors, static_cast<float>(iso) / static_cast<float>(sensorsim::kMaxIso));
    return m;
}

std::vector<float> MetadataVector::concat() const {
    std::vector<float> out(p);
    out.insert(out.end(), s.begin(), s.end());
    return out;
}

void MetadataVector::validate(bool allow_masked) const {
    if (p.empty() || p.size() != s.size()) throw ContractViolation("metadata halves must have equal, nonzero length");
    int ones = 0;
    for (float v : p) {
        if (v == 1.0f) ++ones;
        else if (v != 0.0f) throw ContractViolation("sensor one-hot holds a value other than 0/1");
    }
    if (ones != 1 && !(allow_masked && ones == 0)) throw ContractViolation("sensor one-hot must hold exactly one 1");
    for (float v : s) {
        if (v != s.front()) throw ContractViolation("ISO half of metadata must be constant");
    }
    const bool in_range = s.front() > 0.0f && s.front() <= 1.0f;
    if (!in_range && !(allow_masked && s.front() == 0.0f)) {
        throw ContractViolation("normalized ISO must lie in (0, 1]");
    }
}

MetadataVector MetadataMask::apply(MetadataVector meta) const {
    if (!use_type) std::fill(meta.p.begin(), meta.p.end(), 0.0f);
    if (!use_iso) std::fill(meta.s.begin(), meta.s.end(), 0.0f);
    return meta;
}

numcore::Tensor stack_metadata(std::span<const MetadataVector> rows) {
    if (rows.empty()) throw ContractViolation("stack_metadata: no rows");
    const std::size_t width = rows.front().p.size() * 2;
    std::vector<float> data;
    data.reserve(rows.size() * width);
    for (const auto& r : rows) {
        if (r.p.size() * 2 != width || r.s.size() * 2 != width) {
            throw ContractViolation("stack_metadata: rows have different sensor counts");
        }
        data.insert(data.end(), r.p.begin(), r.p.end());
        data.insert(data.end(), r.s.begin(), r.s.end());
    }
    return numcore::Tensor({rows.size(), width}, std::move(data));
}

} // namespace adlraw::modnet
