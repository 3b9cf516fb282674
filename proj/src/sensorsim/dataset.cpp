#include "adlraw/sensorsim/dataset.hpp"

#include "adlraw/sensorsim/scene.hpp"

#include <algorithm>
#include <random>

namespace adlraw::sensorsim {

std::string_view to_string(Split split) {
    switch (split) {
    case Split::adaptation: return "adaptation";
    case Split::test: return "test";
    case Split::source: return "source";
    }
    return "source";
}

Split parse_split(std::string_view text) {
    for (auto s : {Split::adaptation, Split::test, Split::source}) {
        if (to_string(s) == text) return s;
    }
    throw ContractViolation("unknown split '" + std::string(text) + "'");
}

void DomainDataset::validate() const {
    if (pairs.empty()) throw ContractViolation("domain dataset is empty");
    const auto& shape = pairs.front().noisy.shape();
    for (const auto& p : pairs) {
        if (p.sensor_id != sensor_id) {
            throw ContractViolation("domain dataset for sensor " + std::to_string(sensor_id) +
                                    " holds a pair from sensor " + std::to_string(p.sensor_id));
        }
        if (p.noisy.shape() != shape || p.clean.shape() != shape) {
            throw ContractViolation("domain dataset pairs have inconsistent shapes");
        }
    }
}

DomainDataset DomainDataset::head(std::size_t count) const {
    if (count > pairs.size()) {
        throw ContractViolation("head(" + std::to_string(count) + ") of a dataset with " +
                                std::to_string(pairs.size()) + " pairs");
    }
    DomainDataset out{sensor_id, split, {}};
    out.pairs.assign(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(count));
    return out;
}

DomainDataset build_domain(const SensorProfile& profile, const DomainSpec& spec, std::uint64_t seed) {
    profile.validate();
    if (spec.count < 1) throw ContractViolation("build_domain: count must be >= 1");
    if (spec.patch < 1) throw ContractViolation("build_domain: patch size must be >= 1");
    const std::vector<int>& isos = spec.isos.empty() ? profile.iso_set : spec.isos;
    for (int iso : isos) {
        if (!profile.supports(iso)) {
            throw ContractViolation("build_domain: ISO " + std::to_string(iso) + " not in the ISO set of " +
                                    profile.name);
        }
    }
    if (spec.light_factors.empty()) throw ContractViolation("build_domain: no light factors given");
    for (double lf : spec.light_factors) {
        if (!(lf >= 1.0)) throw ContractViolation("build_domain: light factors must be >= 1");
    }

    DomainDataset out{profile.sensor_id, spec.split, {}};
    out.pairs.reserve(spec.count);
    const std::size_t side = spec.patch * 2;
    for (std::size_t i = 0; i < spec.count; ++i) {
        const std::uint64_t pair_seed = mix_seed(mix_seed(seed, static_cast<std::uint64_t>(profile.sensor_id)), i);
        std::mt19937_64 rng(pair_seed);
        const std::uint64_t scene_seed = rng();
        const int iso = isos[rng() % isos.size()];
        const double lf = spec.light_factors[rng() % spec.light_factors.size()];
        const Tensor clean = render_clean_scene(scene_seed, side, side, profile.layout);
        const Tensor noisy = apply_noise(clean, profile, iso, lf, rng);
        out.pairs.push_back(SamplePair{pack_bayer(noisy), pack_bayer(clean), profile.sensor_id, iso,
                                       static_cast<float>(lf), scene_seed});
    }
    return out;
}

DomainDataset make_harmful1(const DomainDataset& base, double sigma, std::uint64_t seed) {
    base.validate();
    if (!(sigma > 0.0)) throw ContractViolation("make_harmful1: sigma must be positive");
    const double std_norm = sigma / 255.0;
    DomainDataset out{base.sensor_id, Split::source, {}};
    std::mt19937_64 rng(mix_seed(seed, 0x4a2f1));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const auto& p : base.pairs) {
        const auto src = p.clean.data();
        std::vector<float> bright(src.size());
        std::vector<float> noisy(src.size());
        for (std::size_t i = 0; i < src.size(); ++i) {
            // Concave lift: maps [0,1] onto [0,1] with a much higher mean.
            const double c = 1.0 - (1.0 - static_cast<double>(src[i])) * (1.0 - static_cast<double>(src[i]));
            bright[i] = static_cast<float>(c);
            noisy[i] = std::clamp(static_cast<float>(c + std_norm * normal(rng)), kNoisyMin, kNoisyMax);
        }
        out.pairs.push_back(SamplePair{Tensor(p.clean.shape(), std::move(noisy)),
                                       Tensor(p.clean.shape(), std::move(bright)), p.sensor_id, p.iso, 1.0f,
                                       p.scene_seed});
    }
    return out;
}

DomainDataset make_harmful2(const DomainDataset& base, HarmfulMode mode, std::uint64_t seed,
                            float black_value) {
    base.validate();
    DomainDataset out{base.sensor_id, Split::source, {}};
    const std::size_t n = base.pairs.size();
    if (mode == HarmfulMode::shuffled_gt) {
        if (n < 2) throw ContractViolation("make_harmful2: shuffled targets need at least 2 pairs");
        // Sattolo's algorithm yields a single n-cycle, so no element stays put.
        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        std::mt19937_64 rng(mix_seed(seed, 0x5a770));
        for (std::size_t i = n - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(rng() % i);
            std::swap(perm[i], perm[j]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            SamplePair p = base.pairs[i];
            p.clean = base.pairs[perm[i]].clean;
            out.pairs.push_back(std::move(p));
        }
    } else {
        for (const auto& src : base.pairs) {
            SamplePair p = src;
            p.clean = Tensor::full(src.clean.shape(), black_value);
            out.pairs.push_back(std::move(p));
        }
    }
    return out;
}

} // namespace adlraw::sensorsim
