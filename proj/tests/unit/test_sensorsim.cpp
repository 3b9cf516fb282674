#include "../support/fixtures.hpp"
#include "../support/noise_suite.hpp"

#include "adlraw/metrics/quality.hpp"
#include "adlraw/sensorsim/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <doctest.h>

using namespace adlraw;
using namespace adlraw::sensorsim;

namespace {

bool same_bytes(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

bool same_dataset(const DomainDataset& a, const DomainDataset& b) {
    if (a.sensor_id != b.sensor_id || a.split != b.split || a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto &p = a.pairs[i], &q = b.pairs[i];
        if (p.iso != q.iso || p.light_factor != q.light_factor || p.scene_seed != q.scene_seed ||
            p.sensor_id != q.sensor_id || !same_bytes(p.noisy, q.noisy) || !same_bytes(p.clean, q.clean))
            return false;
    }
    return true;
}

SensorProfile noiseless() {
    SensorProfile p;
    p.name = "noiseless";
    p.base_gain = 1e-300;
    p.iso_set = {100};
    return p;
}

} // namespace

TEST_CASE("clean scenes") {
    SUBCASE("deterministic and in range") {
        const auto a = render_clean_scene(42, 32, 48);
        const auto b = render_clean_scene(42, 32, 48);
        CHECK(same_bytes(a, b));
        CHECK(a.shape() == numcore::Shape{32, 48});
        for (float v : a.data()) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
        CHECK_FALSE(same_bytes(a, render_clean_scene(43, 32, 48)));
    }
    SUBCASE("mean over 1000 seeds is mid-grey") {
        double total = 0.0;
        for (std::uint64_t s = 0; s < 1000; ++s) {
            const auto img = render_clean_scene(s, 32, 32);
            double m = 0.0;
            for (float v : img.data()) m += v;
            total += m / static_cast<double>(img.numel());
        }
        const double mean = total / 1000.0;
        CHECK(mean >= 0.35);
        CHECK(mean <= 0.65);
    }
    SUBCASE("odd dimensions throw") {
        CHECK_THROWS_AS(render_clean_scene(1, 31, 32), ContractViolation);
        CHECK_THROWS_AS(render_clean_scene(1, 32, 33), ContractViolation);
    }
}

TEST_CASE("apply_noise") {
    SUBCASE("zero-noise limit reproduces the clean image") {
        const auto clean = render_clean_scene(5, 16, 16);
        std::mt19937_64 rng(1);
        const auto noisy = apply_noise(clean, noiseless(), 100, 1.0, rng);
        for (std::size_t i = 0; i < clean.numel(); ++i) CHECK(noisy.at(i) == doctest::Approx(clean.at(i)).epsilon(1e-6));
    }
    SUBCASE("variance at I=0.5, K=0.01, read 0.02 is 0.0054") {
        auto settings = testing::noise_settings();
        const auto m = testing::measure_noise(settings[0], 1'000'000, 99);
        CHECK(m.model_variance == doctest::Approx(0.0054).epsilon(1e-12));
        CHECK(std::abs(m.variance - 0.0054) / 0.0054 < 0.05);
        CHECK(std::abs(m.mean_bias) < m.bias_bound);
    }
    SUBCASE("doubling ISO doubles the signal-dependent part") {
        auto settings = testing::noise_settings();
        const auto lo = testing::measure_noise(settings[0], 1'000'000, 7);
        const auto hi = testing::measure_noise(settings[1], 1'000'000, 8);
        const double read = 0.02 * 0.02;
        const double ratio = (hi.variance - read) / (lo.variance - read);
        CHECK(std::abs(ratio - 2.0) / 2.0 < 0.05);
    }
    SUBCASE("light factor scales the underexposed capture back up") {
        SensorProfile p = noiseless();
        p.black_level = 0.01;
        const auto clean = Tensor::full({4, 4}, 0.6f);
        std::mt19937_64 rng(3);
        const auto noisy = apply_noise(clean, p, 100, 100.0, rng);
        // 100 * (0.6 / 100 + 0.01) = 1.6
        CHECK(noisy.at(0) == doctest::Approx(1.6).epsilon(1e-5));
    }
    SUBCASE("output is clamped") {
        SensorProfile p = noiseless();
        p.black_level = 0.2;
        std::mt19937_64 rng(3);
        const auto noisy = apply_noise(Tensor::full({2, 2}, 1.0f), p, 100, 300.0, rng);
        for (float v : noisy.data()) CHECK(v == kNoisyMax);
    }
    SUBCASE("fixed pattern is static across captures") {
        SensorProfile p = noiseless();
        p.fpn_amplitude = 0.05;
        p.fpn_seed = 77;
        std::mt19937_64 r1(1), r2(2);
        const auto clean = Tensor::full({8, 8}, 0.5f);
        CHECK(same_bytes(apply_noise(clean, p, 100, 1.0, r1), apply_noise(clean, p, 100, 1.0, r2)));
        CHECK(fixed_pattern_value(77, 3, 4) == fixed_pattern_value(77, 3, 4));
        CHECK(fixed_pattern_value(77, 3, 4) != fixed_pattern_value(78, 3, 4));
    }
    SUBCASE("preconditions") {
        const auto fleet = fleet_preset("default5");
        std::mt19937_64 rng(1);
        const auto clean = Tensor::full({4, 4}, 0.5f);
        CHECK_THROWS_AS(apply_noise(clean, fleet.profiles[0], 200, 1.0, rng), ContractViolation);
        CHECK_THROWS_AS(apply_noise(clean, fleet.profiles[0], 100, 0.5, rng), ContractViolation);
    }
}

TEST_CASE("Bayer packing") {
    SUBCASE("single tile") {
        const auto packed = pack_bayer(Tensor({2, 2}, {1, 2, 3, 4}));
        CHECK(packed.shape() == numcore::Shape{4, 1, 1});
        for (std::size_t c = 0; c < 4; ++c) CHECK(packed.at(c) == static_cast<float>(c + 1));
    }
    SUBCASE("round trip for every layout") {
        for (auto layout : {BayerLayout::rggb, BayerLayout::bggr, BayerLayout::grbg, BayerLayout::gbrg}) {
            const auto mosaic = render_clean_scene(9, 16, 20, layout);
            const auto packed = pack_bayer(mosaic);
            CHECK(packed.shape() == numcore::Shape{4, 8, 10});
            CHECK(same_bytes(unpack_bayer(packed), mosaic));
        }
    }
    SUBCASE("constant image gives constant channels") {
        const auto packed = pack_bayer(Tensor::full({6, 6}, 0.25f));
        for (float v : packed.data()) CHECK(v == 0.25f);
    }
    SUBCASE("odd dimensions throw") { CHECK_THROWS_AS(pack_bayer(Tensor::full({3, 4}, 0.0f)), ContractViolation); }
    SUBCASE("layout names round trip") {
        for (auto layout : {BayerLayout::rggb, BayerLayout::bggr, BayerLayout::grbg, BayerLayout::gbrg})
            CHECK(parse_layout(to_string(layout)) == layout);
        CHECK_THROWS_AS(parse_layout("xyzw"), ContractViolation);
    }
}

TEST_CASE("fleet presets") {
    const auto fleet = fleet_preset("default5");
    CHECK(fleet.profiles.size() == 5);
    std::set<BayerLayout> layouts;
    for (std::size_t i = 0; i < fleet.profiles.size(); ++i) {
        const auto& p = fleet.profiles[i];
        CHECK(p.sensor_id == static_cast<int>(i));
        CHECK_NOTHROW(p.validate());
        for (int iso : p.iso_set) CHECK(p.gain(iso) > 0.0);
        CHECK(p.gain(400) == doctest::Approx(4.0 * p.base_gain));
        layouts.insert(p.layout);
    }
    CHECK(layouts.size() == 4);
    const auto low = fleet_preset("lowlight4");
    CHECK(low.profiles.size() == 4);
    CHECK(low.light_factors == std::vector<double>{100.0, 300.0});
    CHECK_THROWS_AS(fleet_preset("nope"), ContractViolation);

    SensorProfile bad;
    bad.black_level = 0.3;
    CHECK_THROWS_AS(bad.validate(), ContractViolation);
}

TEST_CASE("build_domain") {
    const auto a = testing::small_domain(1, 20, 8, 5);
    CHECK(a.size() == 20);
    CHECK(same_dataset(a, testing::small_domain(1, 20, 8, 5)));
    CHECK_NOTHROW(a.validate());
    const auto profile = fleet_preset("default5").profiles[1];
    std::set<std::uint64_t> seeds;
    for (const auto& p : a.pairs) {
        CHECK(profile.supports(p.iso));
        CHECK(p.noisy.shape() == numcore::Shape{4, 8, 8});
        CHECK(p.sensor_id == 1);
        seeds.insert(p.scene_seed);
        for (float v : p.clean.data()) CHECK((v >= 0.0f && v <= 1.0f));
        for (float v : p.noisy.data()) CHECK((v >= kNoisyMin && v <= kNoisyMax));
    }
    CHECK(seeds.size() == 20);

    DomainSpec spec;
    spec.count = 40;
    spec.patch = 8;
    spec.isos = {400};
    spec.light_factors = {100.0, 300.0};
    const auto b = build_domain(profile, spec, 3);
    std::set<float> lfs;
    for (const auto& p : b.pairs) {
        CHECK(p.iso == 400);
        lfs.insert(p.light_factor);
    }
    CHECK(lfs == std::set<float>{100.0f, 300.0f});

    spec.count = 0;
    CHECK_THROWS_AS(build_domain(profile, spec, 3), ContractViolation);
    spec.count = 2;
    spec.isos = {200};
    CHECK_THROWS_AS(build_domain(profile, spec, 3), ContractViolation);
}

TEST_CASE("harmful1") {
    const auto base = testing::small_domain(0, 16, 16, 1);
    SUBCASE("noise level is sigma / 255") {
        const auto h = make_harmful1(base, 30.0, 2);
        double mean_clean = 0.0, mean_base = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            const auto& p = h.pairs[i];
            CHECK(p.light_factor == 1.0f);
            for (std::size_t j = 0; j < p.noisy.numel(); ++j) {
                mean_clean += p.clean.at(j);
                mean_base += base.pairs[i].clean.at(j);
            }
        }
        CHECK(mean_clean > mean_base);
        CHECK(30.0 / 255.0 == doctest::Approx(0.1176).epsilon(1e-3));
        // 10^6 samples
        std::vector<double> diffs;
        for (std::uint64_t s = 0; diffs.size() < 1'000'000; ++s) {
            const auto hh = make_harmful1(base, 30.0, 100 + s);
            for (const auto& p : hh.pairs)
                for (std::size_t j = 0; j < p.noisy.numel(); ++j)
                    diffs.push_back(static_cast<double>(p.noisy.at(j)) - p.clean.at(j));
        }
        double m = 0.0;
        for (double d : diffs) m += d;
        m /= static_cast<double>(diffs.size());
        double v = 0.0;
        for (double d : diffs) v += (d - m) * (d - m);
        const double std_dev = std::sqrt(v / static_cast<double>(diffs.size() - 1));
        CHECK(std::abs(std_dev - 30.0 / 255.0) / (30.0 / 255.0) < 0.02);
    }
    SUBCASE("sigma near zero leaves pairs clean") {
        const auto h = make_harmful1(base, 1e-12, 2);
        for (const auto& p : h.pairs)
            for (std::size_t j = 0; j < p.noisy.numel(); ++j) CHECK(p.noisy.at(j) == doctest::Approx(p.clean.at(j)));
    }
    SUBCASE("invalid sigma throws") { CHECK_THROWS_AS(make_harmful1(base, 0.0, 1), ContractViolation); }
}

TEST_CASE("harmful2") {
    const auto base = testing::small_domain(2, 16, 16, 4);
    SUBCASE("shuffled targets form a derangement") {
        const auto h = make_harmful2(base, HarmfulMode::shuffled_gt, 9);
        REQUIRE(h.size() == base.size());
        std::vector<double> psnrs;
        for (std::size_t i = 0; i < h.size(); ++i) {
            CHECK(same_bytes(h.pairs[i].noisy, base.pairs[i].noisy));
            CHECK_FALSE(same_bytes(h.pairs[i].clean, base.pairs[i].clean));
            bool from_base = false;
            for (const auto& q : base.pairs) from_base = from_base || same_bytes(h.pairs[i].clean, q.clean);
            CHECK(from_base);
            psnrs.push_back(metrics::psnr(h.pairs[i].noisy, h.pairs[i].clean));
        }
        std::sort(psnrs.begin(), psnrs.end());
        CHECK(psnrs[psnrs.size() / 2] < 15.0);
    }
    SUBCASE("black targets are constant") {
        const auto h = make_harmful2(base, HarmfulMode::black_gt, 9);
        for (const auto& p : h.pairs)
            for (float v : p.clean.data()) CHECK(v == 0.0f);
        const auto g = make_harmful2(base, HarmfulMode::black_gt, 9, 0.05f);
        CHECK(g.pairs[0].clean.at(0) == 0.05f);
    }
    SUBCASE("single pair cannot be deranged") {
        CHECK_THROWS_AS(make_harmful2(base.head(1), HarmfulMode::shuffled_gt, 1), ContractViolation);
    }
}

TEST_CASE("dataset validation") {
    auto d = testing::small_domain(0, 3, 8, 1);
    d.pairs[1].sensor_id = 3;
    CHECK_THROWS_AS(d.validate(), ContractViolation);
    DomainDataset empty;
    CHECK_THROWS_AS(empty.validate(), ContractViolation);
    CHECK(parse_split(to_string(Split::adaptation)) == Split::adaptation);
    CHECK(parse_split(to_string(Split::test)) == Split::test);
}

TEST_CASE("dataset files") {
    const auto dir = testing::scratch_dir("dataset_io");
    const auto profile = fleet_preset("default5").profiles[3];
    const auto d = testing::small_domain(3, 5, 8, 12, Split::test);
    const auto path = dir / "d.adlraw";
    write_dataset(path, d, profile);

    SUBCASE("round trip") {
        const auto f = read_dataset(path);
        CHECK(same_dataset(f.dataset, d));
        const auto p2 = profile_from_json(f.metadata.at("profile"));
        CHECK(p2.base_gain == profile.base_gain);
        CHECK(p2.layout == profile.layout);
        CHECK(p2.iso_set == profile.iso_set);
    }
    SUBCASE("file size follows the format") {
        const auto f = read_dataset(path);
        const std::size_t meta_bytes = f.metadata.dump().size();
        const std::size_t header = 8 + 6 * 4;
        const std::size_t per_pair = 4 + 4 + 8 + 2 * 4 * 8 * 8 * 4;
        const std::size_t expected = header + 5 * per_pair + 4 + meta_bytes;
        CHECK(std::filesystem::file_size(path) == expected);
        CHECK(dataset_file_size(5, 8, 8, meta_bytes) == expected);
    }
    SUBCASE("corrupt magic") {
        {
            std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
            f.seekp(0);
            f.write("XXXX", 4);
        }
        try {
            read_dataset(path);
            FAIL("expected a parse error");
        } catch (const DatasetParseError& e) {
            CHECK(e.kind() == ParseErrorKind::bad_magic);
        }
    }
    SUBCASE("truncated file") {
        std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2);
        try {
            read_dataset(path);
            FAIL("expected a parse error");
        } catch (const DatasetParseError& e) {
            CHECK(e.kind() == ParseErrorKind::truncated);
        }
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(read_dataset(dir / "missing.adlraw"), IoError); }
}
