#include "../support/fixtures.hpp"
#include "../support/metric_oracles.hpp"

#include "adlraw/metrics/eval.hpp"
#include "adlraw/metrics/quality.hpp"

#include <cstdio>
#include <random>

#include <doctest.h>

using namespace adlraw;
using namespace adlraw::metrics;
using numcore::Tensor;

namespace {

Tensor random_image(numcore::Shape shape, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::vector<float> d(numcore::shape_numel(shape));
    for (auto& v : d) v = u(rng);
    return Tensor(std::move(shape), std::move(d));
}

Tensor add_noise(const Tensor& t, double sigma, std::mt19937_64& rng) {
    std::normal_distribution<float> n(0.0f, static_cast<float>(sigma));
    std::vector<float> d(t.data().begin(), t.data().end());
    for (auto& v : d) v += n(rng);
    return Tensor(t.shape(), std::move(d));
}

} // namespace

TEST_CASE("psnr") {
    std::mt19937_64 rng(1);
    const auto a = random_image({4, 16, 16}, rng);
    CHECK(psnr(a, a) == kPsnrCap);
    CHECK(psnr(a, a, 1.0, 60.0) == 60.0);

    const auto x = Tensor::full({4, 8, 8}, 0.5f), y = Tensor::full({4, 8, 8}, 0.6f);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", psnr(x, y));
    CHECK(std::string(buf) == "20.0000");

    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_image({4, 12, 10}, rng), q = random_image({4, 12, 10}, rng);
        CHECK(std::abs(psnr(p, q) - testing::psnr_direct(p, q)) < 1e-9);
        CHECK(std::abs(psnr(p, q, 2.0) - testing::psnr_direct(p, q, 2.0)) < 1e-9);
    }
    CHECK_THROWS_AS(psnr(a, random_image({4, 16, 15}, rng)), ContractViolation);
    CHECK_THROWS_AS(psnr(a, a, 0.0), ContractViolation);
}

TEST_CASE("psnr falls as noise grows") {
    std::mt19937_64 rng(2);
    double previous = 1e9;
    for (double sigma : {0.01, 0.02, 0.05, 0.1}) {
        double acc = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const auto a = random_image({4, 8, 8}, rng);
            acc += psnr(a, add_noise(a, sigma, rng));
        }
        const double mean = acc / 100.0;
        CHECK(mean < previous);
        previous = mean;
    }
}

TEST_CASE("ssim") {
    std::mt19937_64 rng(3);
    SUBCASE("identical images") {
        const auto a = random_image({4, 16, 16}, rng);
        CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("constant images reduce to the luminance term") {
        const auto a = Tensor::full({2, 12, 12}, 0.2f), b = Tensor::full({2, 12, 12}, 0.7f);
        const double ma = 0.2f, mb = 0.7f, c1 = 1e-4;
        const double expected = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        CHECK(ssim(a, b) < 1.0);
        CHECK(std::abs(ssim(a, b) - expected) < 1e-9);
    }
    SUBCASE("symmetric and matches the direct window sum") {
        for (int trial = 0; trial < 100; ++trial) {
            const auto a = random_image({2, 13, 14}, rng);
            const auto b = add_noise(a, 0.1, rng);
            CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-9);
            CHECK(std::abs(ssim(a, b) - testing::ssim_direct(a, b)) < 1e-6);
        }
    }
    SUBCASE("undersized input") {
        const auto a = random_image({4, 10, 16}, rng);
        CHECK_THROWS_AS(ssim(a, a), ContractViolation);
    }
}

TEST_CASE("error maps") {
    std::mt19937_64 rng(4);
    const auto a = random_image({4, 6, 6}, rng), b = random_image({4, 6, 6}, rng);
    const auto zero = error_map(a, a);
    for (float v : zero.data()) CHECK(v == 0.0f);
    const auto e = error_map(a, b);
    double sum = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < e.numel(); ++i) {
        sum += e.at(i);
        l1 += std::abs(static_cast<double>(a.at(i)) - b.at(i));
    }
    CHECK(sum == doctest::Approx(l1).epsilon(1e-6));
    const auto n = normalize_map(e);
    float hi = 0.0f;
    for (float v : n.data()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
        hi = std::max(hi, v);
    }
    CHECK(hi == 1.0f);
    const auto zero_norm = normalize_map(zero);
    for (float v : zero_norm.data()) CHECK(v == 0.0f);
}

TEST_CASE("eval_model") {
    const auto d = testing::small_domain(2, 5, 16, 8, sensorsim::Split::test);
    const modnet::Denoiser identity(testing::tiny_config(), 1);
    const auto meta = pair_meta(5);

    SUBCASE("zero residual scores like the noisy inputs") {
        const auto r = eval_model(identity, d, meta);
        const auto p = eval_passthrough(d);
        CHECK(r.count == 5);
        CHECK(r.psnr.size() == 5);
        CHECK(r.ssim.size() == 5);
        for (std::size_t i = 0; i < 5; ++i) CHECK(r.psnr[i] == p.psnr[i]);
        CHECK(r.mean_psnr == p.mean_psnr);
        double acc = 0.0;
        for (double v : r.psnr) acc += v;
        CHECK(r.mean_psnr == acc / 5.0);
    }
    SUBCASE("singleton dataset") {
        const auto r = eval_model(identity, d.head(1), meta);
        CHECK(r.mean_psnr == r.psnr[0]);
        CHECK(r.mean_ssim == r.ssim[0]);
    }
    SUBCASE("chunking and repetition do not change the report") {
        modnet::Denoiser m(testing::tiny_config(), 2);
        std::mt19937_64 rng(5);
        for (auto& p : m.parameters())
            for (auto& v : p.mutable_data()) v *= 0.5f + std::uniform_real_distribution<float>(0, 1)(rng);
        for (auto& v : m.decoder[2].weight.mutable_data()) v = 0.01f;
        const auto r1 = eval_model(m, d, meta, {true, 1});
        const auto r2 = eval_model(m, d, meta, {true, 8});
        const auto r3 = eval_model(m, d, meta, {true, 8});
        CHECK(r1.psnr == r2.psnr);
        CHECK(r2.psnr == r3.psnr);
        CHECK(r2.ssim == r3.ssim);
    }
    SUBCASE("without ssim") {
        const auto r = eval_model(identity, d, meta, {false, 8});
        CHECK(r.ssim.empty());
        CHECK(r.mean_ssim == 0.0);
    }
    SUBCASE("errors") {
        sensorsim::DomainDataset empty;
        CHECK_THROWS_AS(eval_model(identity, empty, meta), ContractViolation);
        const modnet::Denoiser small(testing::tiny_config(2), 1);
        CHECK_THROWS_AS(eval_model(small, d, pair_meta(2)), ContractViolation);
    }
}
