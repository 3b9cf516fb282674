#include "../support/fixtures.hpp"
#include "../support/gradcheck.hpp"

#include "adlraw/modnet/batch.hpp"
#include "adlraw/modnet/checkpoint.hpp"
#include "adlraw/numcore/optim.hpp"

#include <fstream>

#include <doctest.h>

using namespace adlraw;
using namespace adlraw::modnet;
using numcore::Shape;
using numcore::Tape;
using numcore::Tensor;

namespace {

Tensor meta_rows(std::size_t n, std::initializer_list<std::pair<int, int>> sensor_iso) {
    std::vector<MetadataVector> rows;
    for (auto [s, iso] : sensor_iso) rows.push_back(MetadataVector::make(n, s, iso));
    return stack_metadata(rows);
}

Tensor random_input(std::size_t n, std::size_t side, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> u(-0.1f, 1.2f);
    std::vector<float> d(n * 4 * side * side);
    for (auto& v : d) v = u(rng);
    return Tensor({n, 4, side, side}, std::move(d));
}

void randomize(Denoiser& model, std::mt19937_64& rng, float scale) {
    std::uniform_real_distribution<float> u(-scale, scale);
    for (auto& p : model.parameters())
        for (auto& v : p.mutable_data()) v = u(rng);
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

} // namespace

TEST_CASE("metadata vectors") {
    const auto m = MetadataVector::make(5, 2, 1600);
    CHECK(m.p == std::vector<float>{0, 0, 1, 0, 0});
    for (float v : m.s) CHECK(v == 0.5f);
    CHECK(m.concat().size() == 10);
    CHECK_NOTHROW(m.validate());
    CHECK(MetadataVector::make(5, 0, 3200).s[0] == 1.0f);
    CHECK_THROWS_AS(MetadataVector::make(5, 5, 100), ContractViolation);
    CHECK_THROWS_AS(MetadataVector::make(5, 0, 6400), ContractViolation);
    CHECK_THROWS_AS(MetadataVector::make(5, 0, 0), ContractViolation);

    const auto no_type = MetadataMask{false, true}.apply(m);
    for (float v : no_type.p) CHECK(v == 0.0f);
    CHECK(no_type.s == m.s);
    CHECK_THROWS_AS(no_type.validate(), ContractViolation);
    CHECK_NOTHROW(no_type.validate(true));
    const auto no_iso = MetadataMask{true, false}.apply(m);
    for (float v : no_iso.s) CHECK(v == 0.0f);
    CHECK(no_iso.p == m.p);

    const auto t = meta_rows(3, {{0, 100}, {2, 400}});
    CHECK(t.shape() == Shape{2, 6});
    CHECK(t.at(6 + 2) == 1.0f);
    CHECK(t.at(6 + 3) == 0.125f);
}

TEST_CASE("modulation parameters") {
    const DenoiserConfig cfg = testing::tiny_config();
    SUBCASE("zero MLPs give gamma 1 and beta 0") {
        Denoiser model(cfg, 1);
        model.zero_modulation();
        Tape tape(false);
        const auto meta = meta_rows(5, {{1, 400}, {3, 3200}});
        for (std::size_t s = 0; s < kStages; ++s) {
            auto [g, b] = model.modulation_params(tape, meta, s);
            CHECK(g.shape() == Shape{2, cfg.widths[s]});
            for (float v : g.data()) CHECK(v == 1.0f);
            for (float v : b.data()) CHECK(v == 0.0f);
        }
    }
    SUBCASE("gamma stays inside (0, 2) for large random weights") {
        std::mt19937_64 rng(4);
        Tape tape(false);
        const auto meta = meta_rows(5, {{0, 100}, {1, 400}, {2, 1600}, {3, 3200}, {4, 800}});
        for (int draw = 0; draw < 200; ++draw) {
            Denoiser model(cfg, static_cast<std::uint64_t>(draw));
            randomize(model, rng, 3.0f);
            for (std::size_t s = 0; s < kStages; ++s) {
                auto [g, b] = model.modulation_params(tape, meta, s);
                for (float v : g.data()) {
                    CHECK(v > 0.0f);
                    CHECK(v < 2.0f);
                }
            }
        }
    }
    SUBCASE("different sensors get different modulation") {
        Denoiser model(cfg, 9);
        Tape tape(false);
        for (std::size_t s = 0; s < kStages; ++s) {
            auto [g0, b0] = model.modulation_params(tape, meta_rows(5, {{0, 400}}), s);
            auto [g1, b1] = model.modulation_params(tape, meta_rows(5, {{1, 400}}), s);
            CHECK_FALSE(bit_equal(g0, g1));
            CHECK_FALSE(bit_equal(b0, b1));
        }
    }
    SUBCASE("metadata width must match the model") {
        Denoiser model(cfg, 1);
        Tape tape(false);
        CHECK_THROWS_AS(model.modulation_params(tape, meta_rows(4, {{0, 100}}), 0), ContractViolation);
        CHECK_THROWS_AS(model.modulation_params(tape, meta_rows(5, {{0, 100}}), 3), ContractViolation);
    }
}

TEST_CASE("modulate") {
    Tape tape(false);
    SUBCASE("identity and arithmetic") {
        std::mt19937_64 rng(2);
        auto f = random_input(2, 8, rng);
        auto same = modulate(tape, f, Tensor::full({2, 4}, 1.0f), Tensor::zeros({2, 4}));
        CHECK(bit_equal(same, f));
        auto c = modulate(tape, Tensor::full({1, 1, 3, 3}, 1.0f), Tensor::full({1, 1}, 0.5f),
                          Tensor::full({1, 1}, 0.25f));
        for (float v : c.data()) CHECK(v == 0.75f);
        CHECK_THROWS_AS(modulate(tape, f, Tensor::full({2, 3}, 1.0f), Tensor::zeros({2, 3})), ContractViolation);
    }
    SUBCASE("gamma gradient is the per-channel sum of upstream times F") {
        std::mt19937_64 rng(8);
        auto f = testing::random_tensor({1, 3, 4, 5}, rng);
        auto up = testing::random_tensor({1, 3, 4, 5}, rng);
        auto g = testing::random_tensor({1, 3}, rng, 0.2, 1.8);
        auto b = testing::random_tensor({1, 3}, rng);
        numcore::Tape64 t;
        g.set_requires_grad(true);
        g.zero_grad();
        auto loss = numcore::ops::sum(t, numcore::ops::mul(t, modulate(t, f, g, b), up));
        t.backward(loss);
        for (std::size_t c = 0; c < 3; ++c) {
            double expected = 0.0;
            for (std::size_t i = 0; i < 20; ++i) expected += up.at(c * 20 + i) * f.at(c * 20 + i);
            CHECK(std::abs(g.grad()[c] - expected) < 1e-12);
        }
        const auto report = testing::check_gradients({f, g, b}, [&](numcore::Tape64& tt) {
            return numcore::ops::sum(tt, numcore::ops::mul(tt, modulate(tt, f, g, b), up));
        });
        CHECK(report.ok());
    }
}

TEST_CASE("denoiser forward") {
    const DenoiserConfig cfg = testing::tiny_config();
    std::mt19937_64 rng(12);
    SUBCASE("identity at initialization") {
        Denoiser model(cfg, 3);
        Tape tape(false);
        auto x = random_input(2, 16, rng);
        auto y = model.forward(tape, x, meta_rows(5, {{0, 100}, {4, 3200}}));
        CHECK(bit_equal(y, x));
    }
    SUBCASE("output shape equals input shape") {
        Denoiser model(cfg, 3);
        randomize(model, rng, 0.3f);
        Tape tape(false);
        for (auto [h, w] : {std::pair<std::size_t, std::size_t>{8, 8}, {16, 8}, {24, 40}}) {
            Tensor x = Tensor::full({1, 4, h, w}, 0.3f);
            CHECK(model.forward(tape, x, meta_rows(5, {{2, 400}})).shape() == x.shape());
        }
    }
    SUBCASE("invalid inputs") {
        Denoiser model(cfg, 3);
        Tape tape(false);
        const auto meta = meta_rows(5, {{2, 400}});
        CHECK_THROWS_AS(model.forward(tape, Tensor::full({1, 4, 12, 16}, 0.f), meta), ContractViolation);
        CHECK_THROWS_AS(model.forward(tape, Tensor::full({1, 3, 16, 16}, 0.f), meta), ContractViolation);
        CHECK_THROWS_AS(model.forward(tape, Tensor::full({2, 4, 16, 16}, 0.f), meta), ContractViolation);
    }
    SUBCASE("zeroed modulation matches the unmodulated backbone bit for bit") {
        DenoiserConfig plain = cfg;
        plain.modulation = false;
        for (int trial = 0; trial < 10; ++trial) {
            Denoiser a(cfg, 50 + trial), b(plain, 50 + trial);
            a.zero_modulation();
            // make the output layer non-trivial in both models
            for (std::size_t i = 0; i < a.decoder[2].weight.numel(); ++i) {
                const float v = std::uniform_real_distribution<float>(-0.1f, 0.1f)(rng);
                a.decoder[2].weight.mutable_data()[i] = v;
                b.decoder[2].weight.mutable_data()[i] = v;
            }
            Tape tape(false);
            auto x = random_input(2, 16, rng);
            const auto meta = meta_rows(5, {{1, 100}, {3, 1600}});
            CHECK(bit_equal(a.forward(tape, x, meta), b.forward(tape, x, meta)));
        }
    }
    SUBCASE("permuting the one-hot with the first-layer rows leaves outputs unchanged") {
        Denoiser a(cfg, 21);
        randomize(a, rng, 0.4f);
        Denoiser b = a.cast<float>();
        const std::vector<int> perm{3, 0, 4, 1, 2}; // sensor i of a is sensor perm[i] of b
        for (std::size_t s = 0; s < kStages; ++s) {
            for (auto* pair : {&a.stages[s].gamma, &a.stages[s].beta}) {
                auto& dst = pair == &a.stages[s].gamma ? b.stages[s].gamma : b.stages[s].beta;
                const auto& src = pair->weights[0];
                const std::size_t e = src.dim(1);
                for (std::size_t i = 0; i < 5; ++i)
                    for (std::size_t j = 0; j < e; ++j)
                        dst.weights[0].mutable_data()[static_cast<std::size_t>(perm[i]) * e + j] = src.at(i * e + j);
            }
        }
        Tape tape(false);
        auto x = random_input(1, 16, rng);
        for (int sensor = 0; sensor < 5; ++sensor) {
            auto ya = a.forward(tape, x, meta_rows(5, {{sensor, 800}}));
            auto yb = b.forward(tape, x, meta_rows(5, {{perm[static_cast<std::size_t>(sensor)], 800}}));
            for (std::size_t i = 0; i < ya.numel(); ++i) CHECK(std::abs(ya.at(i) - yb.at(i)) < 1e-6);
        }
    }
    SUBCASE("batched forward equals per-item forward") {
        Denoiser model(cfg, 5);
        randomize(model, rng, 0.3f);
        Tape tape(false);
        auto x = random_input(3, 8, rng);
        const auto meta = meta_rows(5, {{0, 100}, {1, 400}, {2, 1600}});
        auto y = model.forward(tape, x, meta);
        for (std::size_t i = 0; i < 3; ++i) {
            Tensor xi({1, 4, 8, 8}, std::vector<float>(x.data().begin() + static_cast<long>(i * 256),
                                                       x.data().begin() + static_cast<long>((i + 1) * 256)));
            Tensor mi({1, 10}, std::vector<float>(meta.data().begin() + static_cast<long>(i * 10),
                                                  meta.data().begin() + static_cast<long>((i + 1) * 10)));
            auto yi = model.forward(tape, xi, mi);
            CHECK(bit_equal(yi, Tensor({1, 4, 8, 8}, std::vector<float>(y.data().begin() + static_cast<long>(i * 256),
                                                                          y.data().begin() + static_cast<long>((i + 1) * 256)))));
        }
    }
}

TEST_CASE("overfitting one pair halves the loss within 200 steps") {
    const auto d = testing::small_domain(1, 1, 16, 77);
    DenoiserConfig cfg;
    Denoiser model(cfg, 4);
    numcore::Optimizer opt(model.parameters());
    const sensorsim::SamplePair* ptr = &d.pairs[0];
    const auto batch = make_batch(std::span<const sensorsim::SamplePair* const>(&ptr, 1), cfg.n_sensors);
    double first = 0.0, last = 0.0;
    for (int step = 0; step < 200; ++step) {
        Tape tape;
        opt.zero_grad();
        auto loss = numcore::ops::l1_loss(tape, model.forward(tape, batch.noisy, batch.meta), batch.clean);
        const double v = loss.item();
        if (step == 0) first = v;
        last = v;
        tape.backward(loss);
        opt.step();
    }
    CHECK(last < 0.5 * first);
}

TEST_CASE("parameter counts") {
    DenoiserConfig cfg;
    Denoiser model(cfg, 0);
    // encoder 592 + 4640 + 18496, decoder 27680 + 6928 + 724,
    // modulation MLP pairs 1984 + 7040 + 26368
    CHECK(model.count_params() == 94452);

    DenoiserConfig wide = cfg;
    wide.widths = {32, 64, 128};
    Denoiser big(wide, 0);
    for (std::size_t l : {1u, 2u}) CHECK(big.encoder[l].weight.numel() == 4 * model.encoder[l].weight.numel());
    for (std::size_t l : {0u, 1u}) CHECK(big.decoder[l].weight.numel() == 4 * model.decoder[l].weight.numel());

    DenoiserConfig more = cfg;
    more.n_sensors = 6;
    Denoiser six(more, 0);
    std::size_t expected = 0;
    for (std::size_t s = 0; s < kStages; ++s) {
        CHECK(six.stages[s].gamma.weights[0].numel() == model.stages[s].gamma.weights[0].numel() + 2 * cfg.widths[s]);
        CHECK(six.stages[s].beta.weights[0].numel() == model.stages[s].beta.weights[0].numel() + 2 * cfg.widths[s]);
        expected += 2 * 2 * cfg.widths[s];
    }
    CHECK(six.count_params() == model.count_params() + expected);

    const auto names = model.parameter_names();
    CHECK(names.size() == model.parameters().size());
    CHECK(names.front() == "encoder.0.weight");

    DenoiserConfig bad = cfg;
    bad.n_sensors = 0;
    CHECK_THROWS_AS(Denoiser(bad, 0), ContractViolation);
}

TEST_CASE("checkpoints") {
    const auto dir = testing::scratch_dir("checkpoint");
    std::mt19937_64 rng(3);
    Denoiser model(testing::tiny_config(), 8);
    randomize(model, rng, 0.5f);
    save_checkpoint(dir / "m.bin", model);

    SUBCASE("round trip") {
        const auto loaded = load_checkpoint(dir / "m.bin");
        CHECK(loaded.config() == model.config());
        const auto a = model.parameters(), b = loaded.parameters();
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(bit_equal(a[i], b[i]));
        CHECK(describe(loaded) == describe(model));
    }
    SUBCASE("bad magic and truncation") {
        {
            std::ofstream f(dir / "junk.bin", std::ios::binary);
            f << "not a checkpoint at all";
        }
        CHECK_THROWS_AS(load_checkpoint(dir / "junk.bin"), CheckpointError);
        std::filesystem::copy_file(dir / "m.bin", dir / "short.bin");
        std::filesystem::resize_file(dir / "short.bin", std::filesystem::file_size(dir / "m.bin") - 4);
        CHECK_THROWS_AS(load_checkpoint(dir / "short.bin"), CheckpointError);
        CHECK_THROWS_AS(load_checkpoint(dir / "missing.bin"), CheckpointError);
    }
    SUBCASE("copy_parameters needs matching architectures") {
        Denoiser other(testing::tiny_config(), 99);
        copy_parameters(model, other);
        CHECK(bit_equal(other.encoder[0].weight, model.encoder[0].weight));
        Denoiser wrong(testing::tiny_config(4), 1);
        CHECK_THROWS(copy_parameters(model, wrong));
    }
}

TEST_CASE("batches") {
    const auto d = testing::small_domain(3, 3, 8, 2);
    std::vector<const sensorsim::SamplePair*> ptrs{&d.pairs[2], &d.pairs[0]};
    const auto b = make_batch(ptrs, 5);
    CHECK(b.size() == 2);
    CHECK(b.noisy.shape() == Shape{2, 4, 8, 8});
    CHECK(b.meta.shape() == Shape{2, 10});
    CHECK(bit_equal(slice_item(b.clean, 0), d.pairs[2].clean));
    CHECK(bit_equal(slice_item(b.noisy, 1), d.pairs[0].noisy));
    CHECK(b.meta.at(3) == 1.0f);
    CHECK(b.meta.at(5) == static_cast<float>(d.pairs[2].iso) / 3200.0f);

    const auto masked = make_batch(ptrs, 5, MetadataMask{false, true});
    for (std::size_t i = 0; i < 5; ++i) CHECK(masked.meta.at(i) == 0.0f);
    CHECK_THROWS_AS(make_batch(std::vector<const sensorsim::SamplePair*>{}, 5), ContractViolation);
    CHECK_THROWS_AS(slice_item(b.clean, 2), ContractViolation);
}
