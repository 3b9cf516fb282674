#include "adlraw/sensorsim/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace adlraw::sensorsim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double unit_from_bits(std::uint64_t bits) {
    // 53 random mantissa bits mapped into (0, 1).
    return (static_cast<double>(bits >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

struct Wave {
    double amp, fx, fy, phase;
};

struct Edge {
    double px, py, nx, ny, step;
};

// Colour index (0 = R, 1 = G, 2 = B) of mosaic position (y, x).
int cfa_colour(BayerLayout layout, std::size_t y, std::size_t x) {
    static constexpr std::array<std::array<int, 4>, 4> tiles{{
        {0, 1, 1, 2}, // rggb
        {2, 1, 1, 0}, // bggr
        {1, 0, 2, 1}, // grbg
        {1, 2, 0, 1}, // gbrg
    }};
    return tiles[static_cast<std::size_t>(layout)][(y % 2) * 2 + (x % 2)];
}

void require_even(std::size_t h, std::size_t w, const char* op) {
    if (h == 0 || w == 0 || h % 2 != 0 || w % 2 != 0) {
        throw ContractViolation(std::string(op) + ": mosaic dimensions must be positive and even, got " +
                                std::to_string(h) + "x" + std::to_string(w));
    }
}

} // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(a) ^ (b + 0x632be59bd9b4e019ull));
}

double fixed_pattern_value(std::uint64_t fpn_seed, std::size_t y, std::size_t x) {
    const std::uint64_t h = mix_seed(fpn_seed, (static_cast<std::uint64_t>(y) << 32) | x);
    const double u1 = unit_from_bits(h);
    const double u2 = unit_from_bits(splitmix64(h));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Tensor render_clean_scene(std::uint64_t scene_seed, std::size_t height, std::size_t width,
                          BayerLayout layout) {
    require_even(height, width, "render_clean_scene");
    std::mt19937_64 rng(mix_seed(scene_seed, 0x5ce9e));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

    const double base = range(0.3, 0.7);
    const double gx = range(-0.3, 0.3);
    const double gy = range(-0.3, 0.3);

    std::vector<Wave> waves(5);
    for (auto& wv : waves) {
        wv = {range(0.03, 0.10), range(-5.0, 5.0), range(-5.0, 5.0), range(0.0, 2.0 * std::numbers::pi)};
    }
    const Wave texture{range(0.0, 0.03), range(-14.0, 14.0), range(-14.0, 14.0),
                       range(0.0, 2.0 * std::numbers::pi)};

    const int n_edges = 2 + static_cast<int>(rng() % 3);
    std::vector<Edge> edges(static_cast<std::size_t>(n_edges));
    for (auto& e : edges) {
        const double theta = range(0.0, 2.0 * std::numbers::pi);
        e = {range(0.15, 0.85), range(0.15, 0.85), std::cos(theta), std::sin(theta), range(-0.3, 0.3)};
    }

    std::array<double, 3> tint{range(0.75, 1.15), range(0.85, 1.15), range(0.75, 1.15)};
    std::array<Wave, 3> chroma;
    for (auto& c : chroma) c = {range(0.0, 0.05), range(-3.0, 3.0), range(-3.0, 3.0), range(0.0, 6.283)};

    std::vector<float> out(height * width);
    for (std::size_t y = 0; y < height; ++y) {
        const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(height);
        for (std::size_t x = 0; x < width; ++x) {
            const double uu = (static_cast<double>(x) + 0.5) / static_cast<double>(width);
            double lum = base + gx * (uu - 0.5) + gy * (v - 0.5);
            for (const auto& wv : waves)
                lum += wv.amp * std::sin(2.0 * std::numbers::pi * (wv.fx * uu + wv.fy * v) + wv.phase);
            lum += texture.amp *
                   std::sin(2.0 * std::numbers::pi * (texture.fx * uu + texture.fy * v) + texture.phase);
            for (const auto& e : edges) {
                if ((uu - e.px) * e.nx + (v - e.py) * e.ny > 0.0) lum += e.step;
            }
            const int c = cfa_colour(layout, y, x);
            const Wave& cw = chroma[static_cast<std::size_t>(c)];
            double value = lum * tint[static_cast<std::size_t>(c)] +
                           cw.amp * std::sin(2.0 * std::numbers::pi * (cw.fx * uu + cw.fy * v) + cw.phase);
            out[y * width + x] = static_cast<float>(std::clamp(value, 0.0, 1.0));
        }
    }
    return Tensor({height, width}, std::move(out));
}

Tensor pack_bayer(const Tensor& mosaic) {
    if (mosaic.rank() != 2) {
        throw ContractViolation("pack_bayer: expected an h x w mosaic, got " +
                                numcore::shape_str(mosaic.shape()));
    }
    const std::size_t h = mosaic.dim(0), w = mosaic.dim(1);
    require_even(h, w, "pack_bayer");
    const std::size_t hh = h / 2, hw = w / 2;
    const auto src = mosaic.data();
    std::vector<float> out(h * w);
    for (std::size_t c = 0; c < 4; ++c) {
        const std::size_t dy = c / 2, dx = c % 2;
        for (std::size_t y = 0; y < hh; ++y)
            for (std::size_t x = 0; x < hw; ++x)
                out[(c * hh + y) * hw + x] = src[(2 * y + dy) * w + 2 * x + dx];
    }
    return Tensor({4, hh, hw}, std::move(out));
}

Tensor unpack_bayer(const Tensor& packed) {
    if (packed.rank() != 3 || packed.dim(0) != 4) {
        throw ContractViolation("unpack_bayer: expected 4 x h x w planes, got " +
                                numcore::shape_str(packed.shape()));
    }
    const std::size_t hh = packed.dim(1), hw = packed.dim(2);
    const std::size_t h = hh * 2, w = hw * 2;
    const auto src = packed.data();
    std::vector<float> out(h * w);
    for (std::size_t c = 0; c < 4; ++c) {
        const std::size_t dy = c / 2, dx = c % 2;
        for (std::size_t y = 0; y < hh; ++y)
            for (std::size_t x = 0; x < hw; ++x)
                out[(2 * y + dy) * w + 2 * x + dx] = src[(c * hh + y) * hw + x];
    }
    return Tensor({h, w}, std::move(out));
}

Tensor apply_noise(const Tensor& clean_mosaic, const SensorProfile& profile, int iso,
                   double light_factor, std::mt19937_64& rng) {
    if (!profile.supports(iso)) {
        throw ContractViolation("apply_noise: ISO " + std::to_string(iso) + " not supported by sensor " +
                                profile.name);
    }
    if (!(light_factor >= 1.0)) throw ContractViolation("apply_noise: light factor must be >= 1");
    if (clean_mosaic.rank() != 2) throw ContractViolation("apply_noise: expected an h x w mosaic");
    const std::size_t h = clean_mosaic.dim(0), w = clean_mosaic.dim(1);
    const double gain = profile.gain(iso);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto src = clean_mosaic.data();
    std::vector<float> out(h * w);
    for (std::size_t y = 0; y < h; ++y) {
        const double row = profile.row_noise > 0.0 ? profile.row_noise * normal(rng) : 0.0;
        for (std::size_t x = 0; x < w; ++x) {
            const double under = static_cast<double>(src[y * w + x]) / light_factor;
            double v = under;
            const double shot_var = gain * std::max(under, 0.0);
            if (shot_var > 0.0) v += std::sqrt(shot_var) * normal(rng);
            if (profile.read_noise > 0.0) v += profile.read_noise * normal(rng);
            v += row;
            if (profile.fpn_amplitude > 0.0)
                v += profile.fpn_amplitude * fixed_pattern_value(profile.fpn_seed, y, x);
            v += profile.black_level;
            v *= light_factor;
            out[y * w + x] = std::clamp(static_cast<float>(v), kNoisyMin, kNoisyMax);
        }
    }
    return Tensor({h, w}, std::move(out));
}

} // namespace adlraw::sensorsim
