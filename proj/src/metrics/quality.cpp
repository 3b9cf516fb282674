#include "adlraw/metrics/quality.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace adlraw::metrics {

namespace {

void require_same(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ContractViolation(std::string(op) + ": shapes " + numcore::shape_str(a.shape()) + " and " +
                                numcore::shape_str(b.shape()) + " differ");
    }
}

constexpr std::size_t kWindow = 11;
constexpr double kSigma = 1.5;

std::array<double, kWindow> gaussian_window() {
    std::array<double, kWindow> g{};
    double total = 0.0;
    for (std::size_t i = 0; i < kWindow; ++i) {
        const double d = static_cast<double>(i) - static_cast<double>(kWindow / 2);
        g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        total += g[i];
    }
    for (auto& v : g) v /= total;
    return g;
}

// Separable valid-region filter of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t h, std::size_t w,
                                 const std::array<double, kWindow>& g) {
    const std::size_t ow = w - kWindow + 1, oh = h - kWindow + 1;
    std::vector<double> rows(h * ow);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t k = 0; k < kWindow; ++k) acc += g[k] * img[y * w + x + k];
            rows[y * ow + x] = acc;
        }
    }
    std::vector<double> out(oh * ow);
    for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t k = 0; k < kWindow; ++k) acc += g[k] * rows[(y + k) * ow + x];
            out[y * ow + x] = acc;
        }
    }
    return out;
}

} // namespace

double mse(const Tensor& a, const Tensor& b) {
    require_same(a, b, "mse");
    const auto da = a.data(), db = b.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = static_cast<double>(da[i]) - static_cast<double>(db[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(da.size());
}

double psnr(const Tensor& a, const Tensor& b, double peak, double cap) {
    if (!(peak > 0.0)) throw ContractViolation("psnr: peak must be positive");
    const double m = mse(a, b);
    if (m == 0.0) return cap;
    return std::min(cap, 10.0 * std::log10(peak * peak / m));
}

double ssim(const Tensor& a, const Tensor& b, double peak) {
    require_same(a, b, "ssim");
    if (a.rank() < 2) throw ContractViolation("ssim: need at least two spatial axes");
    const std::size_t h = a.dim(a.rank() - 2), w = a.dim(a.rank() - 1);
    if (h < kWindow || w < kWindow) {
        throw ContractViolation("ssim: spatial size " + numcore::shape_str(a.shape()) + " is below the 11 x 11 window");
    }
    const std::size_t plane = h * w;
    const std::size_t channels = a.numel() / plane;
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    const auto g = gaussian_window();
    double total = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
        std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
        for (std::size_t i = 0; i < plane; ++i) {
            x[i] = a.data()[c * plane + i];
            y[i] = b.data()[c * plane + i];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = filter_valid(x, h, w, g), my = filter_valid(y, h, w, g);
        const auto sxx = filter_valid(xx, h, w, g), syy = filter_valid(yy, h, w, g), sxy = filter_valid(xy, h, w, g);
        double acc = 0.0;
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double vx = sxx[i] - mx[i] * mx[i];
            const double vy = syy[i] - my[i] * my[i];
            const double cov = sxy[i] - mx[i] * my[i];
            acc += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
                   ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
        }
        total += acc / static_cast<double>(mx.size());
    }
    return total / static_cast<double>(channels);
}

Tensor error_map(const Tensor& a, const Tensor& b) {
    require_same(a, b, "error_map");
    std::vector<float> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::fabs(a.data()[i] - b.data()[i]);
    return Tensor(a.shape(), std::move(out));
}

Tensor normalize_map(const Tensor& map) {
    const auto d = map.data();
    const float peak = *std::max_element(d.begin(), d.end());
    std::vector<float> out(d.begin(), d.end());
    if (peak > 0.0f) {
        for (auto& v : out) v = std::clamp(v / peak, 0.0f, 1.0f);
    }
    return Tensor(map.shape(), std::move(out));
}

} // namespace adlraw::metrics
