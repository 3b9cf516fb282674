#include "adlraw/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace adlraw::harness {

namespace {

constexpr double kWidth = 640, kHeight = 400, kLeft = 70, kRight = 170, kTop = 30, kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace

std::string size_sweep_svg(const std::vector<ResultRecord>& records) {
    if (records.empty()) throw ContractViolation("size_sweep_svg: no records");
    std::set<std::size_t> sizes;
    std::set<std::string> methods;
    for (const auto& r : records) {
        sizes.insert(r.tadp_size);
        methods.insert(r.method);
    }
    std::map<std::string, std::vector<std::pair<std::size_t, double>>> series;
    double lo = 1e9, hi = -1e9;
    for (const auto& m : methods) {
        for (std::size_t s : sizes) {
            bool any = std::any_of(records.begin(), records.end(),
                                   [&](const ResultRecord& r) { return r.method == m && r.tadp_size == s; });
            if (!any) continue;
            const double v = median_psnr(records, m, -1, s);
            series[m].push_back({s, v});
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (hi - lo < 0.5) {
        const double mid = 0.5 * (hi + lo);
        lo = mid - 0.25;
        hi = mid + 0.25;
    }
    const double pad = 0.1 * (hi - lo);
    lo -= pad;
    hi += pad;

    const std::vector<std::size_t> xs(sizes.begin(), sizes.end());
    const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
    auto xpos = [&](std::size_t s) {
        const auto i = static_cast<double>(std::find(xs.begin(), xs.end(), s) - xs.begin());
        return xs.size() == 1 ? kLeft + plot_w / 2 : kLeft + plot_w * i / static_cast<double>(xs.size() - 1);
    };
    auto ypos = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
        << kTop + plot_h << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
        << "\" stroke=\"black\"/>\n";
    for (std::size_t s : xs) {
        svg << "<text class=\"xtick\" x=\"" << num(xpos(s)) << "\" y=\"" << kTop + plot_h + 18
            << "\" text-anchor=\"middle\">" << s << "</text>\n";
    }
    for (int i = 0; i <= 4; ++i) {
        const double v = lo + (hi - lo) * i / 4.0;
        svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(ypos(v) + 4) << "\" text-anchor=\"end\">" << num(v)
            << "</text>\n";
    }
    svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
        << "\" text-anchor=\"middle\">target set size</text>\n";
    svg << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 16 " << kTop + plot_h / 2
        << ")\" text-anchor=\"middle\">median PSNR (dB)</text>\n";
    std::size_t c = 0;
    for (const auto& [method, pts] : series) {
        const char* color = kColors[c % std::size(kColors)];
        svg << "<polyline data-method=\"" << method << "\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            svg << (i ? " " : "") << num(xpos(pts[i].first)) << ',' << num(ypos(pts[i].second));
        }
        svg << "\"/>\n";
        const double ly = kTop + 16.0 * static_cast<double>(c) + 6;
        svg << "<line x1=\"" << kWidth - kRight + 10 << "\" y1=\"" << ly << "\" x2=\"" << kWidth - kRight + 30
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kWidth - kRight + 36 << "\" y=\"" << ly + 4 << "\">" << method << "</text>\n";
        ++c;
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_size_sweep_svg(const std::vector<ResultRecord>& records, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << size_sweep_svg(records);
}

} // namespace adlraw::harness
