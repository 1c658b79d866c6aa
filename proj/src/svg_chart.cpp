#include "phcbf/svg_chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "phcbf/errors.hpp"

namespace phcbf {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

constexpr int kLeft = 70;
constexpr int kRight = 150;
constexpr int kTop = 36;
constexpr int kBottom = 48;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Rounds the data range outwards to a "nice" step so ticks land on round numbers.
struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    double step = 0.2;
};

Axis nice_axis(double lo, double hi) {
    if (!(hi > lo)) {
        const double pad = std::max(1.0, std::abs(lo)) * 0.5;
        lo -= pad;
        hi += pad;
    }
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    }
    return Axis{std::floor(lo / step) * step, std::ceil(hi / step) * step, step};
}

}  // namespace

std::string render_svg(const LineChart& chart) {
    double xmin = std::numeric_limits<double>::infinity();
    double xmax = -xmin;
    double ymin = xmin;
    double ymax = -xmin;
    for (const auto& s : chart.series) {
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                continue;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    for (double h : chart.h_lines) {
        ymin = std::min(ymin, h);
        ymax = std::max(ymax, h);
    }
    if (!std::isfinite(xmin)) {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    const Axis ax = nice_axis(xmin, xmax);
    const Axis ay = nice_axis(ymin, ymax);

    const double pw = chart.width - kLeft - kRight;
    const double ph = chart.height - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - ax.lo) / (ax.hi - ax.lo) * pw; };
    auto py = [&](double y) { return kTop + (ay.hi - y) / (ay.hi - ay.lo) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << chart.width << "\" height=\""
       << chart.height << "\" viewBox=\"0 0 " << chart.width << ' ' << chart.height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << chart.width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"15\">" << escape(chart.title) << "</text>\n";

    os << "<g stroke=\"#e0e0e0\" stroke-width=\"1\">\n";
    for (double v = ax.lo; v <= ax.hi + 0.5 * ax.step; v += ax.step) {
        os << "<line x1=\"" << num(px(v)) << "\" y1=\"" << kTop << "\" x2=\"" << num(px(v))
           << "\" y2=\"" << num(kTop + ph) << "\"/>\n";
    }
    for (double v = ay.lo; v <= ay.hi + 0.5 * ay.step; v += ay.step) {
        os << "<line x1=\"" << kLeft << "\" y1=\"" << num(py(v)) << "\" x2=\"" << num(kLeft + pw)
           << "\" y2=\"" << num(py(v)) << "\"/>\n";
    }
    os << "</g>\n";
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << num(pw) << "\" height=\""
       << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

    os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (double v = ax.lo; v <= ax.hi + 0.5 * ax.step; v += ax.step) {
        os << "<text x=\"" << num(px(v)) << "\" y=\"" << num(kTop + ph + 16)
           << "\" text-anchor=\"middle\">" << tick_label(v) << "</text>\n";
    }
    for (double v = ay.lo; v <= ay.hi + 0.5 * ay.step; v += ay.step) {
        os << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(v) + 4)
           << "\" text-anchor=\"end\">" << tick_label(v) << "</text>\n";
    }
    os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << chart.height - 10
       << "\" text-anchor=\"middle\">" << escape(chart.x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" "
       << "transform=\"rotate(-90 16 " << num(kTop + ph / 2) << ")\">" << escape(chart.y_label)
       << "</text>\n";
    os << "</g>\n";

    for (double h : chart.h_lines) {
        os << "<line x1=\"" << kLeft << "\" y1=\"" << num(py(h)) << "\" x2=\"" << num(kLeft + pw)
           << "\" y2=\"" << num(py(h)) << "\" stroke=\"#555\" stroke-dasharray=\"2,3\"/>\n";
    }

    for (std::size_t k = 0; k < chart.series.size(); ++k) {
        const auto& s = chart.series[k];
        const std::string color =
            s.color.empty() ? kPalette[k % std::size(kPalette)] : s.color;
        const std::size_t n = std::min(s.x.size(), s.y.size());
        const std::size_t stride = std::max<std::size_t>(1, (n + chart.max_points - 1) /
                                                                std::max<std::size_t>(1, chart.max_points));
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
        if (s.dashed) {
            os << " stroke-dasharray=\"6,4\"";
        }
        os << " points=\"";
        bool first = true;
        for (std::size_t i = 0; i < n; i += stride) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                continue;
            }
            os << (first ? "" : " ") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
            first = false;
        }
        if (n > 0 && (n - 1) % stride != 0 && std::isfinite(s.x[n - 1]) &&
            std::isfinite(s.y[n - 1])) {
            os << (first ? "" : " ") << num(px(s.x[n - 1])) << ',' << num(py(s.y[n - 1]));
        }
        os << "\"/>\n";

        const double ly = kTop + 14 + 18.0 * static_cast<double>(k);
        const double lx = kLeft + pw + 12;
        os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 22)
           << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << num(lx + 28) << "\" y=\"" << num(ly + 4)
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_svg(const std::filesystem::path& path, const LineChart& chart) {
    std::ofstream os(path);
    if (!os) {
        throw ConfigError("cannot write " + path.string());
    }
    os << render_svg(chart);
}

}  // namespace phcbf
