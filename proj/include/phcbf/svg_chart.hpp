// Minimal deterministic SVG line charts.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace phcbf {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color;  ///< empty picks from the default palette
    bool dashed = false;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::vector<double> h_lines;  ///< horizontal reference lines (e.g. energy limit)
    int width = 720;
    int height = 360;
    std::size_t max_points = 2000;  ///< per series, after uniform decimation
};

/// Renders the chart. Identical input yields a byte-identical document.
std::string render_svg(const LineChart& chart);

void write_svg(const std::filesystem::path& path, const LineChart& chart);

}  // namespace phcbf
