#pragma once

#include <string>
#include <vector>

namespace optimice {

/// One data series. `err` (empty or same length as `y`) draws a shaded band
/// for lines and error bars for points.
struct Series {
    enum class Style { Line, Points };
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> err;
    Style style = Style::Line;
};

struct PlotSpec {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool log_y = false;  // ignored unless every plotted value is positive
};

/// Standalone SVG document. Each series element carries its raw values in
/// data-x / data-y (and data-err) attributes, space separated at full
/// precision, so the figure can be checked against its CSV.
std::string render_svg(const PlotSpec& spec, const std::vector<Series>& series);

}  // namespace optimice
