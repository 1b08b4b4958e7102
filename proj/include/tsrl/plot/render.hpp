#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tsrl/plot/validate.hpp"

namespace tsrl::plot {

class RenderError : public std::runtime_error {
public:
    explicit RenderError(ValidationReport report);
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

struct AxisRange {
    double lo = 0.0;
    double hi = 1.0;
};

/// Value range padded 5% of the span; a constant series is padded 5% of |value|, or 1 at zero.
AxisRange y_axis_range(std::span<const double> values);

struct Tick {
    std::size_t index;
    std::string label;
};

/// Laid-out chart in pixel coordinates, shared by the SVG and raster back ends.
struct ChartLayout {
    PlotSpec plot;
    double left = 0, right = 0, top = 0, bottom = 0; // plot-area edges
    AxisRange y_range;
    std::vector<std::pair<double, double>> points;
    std::vector<std::pair<double, Tick>> x_ticks; // pixel x, tick
    std::vector<std::pair<double, std::string>> y_ticks; // pixel y, label
};

ChartLayout layout_series(const series::LabeledSeries& series, const PlotSpec& plot);

/// Generic layout for uniformly spaced values with caller-supplied x labels.
ChartLayout layout_values(std::span<const double> values, std::span<const std::string> x_labels,
                          const PlotSpec& plot);

std::string to_svg(const ChartLayout& layout);
/// RGB PNG at the plot's pixel size (geometry only; no glyphs).
std::vector<std::uint8_t> to_png(const ChartLayout& layout);

/// Throws RenderError when validate_for_plot fails.
std::string render_svg(const series::LabeledSeries& series, const PlotSpec& plot);
std::vector<std::uint8_t> render_png(const series::LabeledSeries& series, const PlotSpec& plot);

/// Training-trace chart: x axis is the step number.
std::string render_trace_svg(std::span<const double> values, std::span<const long> steps, const PlotSpec& plot);

} // namespace tsrl::plot
