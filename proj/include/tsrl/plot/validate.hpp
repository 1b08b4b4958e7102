#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tsrl/plot/plot_spec.hpp"
#include "tsrl/series/synth.hpp"

namespace tsrl::plot {

inline constexpr std::size_t kMinPoints = 24;
inline constexpr std::size_t kMaxPoints = 20000;
// Approximate glyph advance at the tick font size, plus a gap between labels.
inline constexpr int kTickCharWidthPx = 7;
inline constexpr int kTickLabelGapPx = 10;

namespace rule {
inline constexpr const char* kPlotSpec = "plot_spec";
inline constexpr const char* kMinPoints = "min_points";
inline constexpr const char* kMaxPoints = "max_points";
inline constexpr const char* kLengthMismatch = "length_mismatch";
inline constexpr const char* kTimeFormat = "time_format";
inline constexpr const char* kNonuniformTimestamps = "nonuniform_timestamps";
inline constexpr const char* kIllegibleXAxis = "illegible_x_axis";
inline constexpr const char* kNonfiniteValue = "nonfinite_value";
inline constexpr const char* kDegenerateYRange = "degenerate_y_range";
} // namespace rule

struct Violation {
    std::string rule_id;
    std::string message;
    bool operator==(const Violation&) const = default;
};

struct ValidationReport {
    bool passed = true;
    std::vector<Violation> violations;

    bool has(std::string_view rule_id) const;
};

/// Sample indices of x ticks: every k-th sample for the smallest "round" stride k
/// that keeps the count within max_ticks.
std::vector<std::size_t> choose_tick_indices(std::size_t n_points, int max_ticks);

/// Estimated rendered width of one tick label.
int tick_label_width_px(std::size_t chars);

ValidationReport validate_for_plot(const series::LabeledSeries& series, const PlotSpec& plot);

} // namespace tsrl::plot
