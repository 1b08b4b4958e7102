#include "tsrl/plot/validate.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace tsrl::plot {
namespace {

bool is_round_stride(std::size_t k) {
    // 1-6 and 8 times a power of ten, plus calendar-friendly 12/24/48/96/168.
    for (std::size_t calendar : {12, 24, 48, 96, 168, 336, 672}) {
        if (k == calendar) return true;
    }
    while (k >= 10 && k % 10 == 0) k /= 10;
    return k <= 6 || k == 8;
}

} // namespace

bool ValidationReport::has(std::string_view rule_id) const {
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.rule_id == rule_id; });
}

std::vector<std::size_t> choose_tick_indices(std::size_t n_points, int max_ticks) {
    std::vector<std::size_t> out;
    if (n_points == 0 || max_ticks < 1) return out;
    const auto budget = static_cast<std::size_t>(max_ticks);
    std::size_t stride = 1;
    while ((n_points - 1) / stride + 1 > budget || !is_round_stride(stride)) ++stride;
    for (std::size_t i = 0; i < n_points; i += stride) out.push_back(i);
    return out;
}

int tick_label_width_px(std::size_t chars) { return static_cast<int>(chars) * kTickCharWidthPx + kTickLabelGapPx; }

ValidationReport validate_for_plot(const series::LabeledSeries& series, const PlotSpec& plot) {
    ValidationReport report;
    auto add = [&](const char* rule_id, std::string message) { report.violations.push_back({rule_id, std::move(message)}); };

    if (plot.width_px < kMinWidthPx || plot.height_px < kMinHeightPx) {
        add(rule::kPlotSpec, fmt::format("plot size {}x{} below minimum {}x{}", plot.width_px, plot.height_px,
                                         kMinWidthPx, kMinHeightPx));
    }
    if (plot.max_ticks < kMinTicks) add(rule::kPlotSpec, fmt::format("max_ticks {} below {}", plot.max_ticks, kMinTicks));

    const std::size_t n = series.values.size();
    if (series.timestamps.size() != n) {
        add(rule::kLengthMismatch, fmt::format("{} timestamps for {} values", series.timestamps.size(), n));
    }
    if (n < kMinPoints) {
        add(rule::kMinPoints, fmt::format("overly sparse data points: {} < {}", n, kMinPoints));
    } else if (n > kMaxPoints) {
        add(rule::kMaxPoints, fmt::format("too many data points for a legible chart: {} > {}", n, kMaxPoints));
    }

    if (!series::is_supported_time_pattern(plot.x_tick_format)) {
        add(rule::kTimeFormat, fmt::format("improper time format: tick pattern \"{}\"", plot.x_tick_format));
    }
    const auto bad_ts = std::find_if(series.timestamps.begin(), series.timestamps.end(),
                                     [](series::Timestamp ts) { return !series::is_representable(ts); });
    if (bad_ts != series.timestamps.end()) {
        add(rule::kTimeFormat, fmt::format("improper time format: timestamp {} outside years 0000-9999",
                                           bad_ts->time_since_epoch().count()));
    }
    if (series.timestamps.size() >= 2) {
        const auto step = series.timestamps[1] - series.timestamps[0];
        bool uniform = step.count() > 0;
        for (std::size_t i = 2; uniform && i < series.timestamps.size(); ++i) {
            uniform = series.timestamps[i] - series.timestamps[i - 1] == step;
        }
        if (!uniform) add(rule::kNonuniformTimestamps, "timestamps are not strictly increasing with a uniform step");
    }

    if (series::is_supported_time_pattern(plot.x_tick_format) && !series.timestamps.empty() && plot.max_ticks >= 1) {
        const auto ticks = choose_tick_indices(series.timestamps.size(), plot.max_ticks);
        std::size_t widest = 0;
        for (std::size_t i : ticks) widest = std::max(widest, series::format_time(series.timestamps[i], plot.x_tick_format).size());
        const long needed = static_cast<long>(tick_label_width_px(widest)) * static_cast<long>(ticks.size());
        if (needed > plot.width_px) {
            add(rule::kIllegibleXAxis, fmt::format("x-axis unintelligible: {} labels of {} chars need {}px > {}px",
                                                   ticks.size(), widest, needed, plot.width_px));
        }
    }

    std::size_t nonfinite = 0;
    double lo = INFINITY, hi = -INFINITY;
    for (double v : series.values) {
        if (!std::isfinite(v)) {
            ++nonfinite;
            continue;
        }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (nonfinite > 0) add(rule::kNonfiniteValue, fmt::format("{} non-finite values", nonfinite));
    if (nonfinite < n && !std::isfinite(hi - lo)) {
        add(rule::kDegenerateYRange, "value span overflows; y axis cannot be scaled");
    }

    report.passed = report.violations.empty();
    return report;
}

} // namespace tsrl::plot
