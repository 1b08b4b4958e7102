#include "tsrl/series/spec.hpp"

#include <cmath>

#include <fmt/format.h>

namespace tsrl::series {
namespace {

std::string join_violations(const std::vector<std::string>& v) {
    std::string out = "invalid series spec:";
    for (const auto& s : v) {
        out += "\n  - ";
        out += s;
    }
    return out;
}

} // namespace

SpecValidationError::SpecValidationError(std::vector<std::string> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

std::vector<std::string> validate(const SeriesSpec& spec) {
    std::vector<std::string> out;
    if (spec.count == 0) out.emplace_back("count must be positive");
    if (spec.step.count() <= 0) out.emplace_back("step must be positive");
    if (!std::isfinite(spec.base_level)) out.emplace_back("base_level must be finite");
    if (spec.trend && !std::isfinite(spec.trend->slope)) out.emplace_back("trend.slope must be finite");
    if (!std::isfinite(spec.noise.sigma) || spec.noise.sigma < 0.0) {
        out.emplace_back("noise.sigma must be a nonnegative finite number");
    }
    if (spec.seasonality) {
        const auto& s = *spec.seasonality;
        if (s.period < 2 || 2 * s.period > spec.count) {
            out.push_back(fmt::format("seasonality.period {} outside [2, count/2] with count {}", s.period,
                                      spec.count));
        }
        if (!std::isfinite(s.amplitude)) out.emplace_back("seasonality.amplitude must be finite");
    }
    for (std::size_t i = 0; i < spec.ood_segments.size(); ++i) {
        const auto& seg = spec.ood_segments[i];
        if (seg.length == 0) out.push_back(fmt::format("ood_segments[{}].length must be positive", i));
        if (seg.end_index() > spec.count) {
            out.push_back(fmt::format("ood_segments[{}] [{}, {}) exceeds count {}", i, seg.start_index,
                                      seg.end_index(), spec.count));
        }
        if (!std::isfinite(seg.magnitude)) out.push_back(fmt::format("ood_segments[{}].magnitude must be finite", i));
        if (i > 0) {
            const auto& prev = spec.ood_segments[i - 1];
            if (seg.start_index < prev.start_index) {
                out.push_back(fmt::format("ood_segments[{}] not sorted by start_index", i));
            } else if (seg.start_index < prev.end_index()) {
                out.push_back(fmt::format("ood_segments[{}] overlaps ood_segments[{}]", i, i - 1));
            }
        }
    }
    if (spec.plot.width_px < plot::kMinWidthPx) out.push_back(fmt::format("plot.width_px must be >= {}", plot::kMinWidthPx));
    if (spec.plot.height_px < plot::kMinHeightPx) out.push_back(fmt::format("plot.height_px must be >= {}", plot::kMinHeightPx));
    if (spec.plot.max_ticks < plot::kMinTicks) out.push_back(fmt::format("plot.max_ticks must be >= {}", plot::kMinTicks));
    return out;
}

void require_valid(const SeriesSpec& spec) {
    auto v = validate(spec);
    if (!v.empty()) throw SpecValidationError(std::move(v));
}

std::string_view to_string(Waveform w) {
    switch (w) {
    case Waveform::sine: return "sine";
    case Waveform::triangle: return "triangle";
    case Waveform::square: return "square";
    }
    return "sine";
}

std::string_view to_string(OodKind k) {
    switch (k) {
    case OodKind::spike: return "spike";
    case OodKind::level_shift: return "level_shift";
    case OodKind::variance_burst: return "variance_burst";
    }
    return "spike";
}

std::optional<Waveform> waveform_from_string(std::string_view s) {
    if (s == "sine") return Waveform::sine;
    if (s == "triangle") return Waveform::triangle;
    if (s == "square") return Waveform::square;
    return std::nullopt;
}

std::optional<OodKind> ood_kind_from_string(std::string_view s) {
    if (s == "spike") return OodKind::spike;
    if (s == "level_shift") return OodKind::level_shift;
    if (s == "variance_burst") return OodKind::variance_burst;
    return std::nullopt;
}

} // namespace tsrl::series
