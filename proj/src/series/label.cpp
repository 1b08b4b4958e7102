#include "tsrl/series/label.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsrl/series/synth.hpp"

namespace tsrl::series {

std::string_view to_string(NoiseTier tier) {
    switch (tier) {
    case NoiseTier::low: return "low";
    case NoiseTier::medium: return "medium";
    case NoiseTier::high: return "high";
    }
    return "low";
}

std::optional<NoiseTier> noise_tier_from_string(std::string_view s) {
    if (s == "low") return NoiseTier::low;
    if (s == "medium") return NoiseTier::medium;
    if (s == "high") return NoiseTier::high;
    return std::nullopt;
}

double deterministic_range(const SeriesSpec& spec) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < spec.count; ++i) {
        double v = spec.base_level;
        if (spec.trend) v += spec.trend->slope * static_cast<double>(i);
        if (spec.seasonality) v += seasonal_component(*spec.seasonality, i);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double range = hi - lo;
    if (!(range > 0.0)) return std::abs(spec.base_level) + 1.0;
    return range;
}

NoiseTier classify_noise(double sigma, double range) {
    const double ratio = sigma / range;
    if (ratio < kLowNoiseUpper) return NoiseTier::low;
    if (ratio <= kMediumNoiseUpper) return NoiseTier::medium;
    return NoiseTier::high;
}

PrimitiveLabel derive_primitive_label(const SeriesSpec& spec) {
    require_valid(spec);
    PrimitiveLabel label;
    label.noise_tier = classify_noise(spec.noise.sigma, deterministic_range(spec));
    if (spec.seasonality) {
        const double amp = std::abs(spec.seasonality->amplitude);
        if (amp > 0.0 && amp >= kPeriodDominance * spec.noise.sigma) {
            label.has_period = true;
            label.period_steps = spec.seasonality->period;
        }
    }
    label.ood_intervals.reserve(spec.ood_segments.size());
    for (const auto& seg : spec.ood_segments) {
        label.ood_intervals.push_back({seg.start_index, seg.end_index()});
    }
    return label;
}

} // namespace tsrl::series
