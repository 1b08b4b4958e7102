#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "tsrl/series/spec.hpp"

namespace tsrl::series {

/// Half-open index interval [start, end).
struct IndexInterval {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - start; }
    auto operator<=>(const IndexInterval&) const = default;
};

enum class NoiseTier { low, medium, high };

std::string_view to_string(NoiseTier tier);
std::optional<NoiseTier> noise_tier_from_string(std::string_view s);

// Tier boundaries as a fraction of the deterministic peak-to-peak range.
inline constexpr double kLowNoiseUpper = 0.02;
inline constexpr double kMediumNoiseUpper = 0.10;
// Seasonality counts as a period only when amplitude >= this many sigmas.
inline constexpr double kPeriodDominance = 3.0;

struct PrimitiveLabel {
    NoiseTier noise_tier = NoiseTier::low;
    bool has_period = false;
    std::optional<std::size_t> period_steps;
    std::vector<IndexInterval> ood_intervals;

    bool has_ood() const { return !ood_intervals.empty(); }
    bool operator==(const PrimitiveLabel&) const = default;
};

/// Peak-to-peak range of base + trend + seasonality, or |base_level| + 1 when flat.
double deterministic_range(const SeriesSpec& spec);

NoiseTier classify_noise(double sigma, double range);

/// Throws SpecValidationError for an invalid spec.
PrimitiveLabel derive_primitive_label(const SeriesSpec& spec);

} // namespace tsrl::series
