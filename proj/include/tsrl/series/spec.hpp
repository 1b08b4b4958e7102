#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tsrl/plot/plot_spec.hpp"
#include "tsrl/series/time.hpp"

namespace tsrl::series {

enum class Waveform { sine, triangle, square };
enum class OodKind { spike, level_shift, variance_burst };

struct Trend {
    double slope = 0.0; // per step
    bool operator==(const Trend&) const = default;
};

struct Seasonality {
    std::size_t period = 24; // steps
    double amplitude = 1.0;
    Waveform waveform = Waveform::sine;
    bool operator==(const Seasonality&) const = default;
};

struct Noise {
    double sigma = 0.0;
    bool operator==(const Noise&) const = default;
};

struct OodSegment {
    std::size_t start_index = 0;
    std::size_t length = 1;
    OodKind kind = OodKind::spike;
    double magnitude = 0.0;

    std::size_t end_index() const { return start_index + length; }
    bool operator==(const OodSegment&) const = default;
};

/// Declarative description of one synthetic series and how to chart it.
struct SeriesSpec {
    Timestamp start_time{Duration{1704067200}}; // 2024-01-01T00:00:00Z
    Duration step{3600};
    std::size_t count = 96;
    double base_level = 0.0;
    std::optional<Trend> trend;
    std::optional<Seasonality> seasonality;
    Noise noise;
    std::vector<OodSegment> ood_segments;
    std::uint64_t rng_seed = 0;
    plot::PlotSpec plot;

    bool operator==(const SeriesSpec&) const = default;
};

class SpecValidationError : public std::runtime_error {
public:
    explicit SpecValidationError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const { return violations_; }

private:
    std::vector<std::string> violations_;
};

/// Every violated invariant, in a stable order. Empty means valid.
std::vector<std::string> validate(const SeriesSpec& spec);

/// Throws SpecValidationError listing every violation.
void require_valid(const SeriesSpec& spec);

std::string_view to_string(Waveform w);
std::string_view to_string(OodKind k);
std::optional<Waveform> waveform_from_string(std::string_view s);
std::optional<OodKind> ood_kind_from_string(std::string_view s);

} // namespace tsrl::series
