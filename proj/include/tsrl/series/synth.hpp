#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tsrl/series/label.hpp"
#include "tsrl/series/spec.hpp"

namespace tsrl::series {

struct LabeledSeries {
    std::vector<Timestamp> timestamps;
    std::vector<double> values;
    PrimitiveLabel label;
    SeriesSpec spec;
};

/// base + trend + seasonal + OOD effects + seeded gaussian noise.
/// Bit-identical for identical specs; throws SpecValidationError.
LabeledSeries synthesize(const SeriesSpec& spec);

/// Seasonal term at index i: sine is a sinusoid peaking at phase 0; triangle and
/// square also start at +amplitude.
double seasonal_component(const Seasonality& season, std::size_t index);

/// Unit-height symmetric triangular bump over a segment of `length` points.
double spike_shape(std::size_t offset, std::size_t length);

/// Standard normal draw that depends only on (seed, index).
double counter_normal(std::uint64_t seed, std::uint64_t index);

/// "timestamp,value" header, RFC 3339 timestamps, shortest round-trip values.
void write_csv(const LabeledSeries& series, std::ostream& out);
std::string to_csv(const LabeledSeries& series);

} // namespace tsrl::series
