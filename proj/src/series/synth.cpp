#include "tsrl/series/synth.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "tsrl/series/rng.hpp"

namespace tsrl::series {
namespace {

// Uniform in (0, 1], so log() below never sees zero.
double to_unit_open(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

} // namespace

double counter_normal(std::uint64_t seed, std::uint64_t index) {
    const std::uint64_t key = splitmix64(seed ^ splitmix64(index));
    const double u1 = to_unit_open(splitmix64(key));
    const double u2 = to_unit_open(splitmix64(key ^ 0xd1b54a32d192ed03ULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double seasonal_component(const Seasonality& season, std::size_t index) {
    const std::size_t k = index % season.period;
    const double phase = static_cast<double>(k) / static_cast<double>(season.period);
    switch (season.waveform) {
    case Waveform::sine: return season.amplitude * std::cos(2.0 * std::numbers::pi * phase);
    case Waveform::triangle: {
        const double d = std::min(phase, 1.0 - phase); // distance to the peak at phase 0
        return season.amplitude * (1.0 - 4.0 * d);
    }
    case Waveform::square: return 2 * k < season.period ? season.amplitude : -season.amplitude;
    }
    return 0.0;
}

double spike_shape(std::size_t offset, std::size_t length) {
    const double center = (static_cast<double>(length) - 1.0) / 2.0;
    const double half_width = center + 1.0;
    return 1.0 - std::abs(static_cast<double>(offset) - center) / half_width;
}

LabeledSeries synthesize(const SeriesSpec& spec) {
    LabeledSeries out;
    out.label = derive_primitive_label(spec); // validates
    out.spec = spec;
    out.timestamps.resize(spec.count);
    out.values.resize(spec.count);

    std::vector<double> additive(spec.count, 0.0);
    std::vector<double> sigma(spec.count, spec.noise.sigma);
    for (const auto& seg : spec.ood_segments) {
        for (std::size_t k = 0; k < seg.length; ++k) {
            const std::size_t i = seg.start_index + k;
            switch (seg.kind) {
            case OodKind::spike: additive[i] += seg.magnitude * spike_shape(k, seg.length); break;
            case OodKind::level_shift: additive[i] += seg.magnitude; break;
            case OodKind::variance_burst: sigma[i] *= 1.0 + std::abs(seg.magnitude); break;
            }
        }
    }

    for (std::size_t i = 0; i < spec.count; ++i) {
        out.timestamps[i] = spec.start_time + spec.step * static_cast<std::int64_t>(i);
        double v = spec.base_level;
        if (spec.trend) v += spec.trend->slope * static_cast<double>(i);
        if (spec.seasonality) v += seasonal_component(*spec.seasonality, i);
        v += additive[i];
        if (sigma[i] > 0.0) v += sigma[i] * counter_normal(spec.rng_seed, i);
        out.values[i] = v;
    }
    return out;
}

void write_csv(const LabeledSeries& series, std::ostream& out) {
    out << "timestamp,value\n";
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        out << format_rfc3339(series.timestamps[i]) << ',' << fmt::format("{}", series.values[i]) << '\n';
    }
}

std::string to_csv(const LabeledSeries& series) {
    std::ostringstream os;
    write_csv(series, os);
    return os.str();
}

} // namespace tsrl::series
