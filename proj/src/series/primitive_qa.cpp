#include "tsrl/series/primitive_qa.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "tsrl/series/dsl.hpp"

namespace tsrl::series {
namespace {

constexpr std::array<std::string_view, 6> kNoiseTemplates{
    "How strong is the random noise in this series? Answer low, medium, or high.",
    "Judge the noise level of the plotted metric relative to its overall swing: low, medium, or high?",
    "Ignoring trend and seasonal structure, is the random variation in this series low, medium, or high?",
    "Rate the intensity of the random fluctuations in the chart as low, medium, or high.",
    "What is the noise level of this time series? Choose one of low, medium, high.",
    "Looking at point-to-point jitter, classify the noise as low, medium, or high.",
};

constexpr std::array<std::string_view, 5> kPeriodTemplates{
    "Does this series repeat periodically? If so, give the period length in steps as period=<n>; otherwise answer none.",
    "Identify any repeating pattern in the chart and quantify its period in samples (period=<n>), or answer none.",
    "Is there seasonality in this metric? Reply period=<n> with the cycle length in steps, or none.",
    "How many time steps does one full cycle of this series take? Answer period=<n>, or none if it is not periodic.",
    "Determine whether the series is periodic. Give period=<n> for a period of n steps, or none.",
};

constexpr std::array<std::string_view, 5> kOodTemplates{
    "Are there out-of-distribution segments in this series? List each as [start,end) sample indices separated by ';', or answer none.",
    "Locate every anomalous stretch (spikes, level shifts, bursts of variance) as [start,end) index intervals joined by ';', or none.",
    "Identify unusual segments and give their exact occurrence as half-open index intervals [a,b); use none if there are none.",
    "When do significant anomalies occur? Answer with [start,end) index ranges separated by semicolons, or none.",
    "Mark the out-of-distribution intervals of this series as [start,end) pairs (0-based indices), or reply none.",
};

std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    return x ^ (x >> 33);
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

} // namespace

TaskKind task_kind(PrimitiveTask task) {
    switch (task) {
    case PrimitiveTask::noise: return TaskKind::noise;
    case PrimitiveTask::periodicity: return TaskKind::periodicity;
    case PrimitiveTask::ood: return TaskKind::ood;
    }
    return TaskKind::noise;
}

std::string_view to_string(PrimitiveTask task) { return tsrl::to_string(task_kind(task)); }

std::span<const std::string_view> question_templates(PrimitiveTask task) {
    switch (task) {
    case PrimitiveTask::noise: return kNoiseTemplates;
    case PrimitiveTask::periodicity: return kPeriodTemplates;
    case PrimitiveTask::ood: return kOodTemplates;
    }
    return kNoiseTemplates;
}

std::string format_gold_answer(const PrimitiveLabel& label, PrimitiveTask task) {
    switch (task) {
    case PrimitiveTask::noise: return std::string(to_string(label.noise_tier));
    case PrimitiveTask::periodicity:
        return label.has_period ? fmt::format("period={}", *label.period_steps) : std::string("none");
    case PrimitiveTask::ood: {
        if (label.ood_intervals.empty()) return "none";
        std::string out;
        for (const auto& iv : label.ood_intervals) {
            if (!out.empty()) out += ';';
            out += fmt::format("[{},{})", iv.start, iv.end);
        }
        return out;
    }
    }
    return "none";
}

QASample make_primitive_qa(const LabeledSeries& series, PrimitiveTask task, std::uint64_t seed) {
    const auto pool = question_templates(task);
    const std::uint64_t h = mix(seed ^ mix(series.spec.rng_seed + static_cast<std::uint64_t>(task) * 0x9e37ULL));
    QASample s;
    s.sample_id = fmt::format("prim-{}-{:016x}", to_string(task), h);
    s.task_kind = task_kind(task);
    s.scenario = fmt::format("Synthetic series of {} points sampled every {} starting {}.", series.spec.count,
                             format_duration(series.spec.step), format_rfc3339(series.spec.start_time));
    s.question = std::string(pool[h % pool.size()]);
    s.gold_answer = format_gold_answer(series.label, task);
    s.series_spec = to_json(series.spec);
    s.primitive_label = series.label;
    s.status = SampleStatus::generated;
    return s;
}

SeriesSpec random_primitive_spec(std::uint64_t seed) {
    std::mt19937_64 rng(mix(seed) ^ 0x5eedULL);
    SeriesSpec spec;
    constexpr std::array<std::int64_t, 4> kSteps{300, 900, 3600, 86400};
    spec.step = Duration{kSteps[pick(rng, kSteps.size())]};
    spec.count = 96 + 24 * pick(rng, 9); // 96..288
    spec.start_time = Timestamp{Duration{1704067200 + 86400 * static_cast<std::int64_t>(pick(rng, 365))}};
    spec.base_level = std::round(unit(rng) * 200.0 - 50.0);
    spec.rng_seed = rng();

    if (unit(rng) < 0.5) spec.trend = Trend{(unit(rng) - 0.5) * 0.2};
    if (unit(rng) < 0.6) {
        constexpr std::array<std::size_t, 6> kPeriods{6, 7, 12, 24, 30, 48};
        Seasonality season;
        do {
            season.period = kPeriods[pick(rng, kPeriods.size())];
        } while (2 * season.period > spec.count);
        season.amplitude = 2.0 + unit(rng) * 18.0;
        season.waveform = static_cast<Waveform>(pick(rng, 3));
        spec.seasonality = season;
    }
    // Sigma spread over the tier boundaries.
    const double range = deterministic_range(spec);
    constexpr std::array<double, 3> kRatios{0.005, 0.05, 0.25};
    spec.noise.sigma = range * kRatios[pick(rng, kRatios.size())] * (0.6 + 0.8 * unit(rng));

    const std::size_t n_segments = pick(rng, 3);
    std::size_t cursor = 8;
    for (std::size_t k = 0; k < n_segments; ++k) {
        const std::size_t length = 1 + pick(rng, 8);
        const std::size_t room = spec.count / (n_segments + 1);
        const std::size_t start = cursor + pick(rng, room > length ? room - length : 1);
        if (start + length + 4 > spec.count) break;
        OodSegment seg;
        seg.start_index = start;
        seg.length = length;
        seg.kind = static_cast<OodKind>(pick(rng, 3));
        const double scale = std::max(range, 1.0);
        seg.magnitude = (unit(rng) < 0.5 ? -1.0 : 1.0) * scale * (0.8 + unit(rng));
        if (seg.kind == OodKind::variance_burst) seg.magnitude = 4.0 + unit(rng) * 6.0;
        spec.ood_segments.push_back(seg);
        cursor = start + length + 4;
    }
    spec.plot.title = fmt::format("Series {:08x}", static_cast<std::uint32_t>(spec.rng_seed));
    spec.plot.x_tick_format = spec.step.count() >= 86400 ? "%Y-%m-%d" : "%m-%d %H:%M";
    return spec;
}

} // namespace tsrl::series
