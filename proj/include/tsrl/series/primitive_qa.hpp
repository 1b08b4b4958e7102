#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "tsrl/series/sample.hpp"
#include "tsrl/series/synth.hpp"

namespace tsrl::series {

enum class PrimitiveTask { noise, periodicity, ood };

TaskKind task_kind(PrimitiveTask task);
std::string_view to_string(PrimitiveTask task);

/// Question phrasings for one task; selection is by seed.
std::span<const std::string_view> question_templates(PrimitiveTask task);

/// Gold answer in the reward answer grammar: "low|medium|high", "none" or
/// "period=<n>", "none" or "[a,b);[c,d)".
std::string format_gold_answer(const PrimitiveLabel& label, PrimitiveTask task);

QASample make_primitive_qa(const LabeledSeries& series, PrimitiveTask task, std::uint64_t seed);

/// Seeded spec with a randomly chosen mix of trend, seasonality, noise, and OOD segments.
SeriesSpec random_primitive_spec(std::uint64_t seed);

} // namespace tsrl::series
