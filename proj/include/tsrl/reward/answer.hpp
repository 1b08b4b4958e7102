#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tsrl/series/label.hpp"
#include "tsrl/series/sample.hpp"

namespace tsrl::reward {

using series::IndexInterval;

enum class AnswerTask { noise, mcq, periodicity, ood };

std::string_view to_string(AnswerTask task);
/// Accepts "noise", "mcq", "periodicity", "ood", and every TaskKind name.
std::optional<AnswerTask> answer_task_from_string(std::string_view s);
AnswerTask answer_task_for(TaskKind kind);

struct ChoicePayload {
    std::string choice;
    bool operator==(const ChoicePayload&) const = default;
};

struct PeriodPayload {
    bool exists = false;
    std::optional<double> period; // present iff exists
    bool operator==(const PeriodPayload&) const = default;
};

struct IntervalPayload {
    bool exists = false;
    std::vector<IndexInterval> intervals; // sorted, disjoint, nonempty iff exists
    bool operator==(const IntervalPayload&) const = default;
};

struct ParsedAnswer {
    std::string raw_text;
    AnswerTask task = AnswerTask::mcq;
    std::variant<ChoicePayload, PeriodPayload, IntervalPayload> payload;
};

/// Inner text of the last "<answer>...</answer>" pair with no other tag between
/// the two, whitespace-trimmed. Absent when no such pair exists.
std::optional<std::string> extract_answer(std::string_view response);

struct ParseResult {
    std::optional<ParsedAnswer> answer;
    std::string error;

    explicit operator bool() const { return answer.has_value(); }
};

/// Answer grammar:
///   noise, mcq    a single label token
///   periodicity   "none" | "period=<positive number>" with an optional "steps" suffix
///   ood           "none" | "[a,b)" intervals joined by ';'
/// `series_len`, when given, bounds OOD intervals to [0, series_len).
ParseResult parse_structured_answer(std::string_view extracted, AnswerTask task,
                                    std::optional<std::size_t> series_len = std::nullopt);

/// Canonical text for a parsed answer; parse(serialize(a)) reproduces a's payload.
std::string serialize(const ParsedAnswer& answer);

} // namespace tsrl::reward
