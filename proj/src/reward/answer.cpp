#include "tsrl/reward/answer.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

namespace tsrl::reward {
namespace {

constexpr std::string_view kOpenTag = "<answer>";
constexpr std::string_view kCloseTag = "</answer>";

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\n\r\f\v";
    const auto first = s.find_first_not_of(ws);
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(ws);
    return s.substr(first, last - first + 1);
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
    }
    return true;
}

bool is_label_token(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isspace(u) || c == '<' || c == '>' || c == ';') return false;
    }
    return true;
}

std::optional<double> parse_positive(std::string_view s) {
    double value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    if (!std::isfinite(value) || value <= 0) return std::nullopt;
    return value;
}

std::optional<std::size_t> parse_index(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

ParseResult fail(std::string msg) {
    ParseResult r;
    r.error = std::move(msg);
    return r;
}

ParseResult ok(std::string_view raw, AnswerTask task, decltype(ParsedAnswer::payload) payload) {
    ParseResult r;
    r.answer = ParsedAnswer{std::string(raw), task, std::move(payload)};
    return r;
}

ParseResult parse_period(std::string_view text) {
    if (iequals(text, "none")) return ok(text, AnswerTask::periodicity, PeriodPayload{false, std::nullopt});
    const auto eq = text.find('=');
    if (eq == std::string_view::npos || !iequals(trim(text.substr(0, eq)), "period")) {
        return fail(fmt::format("periodicity answer \"{}\" is neither none nor period=<n>", text));
    }
    std::string_view number = trim(text.substr(eq + 1));
    for (std::string_view unit : {"steps", "step"}) {
        if (number.size() > unit.size() && iequals(number.substr(number.size() - unit.size()), unit)) {
            number = trim(number.substr(0, number.size() - unit.size()));
            break;
        }
    }
    auto period = parse_positive(number);
    if (!period) return fail(fmt::format("period \"{}\" is not a positive number", number));
    return ok(text, AnswerTask::periodicity, PeriodPayload{true, *period});
}

ParseResult parse_intervals(std::string_view text, std::optional<std::size_t> series_len) {
    if (iequals(text, "none")) return ok(text, AnswerTask::ood, IntervalPayload{false, {}});
    IntervalPayload payload{true, {}};
    std::string_view rest = text;
    while (true) {
        const auto sep = rest.find(';');
        const std::string_view item = trim(rest.substr(0, sep));
        if (item.size() < 5 || item.front() != '[' || item.back() != ')') {
            return fail(fmt::format("interval \"{}\" is not of the form [a,b)", item));
        }
        const std::string_view inner = item.substr(1, item.size() - 2);
        const auto comma = inner.find(',');
        if (comma == std::string_view::npos) return fail(fmt::format("interval \"{}\" lacks a comma", item));
        auto a = parse_index(inner.substr(0, comma));
        auto b = parse_index(inner.substr(comma + 1));
        if (!a || !b) return fail(fmt::format("interval \"{}\" has non-integer bounds", item));
        if (*a >= *b) return fail(fmt::format("interval \"{}\" is empty or reversed", item));
        if (series_len && *b > *series_len) {
            return fail(fmt::format("interval \"{}\" exceeds series length {}", item, *series_len));
        }
        if (!payload.intervals.empty() && *a < payload.intervals.back().end) {
            return fail(fmt::format("interval \"{}\" overlaps or precedes the previous interval", item));
        }
        payload.intervals.push_back({*a, *b});
        if (sep == std::string_view::npos) break;
        rest = rest.substr(sep + 1);
    }
    return ok(text, AnswerTask::ood, std::move(payload));
}

} // namespace

std::string_view to_string(AnswerTask task) {
    switch (task) {
    case AnswerTask::noise: return "noise";
    case AnswerTask::mcq: return "mcq";
    case AnswerTask::periodicity: return "periodicity";
    case AnswerTask::ood: return "ood";
    }
    return "mcq";
}

std::optional<AnswerTask> answer_task_from_string(std::string_view s) {
    if (s == "mcq") return AnswerTask::mcq;
    if (auto kind = task_kind_from_string(s)) return answer_task_for(*kind);
    return std::nullopt;
}

AnswerTask answer_task_for(TaskKind kind) {
    switch (kind) {
    case TaskKind::noise: return AnswerTask::noise;
    case TaskKind::periodicity: return AnswerTask::periodicity;
    case TaskKind::ood: return AnswerTask::ood;
    default: return AnswerTask::mcq;
    }
}

std::optional<std::string> extract_answer(std::string_view response) {
    struct Tag {
        std::size_t pos;
        bool open;
    };
    std::vector<Tag> tags;
    for (std::size_t i = response.find('<'); i != std::string_view::npos; i = response.find('<', i + 1)) {
        const std::string_view at = response.substr(i);
        if (at.starts_with(kOpenTag)) {
            tags.push_back({i, true});
        } else if (at.starts_with(kCloseTag)) {
            tags.push_back({i, false});
        }
    }
    for (std::size_t k = tags.size(); k-- > 1;) {
        if (!tags[k].open && tags[k - 1].open) {
            const std::size_t begin = tags[k - 1].pos + kOpenTag.size();
            return std::string(trim(response.substr(begin, tags[k].pos - begin)));
        }
    }
    return std::nullopt;
}

ParseResult parse_structured_answer(std::string_view extracted, AnswerTask task, std::optional<std::size_t> series_len) {
    const std::string_view text = trim(extracted);
    if (text.empty()) return fail("empty answer");
    switch (task) {
    case AnswerTask::noise:
    case AnswerTask::mcq:
        if (!is_label_token(text)) return fail(fmt::format("\"{}\" is not a single label token", text));
        return ok(text, task, ChoicePayload{std::string(text)});
    case AnswerTask::periodicity: return parse_period(text);
    case AnswerTask::ood: return parse_intervals(text, series_len);
    }
    return fail("unknown task");
}

std::string serialize(const ParsedAnswer& answer) {
    if (const auto* c = std::get_if<ChoicePayload>(&answer.payload)) return c->choice;
    if (const auto* p = std::get_if<PeriodPayload>(&answer.payload)) {
        return p->exists ? fmt::format("period={}", *p->period) : std::string("none");
    }
    const auto& iv = std::get<IntervalPayload>(answer.payload);
    if (!iv.exists) return "none";
    std::string out;
    for (const auto& i : iv.intervals) {
        if (!out.empty()) out += ';';
        out += fmt::format("[{},{})", i.start, i.end);
    }
    return out;
}

} // namespace tsrl::reward
