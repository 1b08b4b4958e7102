#include "tsrl/reward/reward.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace tsrl::reward {
namespace {

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

// Total covered length of a sorted, disjoint interval list.
std::size_t covered(const std::vector<IndexInterval>& v) {
    std::size_t n = 0;
    for (const auto& i : v) n += i.length();
    return n;
}

std::size_t overlap(const std::vector<IndexInterval>& a, const std::vector<IndexInterval>& b) {
    std::size_t total = 0, i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const std::size_t lo = std::max(a[i].start, b[j].start);
        const std::size_t hi = std::min(a[i].end, b[j].end);
        if (lo < hi) total += hi - lo;
        if (a[i].end < b[j].end) ++i; else ++j;
    }
    return total;
}

// Collapses unsorted or overlapping lists to a sorted disjoint cover.
std::vector<IndexInterval> normalized(std::vector<IndexInterval> v) {
    std::sort(v.begin(), v.end());
    std::vector<IndexInterval> out;
    for (const auto& i : v) {
        if (i.start >= i.end) continue;
        if (!out.empty() && i.start <= out.back().end) {
            out.back().end = std::max(out.back().end, i.end);
        } else {
            out.push_back(i);
        }
    }
    return out;
}

} // namespace

double format_reward(const std::optional<std::string>& extraction) { return extraction ? 0.0 : kFormatPenalty; }

double indicator_reward(const ParsedAnswer& pred, std::string_view truth_label) {
    const auto* c = std::get_if<ChoicePayload>(&pred.payload);
    if (!c) return 0.0;
    return iequals(c->choice, truth_label) ? 1.0 : 0.0;
}

double relative_period_reward(double truth_period, double predicted_period) {
    const double r = 1.0 - std::abs(truth_period - predicted_period) / truth_period;
    return std::clamp(r, 0.0, 1.0);
}

double periodicity_reward(const ParsedAnswer& pred, const series::PrimitiveLabel& truth) {
    const auto* p = std::get_if<PeriodPayload>(&pred.payload);
    if (!p) return 0.0;
    if (p->exists != truth.has_period) return 0.0;
    if (!p->exists) return 1.0;
    const double gate = 1.0;
    return std::min(gate, relative_period_reward(static_cast<double>(*truth.period_steps), *p->period));
}

double interval_f1(const std::vector<IndexInterval>& pred_in, const std::vector<IndexInterval>& truth_in) {
    const auto pred = normalized(pred_in);
    const auto truth = normalized(truth_in);
    const std::size_t tp = overlap(pred, truth);
    const std::size_t fp = covered(pred) - tp;
    const std::size_t fn = covered(truth) - tp;
    const std::size_t denom = 2 * tp + fp + fn;
    if (tp == 0 || denom == 0) return 0.0;
    return static_cast<double>(2 * tp) / static_cast<double>(denom);
}

double ood_reward(const ParsedAnswer& pred, const series::PrimitiveLabel& truth, std::size_t series_len) {
    const auto* p = std::get_if<IntervalPayload>(&pred.payload);
    if (!p) return 0.0;
    for (const auto& i : p->intervals) {
        if (i.end > series_len) return 0.0;
    }
    if (p->exists != truth.has_ood()) return 0.0;
    if (!p->exists) return 1.0;
    return std::min(1.0, interval_f1(p->intervals, truth.ood_intervals));
}

GroundTruth GroundTruth::choice(AnswerTask task, std::string label) {
    GroundTruth t;
    t.task = task;
    t.label = std::move(label);
    return t;
}

GroundTruth GroundTruth::periodicity(const series::PrimitiveLabel& label) {
    GroundTruth t;
    t.task = AnswerTask::periodicity;
    t.primitive = label;
    return t;
}

GroundTruth GroundTruth::ood(const series::PrimitiveLabel& label, std::size_t series_len) {
    GroundTruth t;
    t.task = AnswerTask::ood;
    t.primitive = label;
    t.series_len = series_len;
    return t;
}

GroundTruth GroundTruth::from_gold(AnswerTask task, std::string_view gold, std::size_t series_len) {
    if (task == AnswerTask::mcq || task == AnswerTask::noise) return choice(task, std::string(gold));
    auto parsed = parse_structured_answer(gold, task, task == AnswerTask::ood ? std::optional{series_len} : std::nullopt);
    if (!parsed) throw std::invalid_argument(fmt::format("gold answer unparseable: {}", parsed.error));
    series::PrimitiveLabel label;
    if (task == AnswerTask::periodicity) {
        const auto& p = std::get<PeriodPayload>(parsed.answer->payload);
        label.has_period = p.exists;
        if (p.exists) {
            if (*p.period != std::floor(*p.period)) throw std::invalid_argument("gold period must be a whole number of steps");
            label.period_steps = static_cast<std::size_t>(*p.period);
        }
        return periodicity(label);
    }
    label.ood_intervals = std::get<IntervalPayload>(parsed.answer->payload).intervals;
    return ood(label, series_len);
}

RewardBreakdown combined_reward(std::string_view response, const GroundTruth& truth) {
    RewardBreakdown b;
    const auto extraction = extract_answer(response);
    b.format_reward = format_reward(extraction);
    if (!extraction) {
        b.combined = kFormatPenalty;
        b.parse_diagnostics = "no answer tag";
        return b;
    }
    const auto bound = truth.task == AnswerTask::ood ? std::optional{truth.series_len} : std::nullopt;
    const auto parsed = parse_structured_answer(*extraction, truth.task, bound);
    double task = 0.0;
    if (!parsed) {
        b.parse_diagnostics = parsed.error;
    } else {
        switch (truth.task) {
        case AnswerTask::noise:
        case AnswerTask::mcq: task = indicator_reward(*parsed.answer, truth.label); break;
        case AnswerTask::periodicity: task = periodicity_reward(*parsed.answer, truth.primitive); break;
        case AnswerTask::ood: task = ood_reward(*parsed.answer, truth.primitive, truth.series_len); break;
        }
    }
    b.task_reward = task;
    b.combined = task;
    return b;
}

nlohmann::json to_json(const RewardBreakdown& b) {
    nlohmann::json doc{{"format_reward", b.format_reward}, {"combined", b.combined}, {"parse_diagnostics", b.parse_diagnostics}};
    doc["task_reward"] = b.task_reward ? nlohmann::json(*b.task_reward) : nlohmann::json(nullptr);
    return doc;
}

RewardBreakdown grade_record(const nlohmann::json& record) {
    if (!record.is_object()) throw std::invalid_argument("record must be a JSON object");
    const auto response = record.find("response");
    const auto task_field = record.find("task");
    const auto truth_field = record.find("truth");
    if (response == record.end() || !response->is_string()) throw std::invalid_argument("record.response must be a string");
    if (task_field == record.end() || !task_field->is_string()) throw std::invalid_argument("record.task must be a string");
    if (truth_field == record.end() || !truth_field->is_string()) throw std::invalid_argument("record.truth must be a string");
    const auto task = answer_task_from_string(task_field->get<std::string>());
    if (!task) throw std::invalid_argument(fmt::format("unknown task \"{}\"", task_field->get<std::string>()));
    std::size_t series_len = 0;
    if (*task == AnswerTask::ood) {
        const auto len = record.find("series_len");
        if (len == record.end() || !len->is_number_integer() || len->get<long long>() < 0) {
            throw std::invalid_argument("ood records need a nonnegative integer series_len");
        }
        series_len = len->get<std::size_t>();
    }
    const auto truth = GroundTruth::from_gold(*task, truth_field->get<std::string>(), series_len);
    return combined_reward(response->get<std::string>(), truth);
}

} // namespace tsrl::reward
