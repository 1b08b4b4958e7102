#include "tsrl/series/sample.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace tsrl {

using nlohmann::json;

std::string_view to_string(TaskKind kind) {
    switch (kind) {
    case TaskKind::fact_adherent: return "fact_adherent";
    case TaskKind::predictive: return "predictive";
    case TaskKind::event_aware: return "event_aware";
    case TaskKind::counterfactual: return "counterfactual";
    case TaskKind::noise: return "noise";
    case TaskKind::periodicity: return "periodicity";
    case TaskKind::ood: return "ood";
    }
    return "fact_adherent";
}

std::optional<TaskKind> task_kind_from_string(std::string_view s) {
    for (TaskKind k : {TaskKind::fact_adherent, TaskKind::predictive, TaskKind::event_aware,
                       TaskKind::counterfactual, TaskKind::noise, TaskKind::periodicity, TaskKind::ood}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

bool is_mcq(TaskKind kind) {
    return kind == TaskKind::fact_adherent || kind == TaskKind::predictive || kind == TaskKind::event_aware ||
           kind == TaskKind::counterfactual;
}

std::string_view display_name(TaskKind kind) {
    switch (kind) {
    case TaskKind::fact_adherent: return "Fact-Adherent";
    case TaskKind::predictive: return "Predictive";
    case TaskKind::event_aware: return "Event-Aware";
    case TaskKind::counterfactual: return "Counterfactual";
    case TaskKind::noise: return "Noise";
    case TaskKind::periodicity: return "Periodicity";
    case TaskKind::ood: return "OOD";
    }
    return "";
}

std::string_view to_string(SampleStatus s) {
    switch (s) {
    case SampleStatus::generated: return "generated";
    case SampleStatus::judged: return "judged";
    case SampleStatus::rendered: return "rendered";
    case SampleStatus::pending_review: return "pending_review";
    case SampleStatus::accepted: return "accepted";
    case SampleStatus::rejected: return "rejected";
    }
    return "generated";
}

std::optional<SampleStatus> sample_status_from_string(std::string_view s) {
    for (SampleStatus st : {SampleStatus::generated, SampleStatus::judged, SampleStatus::rendered,
                            SampleStatus::pending_review, SampleStatus::accepted, SampleStatus::rejected}) {
        if (to_string(st) == s) return st;
    }
    return std::nullopt;
}

bool is_allowed_transition(SampleStatus from, SampleStatus to) {
    using S = SampleStatus;
    switch (from) {
    case S::generated: return to == S::judged;
    case S::judged: return to == S::rendered || to == S::rejected;
    case S::rendered: return to == S::pending_review;
    case S::pending_review: return to == S::accepted || to == S::rejected;
    case S::accepted:
    case S::rejected: return false;
    }
    return false;
}

std::string_view to_string(JudgeKind j) {
    switch (j) {
    case JudgeKind::necessity: return "necessity";
    case JudgeKind::consistency: return "consistency";
    case JudgeKind::requirements: return "requirements";
    }
    return "requirements";
}

std::optional<JudgeKind> judge_kind_from_string(std::string_view s) {
    if (s == "necessity") return JudgeKind::necessity;
    if (s == "consistency") return JudgeKind::consistency;
    if (s == "requirements") return JudgeKind::requirements;
    return std::nullopt;
}

std::vector<std::string> check_sample(const QASample& sample) {
    std::vector<std::string> out;
    if (sample.sample_id.empty()) out.emplace_back("sample_id is empty");
    if (is_mcq(sample.task_kind)) {
        if (sample.options.size() != 2 && sample.options.size() != 4) {
            out.push_back(fmt::format("MCQ sample has {} options, expected 2 or 4", sample.options.size()));
        }
        const bool gold_listed = std::any_of(sample.options.begin(), sample.options.end(),
                                             [&](const AnswerOption& o) { return o.label == sample.gold_answer; });
        if (!gold_listed) out.push_back(fmt::format("gold answer \"{}\" is not an option label", sample.gold_answer));
    }
    for (const auto& v : sample.verdicts) {
        if (v.judge == JudgeKind::necessity && (!v.trial_outcomes || v.trial_outcomes->size() != 5)) {
            out.emplace_back("necessity verdict must carry exactly 5 trial outcomes");
        }
    }
    return out;
}

json to_json(const series::PrimitiveLabel& label) {
    json intervals = json::array();
    for (const auto& iv : label.ood_intervals) intervals.push_back({iv.start, iv.end});
    json doc{{"noise_tier", series::to_string(label.noise_tier)},
             {"has_period", label.has_period},
             {"has_ood", label.has_ood()},
             {"ood_intervals", std::move(intervals)}};
    doc["period_steps"] = label.period_steps ? json(*label.period_steps) : json(nullptr);
    return doc;
}

series::PrimitiveLabel label_from_json(const json& doc) {
    series::PrimitiveLabel label;
    auto tier = series::noise_tier_from_string(doc.at("noise_tier").get<std::string>());
    if (!tier) throw std::invalid_argument("unknown noise_tier");
    label.noise_tier = *tier;
    label.has_period = doc.at("has_period").get<bool>();
    if (doc.contains("period_steps") && !doc["period_steps"].is_null()) {
        label.period_steps = doc["period_steps"].get<std::size_t>();
    }
    for (const auto& iv : doc.at("ood_intervals")) {
        label.ood_intervals.push_back({iv.at(0).get<std::size_t>(), iv.at(1).get<std::size_t>()});
    }
    if (label.has_period != label.period_steps.has_value()) {
        throw std::invalid_argument("period_steps must be present iff has_period");
    }
    return label;
}

json to_json(const JudgeVerdict& v) {
    json doc{{"judge", to_string(v.judge)}, {"passed", v.passed}, {"detail", v.detail}};
    if (v.trial_outcomes) doc["trial_outcomes"] = *v.trial_outcomes;
    return doc;
}

JudgeVerdict verdict_from_json(const json& doc) {
    JudgeVerdict v;
    auto judge = judge_kind_from_string(doc.at("judge").get<std::string>());
    if (!judge) throw std::invalid_argument("unknown judge kind");
    v.judge = *judge;
    v.passed = doc.at("passed").get<bool>();
    v.detail = doc.value("detail", "");
    if (doc.contains("trial_outcomes")) v.trial_outcomes = doc["trial_outcomes"].get<std::vector<bool>>();
    return v;
}

json to_json(const QASample& s) {
    json options = json::array();
    for (const auto& o : s.options) options.push_back({{"label", o.label}, {"text", o.text}});
    json verdicts = json::array();
    for (const auto& v : s.verdicts) verdicts.push_back(to_json(v));
    json doc{{"sample_id", s.sample_id},    {"scenario", s.scenario},
             {"task_kind", to_string(s.task_kind)}, {"question", s.question},
             {"options", std::move(options)}, {"gold_answer", s.gold_answer},
             {"series_spec", s.series_spec},  {"status", to_string(s.status)},
             {"verdicts", std::move(verdicts)}};
    doc["plot_path"] = s.plot_path ? json(*s.plot_path) : json(nullptr);
    if (s.primitive_label) doc["primitive_label"] = to_json(*s.primitive_label);
    if (!s.review_notes.empty()) doc["review_notes"] = s.review_notes;
    return doc;
}

QASample sample_from_json(const json& doc) {
    try {
        QASample s;
        s.sample_id = doc.at("sample_id").get<std::string>();
        s.scenario = doc.value("scenario", "");
        auto kind = task_kind_from_string(doc.at("task_kind").get<std::string>());
        if (!kind) throw std::invalid_argument("unknown task_kind");
        s.task_kind = *kind;
        s.question = doc.at("question").get<std::string>();
        for (const auto& o : doc.value("options", json::array())) {
            s.options.push_back({o.at("label").get<std::string>(), o.value("text", "")});
        }
        s.gold_answer = doc.at("gold_answer").get<std::string>();
        s.series_spec = doc.value("series_spec", json(nullptr));
        if (doc.contains("primitive_label") && !doc["primitive_label"].is_null()) {
            s.primitive_label = label_from_json(doc["primitive_label"]);
        }
        if (doc.contains("plot_path") && !doc["plot_path"].is_null()) s.plot_path = doc["plot_path"].get<std::string>();
        auto status = sample_status_from_string(doc.value("status", "generated"));
        if (!status) throw std::invalid_argument("unknown status");
        s.status = *status;
        for (const auto& v : doc.value("verdicts", json::array())) s.verdicts.push_back(verdict_from_json(v));
        s.review_notes = doc.value("review_notes", "");
        return s;
    } catch (const json::exception& e) {
        throw std::invalid_argument(fmt::format("malformed sample document: {}", e.what()));
    }
}

} // namespace tsrl
