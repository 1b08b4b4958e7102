#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tsrl/series/label.hpp"

namespace tsrl {

enum class TaskKind { fact_adherent, predictive, event_aware, counterfactual, noise, periodicity, ood };

inline constexpr TaskKind kReasoningTasks[] = {TaskKind::fact_adherent, TaskKind::predictive,
                                              TaskKind::event_aware, TaskKind::counterfactual};
inline constexpr TaskKind kPrimitiveTasks[] = {TaskKind::noise, TaskKind::periodicity, TaskKind::ood};

std::string_view to_string(TaskKind kind);
std::optional<TaskKind> task_kind_from_string(std::string_view s);
/// Reasoning kinds are answered by choosing an option label.
bool is_mcq(TaskKind kind);
/// Human-readable row name, e.g. "Event-Aware".
std::string_view display_name(TaskKind kind);

enum class SampleStatus { generated, judged, rendered, pending_review, accepted, rejected };

std::string_view to_string(SampleStatus s);
std::optional<SampleStatus> sample_status_from_string(std::string_view s);

/// generated -> judged -> rendered -> pending_review -> {accepted, rejected};
/// judged -> rejected when a judge gate fails.
bool is_allowed_transition(SampleStatus from, SampleStatus to);

enum class JudgeKind { necessity, consistency, requirements };

std::string_view to_string(JudgeKind j);
std::optional<JudgeKind> judge_kind_from_string(std::string_view s);

struct JudgeVerdict {
    JudgeKind judge = JudgeKind::requirements;
    bool passed = false;
    std::string detail;
    std::optional<std::vector<bool>> trial_outcomes; // necessity judge only

    bool operator==(const JudgeVerdict&) const = default;
};

struct AnswerOption {
    std::string label;
    std::string text;
    bool operator==(const AnswerOption&) const = default;
};

struct QASample {
    std::string sample_id;
    std::string scenario;
    TaskKind task_kind = TaskKind::fact_adherent;
    std::string question;
    std::vector<AnswerOption> options;
    std::string gold_answer;
    nlohmann::json series_spec; // series DSL document, kept verbatim so invalid specs stay inspectable
    std::optional<series::PrimitiveLabel> primitive_label;
    std::optional<std::string> plot_path;
    SampleStatus status = SampleStatus::generated;
    std::vector<JudgeVerdict> verdicts;
    std::string review_notes;

    bool operator==(const QASample&) const = default;
};

/// Invariant violations (option count, gold label membership). Empty means valid.
std::vector<std::string> check_sample(const QASample& sample);

nlohmann::json to_json(const QASample& sample);
nlohmann::json to_json(const JudgeVerdict& verdict);
nlohmann::json to_json(const series::PrimitiveLabel& label);
/// Throws std::invalid_argument on malformed documents.
QASample sample_from_json(const nlohmann::json& doc);
JudgeVerdict verdict_from_json(const nlohmann::json& doc);
series::PrimitiveLabel label_from_json(const nlohmann::json& doc);

} // namespace tsrl
