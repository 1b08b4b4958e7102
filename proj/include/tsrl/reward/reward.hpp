#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tsrl/reward/answer.hpp"

namespace tsrl::reward {

inline constexpr double kFormatPenalty = -0.5;

struct RewardBreakdown {
    double format_reward = 0.0;
    std::optional<double> task_reward; // absent when the format check failed
    double combined = 0.0;
    std::string parse_diagnostics;
};

/// -0.5 when no answer could be extracted, 0 otherwise.
double format_reward(const std::optional<std::string>& extraction);

/// Case-insensitive label match for noise and MCQ answers.
double indicator_reward(const ParsedAnswer& pred, std::string_view truth_label);

/// Existence gate, then 1 - |c - c_hat| / c clamped to [0, 1].
double periodicity_reward(const ParsedAnswer& pred, const series::PrimitiveLabel& truth);
double relative_period_reward(double truth_period, double predicted_period);

/// Existence gate, then point-wise F1 over covered indices.
double ood_reward(const ParsedAnswer& pred, const series::PrimitiveLabel& truth, std::size_t series_len);
/// 2TP / (2TP + FP + FN) over the index sets covered by each list; 0 when both are empty.
double interval_f1(const std::vector<IndexInterval>& pred, const std::vector<IndexInterval>& truth);

struct GroundTruth {
    AnswerTask task = AnswerTask::mcq;
    std::string label;                 // noise / mcq
    series::PrimitiveLabel primitive;  // periodicity / ood
    std::size_t series_len = 0;        // ood bounds

    static GroundTruth choice(AnswerTask task, std::string label);
    static GroundTruth periodicity(const series::PrimitiveLabel& label);
    static GroundTruth ood(const series::PrimitiveLabel& label, std::size_t series_len);
    /// From a gold answer written in the answer grammar; throws std::invalid_argument.
    static GroundTruth from_gold(AnswerTask task, std::string_view gold, std::size_t series_len = 0);
};

/// Format reward first; on failure combined = -0.5 and the task reward is absent,
/// otherwise combined equals the task reward.
RewardBreakdown combined_reward(std::string_view response, const GroundTruth& truth);

nlohmann::json to_json(const RewardBreakdown& b);

/// Grades one {"response", "task", "truth", "series_len"?} record.
/// Throws std::invalid_argument for records that cannot be graded.
RewardBreakdown grade_record(const nlohmann::json& record);

} // namespace tsrl::reward
