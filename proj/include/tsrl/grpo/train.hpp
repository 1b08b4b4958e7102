#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tsrl/grpo/objective.hpp"
#include "tsrl/grpo/policy.hpp"
#include "tsrl/reward/reward.hpp"
#include "tsrl/series/sample.hpp"

namespace tsrl::grpo {

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MetricsRecord {
    std::size_t step = 0; // 1-based, continues across rounds
    Round round = Round::perception;
    double mean_reward = 0.0;
    std::map<std::string, double> mean_reward_by_task;
    double format_failure_rate = 0.0;
    double mean_task_reward = 0.0; // over rollouts that passed the format check
    double response_length = 0.0;  // mean tokens per rollout
    double entropy = 0.0;          // mean over visited contexts, nats
    double kl = 0.0;               // mean per-token estimate against the round-start policy
    double loss = 0.0;
};
using MetricsTrace = std::vector<MetricsRecord>;

nlohmann::json to_json(const MetricsRecord& m);
void write_trace_jsonl(std::ostream& out, const MetricsTrace& trace);

using RewardFn = std::function<reward::RewardBreakdown(const QASample&, std::string_view response)>;

/// Grades against the sample's gold answer with the sample's answer grammar.
reward::RewardBreakdown grade_response(const QASample& sample, std::string_view response);

struct TrainResult {
    ToyPolicy policy;
    MetricsTrace trace;
};

/// Prompt i of `dataset` uses policy prompt id `prompt_base + i`; trace steps start at `step_base + 1`.
TrainResult train_round(const std::vector<QASample>& dataset, const ToyPolicy& policy, const TrainRoundConfig& config,
                        const RewardFn& reward_fn, std::size_t prompt_base = 0, std::size_t step_base = 0);

// Toy curriculum -----------------------------------------------------------

inline constexpr std::string_view kOpenTag = "<answer>";
inline constexpr std::string_view kCloseTag = "</answer>";
inline constexpr std::string_view kEosToken = "<eos>";
inline constexpr std::string_view kFillerToken = "hmm ";

/// Four-option MCQ prompts over synthetic series, gold labels spread over A-D.
std::vector<QASample> toy_mcq_prompts(std::size_t n, std::uint64_t seed);
/// Noise and periodicity primitive prompts from random labelled series.
std::vector<QASample> toy_primitive_prompts(std::size_t n, std::uint64_t seed);
struct ToyVocabulary {
    std::vector<std::string> tokens;
    std::size_t eos = 0;
    std::vector<std::size_t> structural; // open tag, filler, end token
};

/// Open tag, filler, end token, then one "<answer text></answer>" token per option
/// label and gold answer. Folding the close tag into answer tokens means a
/// well-formed response always carries a nonempty answer.
ToyVocabulary toy_vocabulary(const std::vector<const std::vector<QASample>*>& datasets);

/// Structural tokens plus the answer tokens that parse for the sample's task.
std::vector<std::size_t> toy_answer_space(const ToyVocabulary& vocab, const QASample& sample);

struct CurriculumConfig {
    std::size_t perception_prompts = 64;
    std::size_t reasoning_prompts = 64;
    TrainRoundConfig perception = [] {
        auto c = TrainRoundConfig::perception();
        c.max_steps = 200;
        return c;
    }();
    TrainRoundConfig reasoning = TrainRoundConfig::reasoning();
    std::uint64_t seed = 0;
    bool run_perception = true;
};

struct CurriculumResult {
    ToyPolicy policy;
    MetricsTrace trace;
    std::size_t perception_steps = 0;
};

/// Both prompt sets, the shared vocabulary, and the untrained policy with every prompt's
/// answer space applied. Perception prompts take ids [0, P), reasoning prompts follow.
struct ToySetup {
    std::vector<QASample> perception;
    std::vector<QASample> reasoning;
    ToyVocabulary vocab;
    ToyPolicy policy;
};
ToySetup make_toy_setup(const CurriculumConfig& config);

CurriculumResult run_toy_curriculum(const CurriculumConfig& config);

/// {"vocab", "num_prompts", "max_len", "eos", "shared_tokens", "parameters"}
nlohmann::json to_json(const ToyPolicy& policy);
/// Copies parameters from a document written by to_json; the shapes and vocabulary
/// must match. Throws TrainingError.
void load_parameters(ToyPolicy& policy, const nlohmann::json& doc);

} // namespace tsrl::grpo
