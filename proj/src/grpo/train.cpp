#include "tsrl/grpo/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "tsrl/series/dsl.hpp"
#include "tsrl/series/primitive_qa.hpp"
#include "tsrl/series/rng.hpp"
#include "tsrl/series/synth.hpp"

namespace tsrl::grpo {

nlohmann::json to_json(const MetricsRecord& m) {
    nlohmann::json by_task = nlohmann::json::object();
    for (const auto& [k, v] : m.mean_reward_by_task) by_task[k] = v;
    return {{"step", m.step},
            {"round", to_string(m.round)},
            {"mean_reward", m.mean_reward},
            {"mean_reward_by_task", by_task},
            {"format_failure_rate", m.format_failure_rate},
            {"mean_task_reward", m.mean_task_reward},
            {"response_length", m.response_length},
            {"entropy", m.entropy},
            {"kl", m.kl},
            {"loss", m.loss}};
}

void write_trace_jsonl(std::ostream& out, const MetricsTrace& trace) {
    for (const auto& m : trace) out << to_json(m).dump() << '\n';
}

reward::RewardBreakdown grade_response(const QASample& sample, std::string_view response) {
    const auto task = reward::answer_task_for(sample.task_kind);
    std::size_t len = 0;
    if (sample.series_spec.is_object()) {
        if (auto it = sample.series_spec.find("count"); it != sample.series_spec.end() && it->is_number_unsigned())
            len = it->get<std::size_t>();
    }
    return reward::combined_reward(response, reward::GroundTruth::from_gold(task, sample.gold_answer, len));
}

TrainResult train_round(const std::vector<QASample>& dataset, const ToyPolicy& initial, const TrainRoundConfig& config,
                        const RewardFn& reward_fn, std::size_t prompt_base, std::size_t step_base) {
    if (dataset.empty()) throw ConfigError("training dataset is empty");
    if (const auto issues = validate(config); !issues.empty()) throw ConfigError(issues.front());
    if (prompt_base + dataset.size() > initial.num_prompts())
        throw ConfigError(fmt::format("policy has {} prompt slots, round needs {}", initial.num_prompts(),
                                      prompt_base + dataset.size()));

    TrainResult out{initial, {}};
    ToyPolicy& policy = out.policy;
    const ToyPolicy reference = initial; // frozen for the whole round

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size();
    std::uint64_t shuffle_state = derive_seed({config.rng_seed, 0x5b0ff1e});

    for (std::size_t step = 1; step <= config.max_steps; ++step) {
        const std::size_t global_step = step_base + step;
        // pi_old is the current policy: refreshed every step.
        std::vector<RolloutGroup> groups;
        std::vector<std::size_t> group_prompt;
        groups.reserve(config.rollout_batch);

        MetricsRecord m;
        m.step = global_step;
        m.round = config.round;
        std::map<std::string, std::pair<double, std::size_t>> by_task;
        std::size_t n_rollouts = 0, n_format_fail = 0, n_tokens = 0, n_ctx = 0;
        double reward_sum = 0.0, task_sum = 0.0, entropy_sum = 0.0, kl_sum = 0.0;

        for (std::size_t b = 0; b < config.rollout_batch; ++b) {
            if (cursor == order.size()) {
                // Fisher-Yates with the counter RNG keeps the order platform independent.
                for (std::size_t i = order.size(); i > 1; --i) {
                    shuffle_state = splitmix64(shuffle_state);
                    std::swap(order[i - 1], order[shuffle_state % i]);
                }
                cursor = 0;
            }
            const std::size_t idx = order[cursor++];
            const QASample& sample = dataset[idx];
            const std::size_t pid = prompt_base + idx;

            std::vector<Rollout> rollouts;
            for (std::size_t g = 0; g < config.group_size; ++g) {
                const auto seed = derive_seed({config.rng_seed, global_step, pid, g});
                Rollout r = sample_rollout(policy, pid, config.max_len, seed);
                r.logp_ref = sequence_logp(reference, pid, r.token_ids);
                const auto br = reward_fn(sample, policy.detokenize(r.token_ids));
                r.reward = br.combined;

                ++n_rollouts;
                reward_sum += br.combined;
                auto& slot = by_task[std::string(to_string(sample.task_kind))];
                slot.first += br.combined;
                ++slot.second;
                if (br.task_reward) task_sum += *br.task_reward;
                else ++n_format_fail;
                n_tokens += r.length();
                for (std::size_t t = 0; t < r.length(); ++t) {
                    entropy_sum += policy_entropy(policy, context_at(policy, pid, r.token_ids, t));
                    kl_sum += kl_penalty(r.logp_new[t], r.logp_ref[t]);
                    ++n_ctx;
                }
                rollouts.push_back(std::move(r));
            }
            groups.push_back(RolloutGroup::from_rollouts(std::move(rollouts)));
        }

        const auto obj = objective_and_gradient(groups, policy, config);
        if (!std::isfinite(obj.loss)) {
            throw TrainingError(fmt::format("non-finite loss at step {} (surrogate {}, kl {}, tokens {})",
                                            global_step, obj.surrogate, obj.kl, obj.token_count));
        }
        auto params = policy.parameters();
        for (std::size_t k = 0; k < params.size(); ++k) params[k] -= config.learning_rate * obj.gradient[k];

        m.mean_reward = reward_sum / static_cast<double>(n_rollouts);
        for (const auto& [task, acc] : by_task) m.mean_reward_by_task[task] = acc.first / static_cast<double>(acc.second);
        m.format_failure_rate = static_cast<double>(n_format_fail) / static_cast<double>(n_rollouts);
        const std::size_t n_ok = n_rollouts - n_format_fail;
        m.mean_task_reward = n_ok ? task_sum / static_cast<double>(n_ok) : 0.0;
        m.response_length = static_cast<double>(n_tokens) / static_cast<double>(n_rollouts);
        m.entropy = entropy_sum / static_cast<double>(n_ctx);
        m.kl = kl_sum / static_cast<double>(n_ctx);
        m.loss = obj.loss;
        out.trace.push_back(std::move(m));
    }
    return out;
}

std::vector<QASample> toy_mcq_prompts(std::size_t n, std::uint64_t seed) {
    static constexpr std::string_view kLabels[] = {"A", "B", "C", "D"};
    static constexpr std::string_view kDescriptions[] = {
        "The series rises steadily", "The series falls steadily", "The series repeats a daily cycle",
        "The series stays flat apart from noise", "A sudden jump occurs midway", "Variability grows near the end"};
    std::vector<QASample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t h = derive_seed({seed, 0x3c9, i});
        QASample s;
        s.sample_id = fmt::format("toy-mcq-{:016x}", h);
        s.task_kind = kReasoningTasks[i % std::size(kReasoningTasks)];
        s.scenario = fmt::format("Synthetic sensor reading #{}", i);
        s.question = "Which statement best describes the chart?";
        for (std::size_t k = 0; k < 4; ++k) {
            s.options.push_back({std::string(kLabels[k]),
                                 std::string(kDescriptions[(h >> (8 * k)) % std::size(kDescriptions)])});
        }
        s.gold_answer = std::string(kLabels[splitmix64(h) % 4]);
        s.series_spec = series::to_json(series::random_primitive_spec(h));
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<QASample> toy_primitive_prompts(std::size_t n, std::uint64_t seed) {
    std::vector<QASample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t h = derive_seed({seed, 0x9e7, i});
        const auto series = series::synthesize(series::random_primitive_spec(h));
        const auto task = i % 2 == 0 ? series::PrimitiveTask::noise : series::PrimitiveTask::periodicity;
        out.push_back(series::make_primitive_qa(series, task, h));
    }
    return out;
}

ToyVocabulary toy_vocabulary(const std::vector<const std::vector<QASample>*>& datasets) {
    ToyVocabulary v;
    v.tokens = {std::string(kOpenTag), std::string(kFillerToken), std::string(kEosToken)};
    v.eos = 2;
    v.structural = {0, 1, 2};
    std::set<std::string> answers;
    for (const auto* ds : datasets) {
        for (const auto& s : *ds) {
            answers.insert(s.gold_answer);
            for (const auto& o : s.options) answers.insert(o.label);
        }
    }
    for (const auto& a : answers) v.tokens.push_back(a + std::string(kCloseTag));
    return v;
}

std::vector<std::size_t> toy_answer_space(const ToyVocabulary& vocab, const QASample& sample) {
    std::vector<std::string> answers;
    switch (sample.task_kind) {
    case TaskKind::noise: answers = {"low", "medium", "high"}; break;
    case TaskKind::periodicity:
        for (const auto& t : vocab.tokens)
            if (t == "none" + std::string(kCloseTag) || t.rfind("period=", 0) == 0)
                answers.push_back(t.substr(0, t.size() - kCloseTag.size()));
        break;
    default:
        for (const auto& o : sample.options) answers.push_back(o.label);
        if (answers.empty()) answers.push_back(sample.gold_answer);
    }
    std::vector<std::size_t> allowed = vocab.structural;
    for (std::size_t k = 0; k < vocab.tokens.size(); ++k) {
        for (const auto& a : answers)
            if (vocab.tokens[k] == a + std::string(kCloseTag)) allowed.push_back(k);
    }
    return allowed;
}

ToySetup make_toy_setup(const CurriculumConfig& config) {
    auto perception = toy_primitive_prompts(config.perception_prompts, config.seed);
    auto reasoning = toy_mcq_prompts(config.reasoning_prompts, config.seed);
    auto vocab = toy_vocabulary({&perception, &reasoning});
    const std::size_t max_len = std::max(config.perception.max_len, config.reasoning.max_len);
    ToyPolicy policy(vocab.tokens, perception.size() + reasoning.size(), max_len, vocab.eos, vocab.structural);
    std::size_t pid = 0;
    for (const auto* ds : {&perception, &reasoning}) {
        for (const auto& s : *ds) policy.restrict_prompt(pid++, toy_answer_space(vocab, s));
    }
    return {std::move(perception), std::move(reasoning), std::move(vocab), std::move(policy)};
}

CurriculumResult run_toy_curriculum(const CurriculumConfig& config) {
    const auto setup = make_toy_setup(config);
    CurriculumResult res{setup.policy, {}, 0};
    if (config.run_perception && !setup.perception.empty()) {
        auto r1 = train_round(setup.perception, res.policy, config.perception, grade_response, 0, 0);
        res.policy = std::move(r1.policy);
        res.trace = std::move(r1.trace);
        res.perception_steps = res.trace.size();
    }
    auto r2 = train_round(setup.reasoning, res.policy, config.reasoning, grade_response, setup.perception.size(),
                          res.trace.size());
    res.policy = std::move(r2.policy);
    res.trace.insert(res.trace.end(), r2.trace.begin(), r2.trace.end());
    return res;
}

nlohmann::json to_json(const ToyPolicy& policy) {
    std::vector<std::size_t> shared;
    for (std::size_t t = 0; t < policy.vocab_size(); ++t)
        if (policy.is_shared(t)) shared.push_back(t);
    const auto params = policy.parameters();
    return {{"vocab", policy.vocab()},
            {"num_prompts", policy.num_prompts()},
            {"max_len", policy.max_len()},
            {"eos", policy.eos_token() ? nlohmann::json(*policy.eos_token()) : nlohmann::json(nullptr)},
            {"shared_tokens", shared},
            {"parameters", std::vector<double>(params.begin(), params.end())}};
}

void load_parameters(ToyPolicy& policy, const nlohmann::json& doc) {
    try {
        if (doc.at("vocab").get<std::vector<std::string>>() != policy.vocab())
            throw TrainingError("policy file vocabulary does not match");
        if (doc.at("num_prompts").get<std::size_t>() != policy.num_prompts() ||
            doc.at("max_len").get<std::size_t>() != policy.max_len())
            throw TrainingError("policy file shape does not match");
        const auto params = doc.at("parameters").get<std::vector<double>>();
        if (params.size() != policy.num_parameters())
            throw TrainingError(fmt::format("policy file has {} parameters, expected {}", params.size(),
                                            policy.num_parameters()));
        std::copy(params.begin(), params.end(), policy.parameters().begin());
    } catch (const nlohmann::json::exception& e) {
        throw TrainingError(fmt::format("malformed policy file: {}", e.what()));
    }
}

} // namespace tsrl::grpo
