#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tsrl/grpo/policy.hpp"

namespace tsrl::grpo {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DataError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// z-scores with the population std; all zeros when the std is 0. Throws ConfigError for G < 2.
std::vector<double> group_advantages(const std::vector<double>& rewards);

/// min(ratio * A, clip(ratio, 1 - eps_low, 1 + eps_high) * A)
double token_surrogate(double ratio, double advantage, double eps_low, double eps_high);

/// exp(d) - d - 1 with d = logp_ref - logp_new; nonnegative.
double kl_penalty(double logp_new, double logp_ref);

struct RolloutGroup {
    std::vector<Rollout> rollouts;
    std::vector<double> advantages;

    /// Fills advantages from the rollouts' rewards.
    static RolloutGroup from_rollouts(std::vector<Rollout> rollouts);
};

enum class Round { perception, reasoning };
std::string_view to_string(Round r);
std::optional<Round> round_from_string(std::string_view s);

struct TrainRoundConfig {
    Round round = Round::perception;
    double eps_low = 0.2;
    double eps_high = 0.2;
    double kl_coeff = 1e-3;
    std::size_t group_size = 4;
    std::size_t rollout_batch = 64; // prompts per step, each with group_size rollouts
    // The full-model rate (2e-7) is far too small for a tabular policy.
    double learning_rate = 40.0;
    std::size_t max_steps = 300;
    std::size_t max_len = 4;
    std::uint64_t rng_seed = 0;

    static TrainRoundConfig perception();
    static TrainRoundConfig reasoning();
};

/// Empty when the config is consistent with its round.
std::vector<std::string> validate(const TrainRoundConfig& config);

nlohmann::json to_json(const TrainRoundConfig& config);
/// Missing keys keep the round's defaults; throws ConfigError.
TrainRoundConfig train_config_from_json(const nlohmann::json& doc);

struct ObjectiveResult {
    double loss = 0.0;          // -(surrogate - kl)
    double surrogate = 0.0;     // (1/N) sum of token surrogates
    double kl = 0.0;            // (beta/N) sum of token KL estimates
    std::size_t token_count = 0; // N = sum of |o_i|
    std::vector<double> gradient; // d loss / d theta
};

/// Token-level loss over the batch with global normalizer 1/N. logp_new is recomputed
/// from `policy`; logp_old and logp_ref are constants. Throws DataError on malformed groups.
ObjectiveResult objective_and_gradient(const std::vector<RolloutGroup>& groups, const ToyPolicy& policy,
                                       const TrainRoundConfig& config);

} // namespace tsrl::grpo
