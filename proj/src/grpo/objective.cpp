#include "tsrl/grpo/objective.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace tsrl::grpo {

std::vector<double> group_advantages(const std::vector<double>& rewards) {
    if (rewards.size() < 2) throw ConfigError(fmt::format("group size {} < 2", rewards.size()));
    std::vector<double> a(rewards.size(), 0.0);
    // Tested on the values: the rounded mean of identical rewards can differ from them.
    if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards.front(); })) return a;
    const double n = static_cast<double>(rewards.size());
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double sd = std::sqrt(var / n);
    for (std::size_t i = 0; i < rewards.size(); ++i) a[i] = (rewards[i] - mean) / sd;
    return a;
}

double token_surrogate(double ratio, double advantage, double eps_low, double eps_high) {
    const double clipped = std::clamp(ratio, 1.0 - eps_low, 1.0 + eps_high);
    return std::min(ratio * advantage, clipped * advantage);
}

double kl_penalty(double logp_new, double logp_ref) {
    const double d = logp_ref - logp_new;
    return std::max(0.0, std::expm1(d) - d);
}

RolloutGroup RolloutGroup::from_rollouts(std::vector<Rollout> rollouts) {
    std::vector<double> rewards;
    rewards.reserve(rollouts.size());
    for (const auto& r : rollouts) rewards.push_back(r.reward);
    RolloutGroup g;
    g.advantages = group_advantages(rewards);
    g.rollouts = std::move(rollouts);
    return g;
}

std::string_view to_string(Round r) { return r == Round::perception ? "perception" : "reasoning"; }

std::optional<Round> round_from_string(std::string_view s) {
    if (s == "perception") return Round::perception;
    if (s == "reasoning") return Round::reasoning;
    return std::nullopt;
}

TrainRoundConfig TrainRoundConfig::perception() { return TrainRoundConfig{}; }

TrainRoundConfig TrainRoundConfig::reasoning() {
    TrainRoundConfig c;
    c.round = Round::reasoning;
    c.eps_high = 0.28;
    c.kl_coeff = 0.0;
    return c;
}

std::vector<std::string> validate(const TrainRoundConfig& c) {
    std::vector<std::string> out;
    if (!(c.eps_low > 0.0) || !std::isfinite(c.eps_low)) out.push_back("eps_low must be > 0");
    if (!(c.eps_high >= c.eps_low) || !std::isfinite(c.eps_high)) out.push_back("eps_high must be >= eps_low");
    if (!(c.kl_coeff >= 0.0) || !std::isfinite(c.kl_coeff)) out.push_back("kl_coeff must be >= 0");
    if (c.round == Round::reasoning && c.kl_coeff != 0.0) out.push_back("reasoning round disables the KL term (kl_coeff = 0)");
    if (c.round == Round::perception && c.eps_high != c.eps_low) out.push_back("perception round uses a symmetric clip (eps_high = eps_low)");
    if (c.group_size < 2) out.push_back("group_size must be >= 2");
    if (c.rollout_batch == 0) out.push_back("rollout_batch must be >= 1");
    if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) out.push_back("learning_rate must be finite and >= 0");
    if (c.max_len == 0) out.push_back("max_len must be >= 1");
    return out;
}

nlohmann::json to_json(const TrainRoundConfig& c) {
    return {{"round", to_string(c.round)},   {"eps_low", c.eps_low},
            {"eps_high", c.eps_high},        {"kl_coeff", c.kl_coeff},
            {"group_size", c.group_size},    {"rollout_batch", c.rollout_batch},
            {"learning_rate", c.learning_rate}, {"max_steps", c.max_steps},
            {"max_len", c.max_len},          {"rng_seed", c.rng_seed}};
}

TrainRoundConfig train_config_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("training config must be a JSON object");
    TrainRoundConfig c = TrainRoundConfig::perception();
    if (auto it = doc.find("round"); it != doc.end()) {
        const auto r = it->is_string() ? round_from_string(it->get<std::string>()) : std::nullopt;
        if (!r) throw ConfigError("round must be \"perception\" or \"reasoning\"");
        if (*r == Round::reasoning) c = TrainRoundConfig::reasoning();
    }
    auto real = [&](const char* key, double& out) {
        if (auto it = doc.find(key); it != doc.end()) {
            if (!it->is_number()) throw ConfigError(fmt::format("{} must be a number", key));
            out = it->get<double>();
        }
    };
    auto count = [&](const char* key, auto& out) {
        if (auto it = doc.find(key); it != doc.end()) {
            if (!it->is_number_integer() || it->get<long long>() < 0)
                throw ConfigError(fmt::format("{} must be a nonnegative integer", key));
            out = it->get<std::remove_reference_t<decltype(out)>>();
        }
    };
    real("eps_low", c.eps_low);
    real("eps_high", c.eps_high);
    real("kl_coeff", c.kl_coeff);
    real("learning_rate", c.learning_rate);
    count("group_size", c.group_size);
    count("rollout_batch", c.rollout_batch);
    count("max_steps", c.max_steps);
    count("max_len", c.max_len);
    count("rng_seed", c.rng_seed);
    for (const auto& [key, _] : doc.items()) {
        static const char* known[] = {"round", "eps_low", "eps_high", "kl_coeff", "learning_rate", "group_size",
                                      "rollout_batch", "max_steps", "max_len", "rng_seed"};
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known))
            throw ConfigError(fmt::format("unknown training config key \"{}\"", key));
    }
    return c;
}

ObjectiveResult objective_and_gradient(const std::vector<RolloutGroup>& groups, const ToyPolicy& policy,
                                       const TrainRoundConfig& config) {
    ObjectiveResult res;
    res.gradient.assign(policy.num_parameters(), 0.0);
    const bool use_kl = config.kl_coeff > 0.0;

    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& group = groups[g];
        if (group.rollouts.size() != group.advantages.size())
            throw DataError(fmt::format("group {}: {} rollouts but {} advantages", g, group.rollouts.size(),
                                        group.advantages.size()));
        for (const auto& r : group.rollouts) {
            const std::size_t n = r.length();
            if (n == 0) throw DataError(fmt::format("group {}: empty rollout", g));
            if (r.logp_old.size() != n) throw DataError(fmt::format("group {}: logp_old length mismatch", g));
            if (use_kl && r.logp_ref.size() != n) throw DataError(fmt::format("group {}: logp_ref required when kl_coeff > 0", g));
            res.token_count += n;
        }
    }
    if (res.token_count == 0) return res;
    const double inv_n = 1.0 / static_cast<double>(res.token_count);

    double surrogate = 0.0, kl = 0.0;
    for (const auto& group : groups) {
        for (std::size_t i = 0; i < group.rollouts.size(); ++i) {
            const auto& r = group.rollouts[i];
            const double a = group.advantages[i];
            for (std::size_t t = 0; t < r.length(); ++t) {
                const auto ctx = context_at(policy, r.prompt_id, r.token_ids, t);
                const double lp = policy.token_logp(ctx, r.token_ids[t]);
                const double ratio = std::exp(lp - r.logp_old[t]);
                const double clipped = std::clamp(ratio, 1.0 - config.eps_low, 1.0 + config.eps_high);
                // The unclipped branch carries the gradient; the clipped one is flat in theta.
                const bool unclipped = ratio * a <= clipped * a;
                surrogate += unclipped ? ratio * a : clipped * a;
                double dj_dlp = unclipped ? ratio * a : 0.0;
                if (use_kl) {
                    const double d = r.logp_ref[t] - lp;
                    kl += kl_penalty(lp, r.logp_ref[t]);
                    dj_dlp -= config.kl_coeff * (1.0 - std::exp(d));
                }
                if (dj_dlp != 0.0) policy.accumulate_logp_gradient(ctx, r.token_ids[t], -dj_dlp * inv_n, res.gradient);
            }
        }
    }
    res.surrogate = surrogate * inv_n;
    res.kl = config.kl_coeff * kl * inv_n;
    res.loss = -(res.surrogate - res.kl);
    return res;
}

} // namespace tsrl::grpo
