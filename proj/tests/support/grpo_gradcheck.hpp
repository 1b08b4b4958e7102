#pragma once

// Finite-difference oracle for the objective gradient on small random policies.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "tsrl/grpo/objective.hpp"

namespace tsrl::oracle {

struct GradCheckCase {
    grpo::ToyPolicy policy;
    std::vector<grpo::RolloutGroup> groups;
};

/// theta, theta_old and theta_ref differ, so ratios spread across the clip range.
inline GradCheckCase make_gradcheck_case(std::uint64_t seed, std::size_t prompts = 2, std::size_t max_len = 3,
                                         std::size_t vocab = 4, std::size_t group = 4) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0), drift(0.0, 0.25);
    std::uniform_real_distribution<double> reward(-0.5, 1.0);
    std::vector<std::string> tokens;
    for (std::size_t k = 0; k < vocab; ++k) tokens.push_back("t" + std::to_string(k));
    grpo::ToyPolicy policy(tokens, prompts, max_len, vocab - 1, std::vector<std::size_t>{0, 1});
    for (double& p : policy.parameters()) p = n01(rng);
    grpo::ToyPolicy old = policy, ref = policy;
    for (double& p : old.parameters()) p += drift(rng);
    for (double& p : ref.parameters()) p += drift(rng);

    GradCheckCase c{policy, {}};
    for (std::size_t pid = 0; pid < prompts; ++pid) {
        std::vector<grpo::Rollout> rs;
        for (std::size_t g = 0; g < group; ++g) {
            auto r = grpo::sample_rollout(old, pid, max_len, rng());
            r.logp_new = grpo::sequence_logp(policy, pid, r.token_ids);
            r.logp_ref = grpo::sequence_logp(ref, pid, r.token_ids);
            r.reward = reward(rng);
            rs.push_back(std::move(r));
        }
        c.groups.push_back(grpo::RolloutGroup::from_rollouts(std::move(rs)));
    }
    return c;
}

struct GradCheckResult {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t parameters = 0;
};

/// Central differences with step h. Relative error is |a - n| / max(|a|, |n|, floor);
/// the floor keeps entries that are zero up to rounding from dividing noise by noise.
inline GradCheckResult gradient_check(const GradCheckCase& c, const grpo::TrainRoundConfig& config, double h = 1e-5,
                                      double floor = 1e-6) {
    const auto analytic = grpo::objective_and_gradient(c.groups, c.policy, config).gradient;
    GradCheckResult out;
    out.parameters = analytic.size();
    grpo::ToyPolicy probe = c.policy;
    for (std::size_t k = 0; k < analytic.size(); ++k) {
        const double base = probe.parameters()[k];
        probe.parameters()[k] = base + h;
        const double up = grpo::objective_and_gradient(c.groups, probe, config).loss;
        probe.parameters()[k] = base - h;
        const double down = grpo::objective_and_gradient(c.groups, probe, config).loss;
        probe.parameters()[k] = base;
        const double numeric = (up - down) / (2.0 * h);
        const double abs_err = std::abs(analytic[k] - numeric);
        const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), floor});
        out.max_abs_error = std::max(out.max_abs_error, abs_err);
        out.max_rel_error = std::max(out.max_rel_error, abs_err / denom);
    }
    return out;
}

} // namespace tsrl::oracle
