#include "tsrl/grpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "tsrl/series/rng.hpp"

namespace tsrl::grpo {
namespace {

// log-sum-exp normalised log-probabilities.
std::vector<double> log_softmax(std::vector<double> z) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    const double lse = m + std::log(s);
    for (double& v : z) v -= lse;
    return z;
}

} // namespace

ToyPolicy::ToyPolicy(std::vector<std::string> vocab, std::size_t num_prompts, std::size_t max_len,
                     std::optional<std::size_t> eos_token, std::vector<std::size_t> shared_tokens)
    : vocab_(std::move(vocab)), num_prompts_(num_prompts), max_len_(max_len), eos_(eos_token),
      shared_(!shared_tokens.empty()), shared_mask_(vocab_.size(), false) {
    if (vocab_.size() < 2) throw std::invalid_argument("toy policy needs at least two tokens");
    if (num_prompts_ == 0 || max_len_ == 0) throw std::invalid_argument("toy policy needs prompts and max_len >= 1");
    if (eos_ && *eos_ >= vocab_.size()) throw std::invalid_argument("eos token outside the vocabulary");
    for (std::size_t t : shared_tokens) {
        if (t >= vocab_.size()) throw std::invalid_argument("shared token outside the vocabulary");
        shared_mask_[t] = true;
    }
    const std::size_t per_prompt = max_len_ * (vocab_.size() + 1) * vocab_.size();
    params_.assign(per_prompt * (num_prompts_ + (shared_ ? 1 : 0)), 0.0);
    allowed_.resize(num_prompts_);
}

void ToyPolicy::restrict_prompt(std::size_t prompt_id, const std::vector<std::size_t>& allowed) {
    if (prompt_id >= num_prompts_) throw std::out_of_range("prompt outside the policy table");
    std::vector<bool> mask(vocab_.size(), false);
    for (std::size_t t : allowed) mask.at(t) = true;
    if (std::find(mask.begin(), mask.end(), true) == mask.end())
        throw std::invalid_argument("a prompt needs at least one allowed token");
    allowed_[prompt_id] = std::move(mask);
}

bool ToyPolicy::is_allowed(std::size_t prompt_id, std::size_t token) const {
    const auto& m = allowed_.at(prompt_id);
    return m.empty() || m.at(token);
}

void ToyPolicy::check_context(const ContextKey& ctx) const {
    if (ctx.prompt_id >= num_prompts_ || ctx.position >= max_len_ || ctx.prev > vocab_.size()) {
        throw std::out_of_range(fmt::format("context (prompt {}, position {}, prev {}) outside the policy table",
                                            ctx.prompt_id, ctx.position, ctx.prev));
    }
}

std::size_t ToyPolicy::prompt_offset(const ContextKey& ctx) const {
    const std::size_t v = vocab_.size();
    return ((ctx.prompt_id * max_len_ + ctx.position) * (v + 1) + ctx.prev) * v;
}

std::size_t ToyPolicy::shared_offset(const ContextKey& ctx) const {
    const std::size_t v = vocab_.size();
    return ((num_prompts_ * max_len_ + ctx.position) * (v + 1) + ctx.prev) * v;
}

std::vector<double> ToyPolicy::logits(const ContextKey& ctx) const {
    check_context(ctx);
    const std::size_t v = vocab_.size();
    std::vector<double> z(params_.begin() + static_cast<std::ptrdiff_t>(prompt_offset(ctx)),
                          params_.begin() + static_cast<std::ptrdiff_t>(prompt_offset(ctx) + v));
    if (shared_) {
        const std::size_t s = shared_offset(ctx);
        for (std::size_t k = 0; k < v; ++k)
            if (shared_mask_[k]) z[k] += params_[s + k];
    }
    if (const auto& m = allowed_[ctx.prompt_id]; !m.empty()) {
        for (std::size_t k = 0; k < v; ++k)
            if (!m[k]) z[k] = -std::numeric_limits<double>::infinity();
    }
    return z;
}

std::vector<double> ToyPolicy::log_probs(const ContextKey& ctx) const { return log_softmax(logits(ctx)); }

double ToyPolicy::token_logp(const ContextKey& ctx, std::size_t token) const {
    if (token >= vocab_.size()) throw std::out_of_range("token outside the vocabulary");
    return log_probs(ctx)[token];
}

void ToyPolicy::accumulate_logp_gradient(const ContextKey& ctx, std::size_t token, double coeff,
                                         std::span<double> grad) const {
    if (grad.size() != params_.size()) throw std::invalid_argument("gradient buffer size mismatch");
    const auto lp = log_probs(ctx);
    const std::size_t p = prompt_offset(ctx);
    const std::size_t s = shared_ ? shared_offset(ctx) : 0;
    for (std::size_t k = 0; k < lp.size(); ++k) {
        if (!std::isfinite(lp[k])) continue; // masked: no dependence on its logit
        const double d = coeff * ((k == token ? 1.0 : 0.0) - std::exp(lp[k]));
        grad[p + k] += d;
        if (shared_ && shared_mask_[k]) grad[s + k] += d;
    }
}

std::string ToyPolicy::detokenize(std::span<const std::size_t> tokens) const {
    std::string out;
    for (std::size_t t : tokens) {
        if (eos_ && t == *eos_) continue;
        out += vocab_.at(t);
    }
    return out;
}

std::optional<std::size_t> ToyPolicy::token_id(std::string_view text) const {
    for (std::size_t k = 0; k < vocab_.size(); ++k)
        if (vocab_[k] == text) return k;
    return std::nullopt;
}

ContextKey context_at(const ToyPolicy& policy, std::size_t prompt_id, std::span<const std::size_t> tokens,
                      std::size_t t) {
    return {prompt_id, t, t == 0 ? policy.bos() : tokens[t - 1]};
}

double softmax_entropy(std::span<const double> logits) {
    const auto lp = log_softmax(std::vector<double>(logits.begin(), logits.end()));
    double h = 0.0;
    for (double l : lp) {
        const double p = std::exp(l);
        if (p > 0.0 && std::isfinite(l)) h -= p * l;
    }
    return h;
}

double policy_entropy(const ToyPolicy& policy, const ContextKey& ctx) {
    const auto z = policy.logits(ctx);
    return softmax_entropy(z);
}

Rollout sample_rollout(const ToyPolicy& policy, std::size_t prompt_id, std::size_t max_len, std::uint64_t seed) {
    if (max_len == 0) throw std::invalid_argument("max_len must be at least 1");
    max_len = std::min(max_len, policy.max_len());
    Rollout r;
    r.prompt_id = prompt_id;
    std::uint64_t state = seed;
    for (std::size_t t = 0; t < max_len; ++t) {
        const auto lp = policy.log_probs(context_at(policy, prompt_id, r.token_ids, t));
        state = splitmix64(state);
        const double u = to_unit(state);
        double cum = 0.0;
        std::size_t tok = lp.size() - 1;
        for (std::size_t k = 0; k < lp.size(); ++k) {
            cum += std::exp(lp[k]);
            if (u < cum) {
                tok = k;
                break;
            }
        }
        r.token_ids.push_back(tok);
        r.logp_new.push_back(lp[tok]);
        if (policy.eos_token() && tok == *policy.eos_token()) break;
    }
    r.logp_old = r.logp_new;
    return r;
}

std::vector<double> sequence_logp(const ToyPolicy& policy, std::size_t prompt_id,
                                  std::span<const std::size_t> tokens) {
    std::vector<double> out;
    out.reserve(tokens.size());
    for (std::size_t t = 0; t < tokens.size(); ++t)
        out.push_back(policy.token_logp(context_at(policy, prompt_id, tokens, t), tokens[t]));
    return out;
}

} // namespace tsrl::grpo
